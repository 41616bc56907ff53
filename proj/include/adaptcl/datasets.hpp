#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaptcl/tensor.hpp"

namespace adaptcl {

/// Raw grayscale images (0-255 bytes) with integer labels.
struct ImageDataset {
    std::vector<std::uint8_t> pixels;  // [N * H * W], row-major per image
    std::vector<int> labels;           // [N]
    std::int64_t n = 0, height = 0, width = 0;
    int classes = 10;
    std::string name;
    std::string split;  // "train" or "test"

    std::uint8_t* image(std::int64_t i) { return pixels.data() + i * height * width; }
    const std::uint8_t* image(std::int64_t i) const {
        return pixels.data() + i * height * width;
    }
};

enum class VariantKind { identity, permute, invert, rotate };

/// Domain-shift transform applied to byte images before normalization.
/// permute: one fixed pixel bijection for the whole dataset; invert:
/// v -> 255 - v; rotate: per-image uniform angle in rotation_range_degrees,
/// bilinear resampling about the center, zero fill.
struct VariantSpec {
    VariantKind kind = VariantKind::identity;
    std::uint64_t seed = 5;
    float rotation_min_degrees = 0.0f;
    float rotation_max_degrees = 45.0f;
};

const char* variant_kind_name(VariantKind k);

/// Decodes a big-endian IDX pair (images magic 0x00000803, labels magic
/// 0x00000801). Gzip-compressed files are detected by their magic bytes and
/// inflated transparently. Image/label counts are cross-checked.
ImageDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Zero-pads H x W byte images to 32 x 32 (no-op when already 32 x 32).
ImageDataset pad_to_32(const ImageDataset& ds);

ImageDataset apply_variant(const ImageDataset& ds, const VariantSpec& spec);

/// Normalization statistics computed on a training split: images are scaled
/// to [0,1] and standardized as (v/255 - mean)/std. std is floored at 1e-6.
struct NormStats {
    double mean = 0.0;
    double stddev = 1.0;
};

NormStats compute_norm_stats(const ImageDataset& train);

/// Byte images plus the statistics that turn them into normalized floats.
/// Batches are materialized on demand to keep full-size datasets cheap.
struct PreparedDataset {
    ImageDataset raw;
    NormStats stats;

    std::int64_t size() const { return raw.n; }
    /// Normalized [count, 1, H, W] batch gathered from `indices[first..)`.
    Tensor batch(const std::vector<std::int64_t>& indices, std::int64_t first,
                 std::int64_t count, std::vector<int>* labels_out) const;
    /// Single normalized image [1, H, W].
    Tensor image(std::int64_t i) const;
};

/// Pads, computes stats from `ds` itself (train split behaviour).
PreparedDataset prepare(const ImageDataset& ds);
/// Pads and reuses the provided (training-split) statistics.
PreparedDataset prepare_with_stats(const ImageDataset& ds, const NormStats& stats);

struct Task {
    std::string name;
    PreparedDataset train;
    PreparedDataset test;
};

struct TaskSequence {
    std::string name;
    std::vector<Task> tasks;
    std::int64_t image_h = 0, image_w = 0;
    int classes = 0;

    std::size_t size() const { return tasks.size(); }
};

enum class ShiftKind { mild, strong };

struct SyntheticConfig {
    int n_tasks = 3;
    int train_per_class = 150;
    int test_per_class = 60;
    int classes = 4;
    int image_size = 8;
    ShiftKind shift = ShiftKind::strong;
    std::uint64_t seed = 5;
    bool identical_tasks = false;  // every task repeats task 0's data
};

/// Deterministic template-plus-noise image tasks. Strong shift applies a
/// per-task pixel permutation and color inversion (disjoint distributions);
/// mild shift applies small per-image rotations (overlapping distributions).
TaskSequence synthetic_sequence(const SyntheticConfig& cfg);

/// MNIST-variant sequence built from IDX files under `data_dir`
/// (train-images-idx3-ubyte[.gz] etc.). `variants` lists one VariantSpec per
/// task. When `shared_stats` is set, every task reuses task 0's
/// normalization statistics instead of its own.
TaskSequence mnist_variant_sequence(const std::string& data_dir,
                                    const std::vector<VariantSpec>& variants,
                                    std::uint64_t seed, bool shared_stats = false);

}  // namespace adaptcl
