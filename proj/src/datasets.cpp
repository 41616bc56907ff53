#include "adaptcl/datasets.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "adaptcl/errors.hpp"
#include "adaptcl/rng.hpp"

namespace adaptcl {

const char* variant_kind_name(VariantKind k) {
    switch (k) {
        case VariantKind::identity: return "identity";
        case VariantKind::permute: return "permute";
        case VariantKind::invert: return "invert";
        case VariantKind::rotate: return "rotate";
    }
    return "?";
}

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open file: " + path);
    f.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(f.tellg());
    f.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!f) throw FormatError("short read on file: " + path);
    return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in, const std::string& path) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw FormatError("zlib init failed for " + path);
    std::vector<std::uint8_t> out;
    out.reserve(in.size() * 4);
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw FormatError("gzip decode failed for " + path);
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

std::vector<std::uint8_t> read_maybe_gz(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) {
        return gunzip(bytes, path);
    }
    return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off,
                        const std::string& path, const char* field) {
    if (off + 4 > b.size()) {
        throw FormatError("truncated " + std::string(field) + " in " + path);
    }
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) |
           static_cast<std::uint32_t>(b[off + 3]);
}

// Rotate one byte image by `deg` about its center; bilinear, zero fill.
void rotate_image(const std::uint8_t* src, std::uint8_t* dst, std::int64_t h,
                  std::int64_t w, float deg) {
    const double rad = static_cast<double>(deg) * 3.14159265358979323846 / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            // inverse map: rotate destination coords by -deg
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            const double sy = cy + (s * dx + c * dy);
            const double sx = cx + (c * dx - s * dy);
            double v = 0.0;
            const auto y0 = static_cast<std::int64_t>(std::floor(sy));
            const auto x0 = static_cast<std::int64_t>(std::floor(sx));
            const double fy = sy - static_cast<double>(y0);
            const double fx = sx - static_cast<double>(x0);
            for (int oy = 0; oy <= 1; ++oy) {
                for (int ox = 0; ox <= 1; ++ox) {
                    const std::int64_t yy = y0 + oy;
                    const std::int64_t xx = x0 + ox;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    const double wgt = (oy ? fy : 1.0 - fy) * (ox ? fx : 1.0 - fx);
                    v += wgt * static_cast<double>(src[yy * w + xx]);
                }
            }
            const double rounded = std::floor(v + 0.5);
            dst[y * w + x] = static_cast<std::uint8_t>(std::clamp(rounded, 0.0, 255.0));
        }
    }
}

}  // namespace

ImageDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const std::vector<std::uint8_t> img = read_maybe_gz(images_path);
    const std::vector<std::uint8_t> lab = read_maybe_gz(labels_path);

    const std::uint32_t img_magic = read_be32(img, 0, images_path, "image magic");
    if (img_magic != 0x00000803u) {
        throw FormatError("bad image magic in " + images_path + " (got " +
                          std::to_string(img_magic) + ", want 2051)");
    }
    const std::uint32_t n_img = read_be32(img, 4, images_path, "image count");
    const std::uint32_t rows = read_be32(img, 8, images_path, "image rows");
    const std::uint32_t cols = read_be32(img, 12, images_path, "image cols");
    const std::size_t need = 16 + static_cast<std::size_t>(n_img) * rows * cols;
    if (img.size() < need) {
        throw FormatError("truncated image payload in " + images_path + " (have " +
                          std::to_string(img.size()) + " bytes, need " + std::to_string(need) + ")");
    }

    const std::uint32_t lab_magic = read_be32(lab, 0, labels_path, "label magic");
    if (lab_magic != 0x00000801u) {
        throw FormatError("bad label magic in " + labels_path + " (got " +
                          std::to_string(lab_magic) + ", want 2049)");
    }
    const std::uint32_t n_lab = read_be32(lab, 4, labels_path, "label count");
    if (n_img != n_lab) {
        throw FormatError("image/label count mismatch: " + std::to_string(n_img) +
                          " images vs " + std::to_string(n_lab) + " labels");
    }
    if (lab.size() < 8 + n_lab) {
        throw FormatError("truncated label payload in " + labels_path);
    }

    ImageDataset ds;
    ds.n = n_img;
    ds.height = rows;
    ds.width = cols;
    ds.pixels.assign(img.begin() + 16, img.begin() + static_cast<std::ptrdiff_t>(need));
    ds.labels.resize(n_lab);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n_lab; ++i) {
        ds.labels[i] = static_cast<int>(lab[8 + i]);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.classes = max_label + 1;
    return ds;
}

ImageDataset pad_to_32(const ImageDataset& ds) {
    if (ds.height == 32 && ds.width == 32) return ds;
    if (ds.height > 32 || ds.width > 32) {
        throw InputError("pad_to_32: images larger than 32x32");
    }
    ImageDataset out = ds;
    out.height = 32;
    out.width = 32;
    out.pixels.assign(static_cast<std::size_t>(ds.n) * 32 * 32, 0);
    const std::int64_t oy = (32 - ds.height) / 2;
    const std::int64_t ox = (32 - ds.width) / 2;
    for (std::int64_t i = 0; i < ds.n; ++i) {
        const std::uint8_t* src = ds.image(i);
        std::uint8_t* dst = out.pixels.data() + i * 32 * 32;
        for (std::int64_t y = 0; y < ds.height; ++y) {
            std::memcpy(dst + (y + oy) * 32 + ox, src + y * ds.width,
                        static_cast<std::size_t>(ds.width));
        }
    }
    return out;
}

ImageDataset apply_variant(const ImageDataset& ds, const VariantSpec& spec) {
    ImageDataset out = ds;
    const std::int64_t px = ds.height * ds.width;
    switch (spec.kind) {
        case VariantKind::identity:
            break;
        case VariantKind::invert:
            for (auto& v : out.pixels) v = static_cast<std::uint8_t>(255 - v);
            out.name = ds.name + "+invert";
            break;
        case VariantKind::permute: {
            std::vector<std::int64_t> perm(static_cast<std::size_t>(px));
            std::iota(perm.begin(), perm.end(), 0);
            Rng rng(spec.seed, "variant/permute");
            rng.shuffle(perm);
            for (std::int64_t i = 0; i < ds.n; ++i) {
                const std::uint8_t* src = ds.image(i);
                std::uint8_t* dst = out.pixels.data() + i * px;
                for (std::int64_t p = 0; p < px; ++p) {
                    dst[p] = src[perm[static_cast<std::size_t>(p)]];
                }
            }
            out.name = ds.name + "+permute";
            break;
        }
        case VariantKind::rotate: {
            Rng rng(spec.seed, "variant/rotate/" + ds.split);
            for (std::int64_t i = 0; i < ds.n; ++i) {
                const float deg = rng.uniform(spec.rotation_min_degrees,
                                              spec.rotation_max_degrees);
                rotate_image(ds.image(i), out.pixels.data() + i * px, ds.height,
                             ds.width, deg);
            }
            out.name = ds.name + "+rotate";
            break;
        }
    }
    return out;
}

NormStats compute_norm_stats(const ImageDataset& train) {
    NormStats st;
    double acc = 0.0;
    for (const auto v : train.pixels) acc += static_cast<double>(v) / 255.0;
    const double n = static_cast<double>(train.pixels.size());
    st.mean = acc / n;
    double var = 0.0;
    for (const auto v : train.pixels) {
        const double d = static_cast<double>(v) / 255.0 - st.mean;
        var += d * d;
    }
    st.stddev = std::sqrt(var / n);
    if (st.stddev < 1e-6) st.stddev = 1e-6;
    return st;
}

Tensor PreparedDataset::batch(const std::vector<std::int64_t>& indices,
                              std::int64_t first, std::int64_t count,
                              std::vector<int>* labels_out) const {
    const std::int64_t px = raw.height * raw.width;
    Tensor out = Tensor::zeros({count, 1, raw.height, raw.width});
    if (labels_out) labels_out->resize(static_cast<std::size_t>(count));
    const float mean = static_cast<float>(stats.mean);
    const float inv_std = static_cast<float>(1.0 / stats.stddev);
    for (std::int64_t k = 0; k < count; ++k) {
        const std::int64_t i = indices[static_cast<std::size_t>(first + k)];
        const std::uint8_t* src = raw.image(i);
        float* dst = out.data.data() + k * px;
        for (std::int64_t p = 0; p < px; ++p) {
            dst[p] = (static_cast<float>(src[p]) / 255.0f - mean) * inv_std;
        }
        if (labels_out) (*labels_out)[static_cast<std::size_t>(k)] = raw.labels[static_cast<std::size_t>(i)];
    }
    return out;
}

Tensor PreparedDataset::image(std::int64_t i) const {
    std::vector<std::int64_t> idx{i};
    Tensor b = batch(idx, 0, 1, nullptr);
    b.shape = {1, raw.height, raw.width};
    return b;
}

PreparedDataset prepare(const ImageDataset& ds) {
    PreparedDataset out;
    out.raw = (ds.height == 32 && ds.width == 32) ? ds : pad_to_32(ds);
    out.stats = compute_norm_stats(out.raw);
    return out;
}

PreparedDataset prepare_with_stats(const ImageDataset& ds, const NormStats& stats) {
    PreparedDataset out;
    out.raw = (ds.height == 32 && ds.width == 32) ? ds : pad_to_32(ds);
    out.stats = stats;
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic sequence

namespace {

ImageDataset synth_base_split(const SyntheticConfig& cfg, int per_class,
                              const std::vector<std::uint8_t>& templates,
                              const char* split) {
    const std::int64_t sz = cfg.image_size;
    const std::int64_t px = sz * sz;
    ImageDataset ds;
    ds.n = static_cast<std::int64_t>(per_class) * cfg.classes;
    ds.height = sz;
    ds.width = sz;
    ds.classes = cfg.classes;
    ds.split = split;
    ds.name = "synthetic";
    ds.pixels.resize(static_cast<std::size_t>(ds.n) * px);
    ds.labels.resize(static_cast<std::size_t>(ds.n));
    Rng noise(cfg.seed, std::string("synthetic/noise/") + split);
    std::int64_t i = 0;
    for (int c = 0; c < cfg.classes; ++c) {
        for (int k = 0; k < per_class; ++k, ++i) {
            ds.labels[static_cast<std::size_t>(i)] = c;
            std::uint8_t* dst = ds.pixels.data() + i * px;
            const std::uint8_t* tpl = templates.data() + static_cast<std::size_t>(c) * px;
            for (std::int64_t p = 0; p < px; ++p) {
                const double v = static_cast<double>(tpl[p]) + 25.0 * noise.normal();
                dst[p] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
            }
        }
    }
    return ds;
}

ImageDataset synth_shift_task(const ImageDataset& base, const SyntheticConfig& cfg,
                              int task_idx) {
    if (task_idx == 0 || cfg.identical_tasks) return base;
    ImageDataset out = base;
    const std::int64_t px = base.height * base.width;
    if (cfg.shift == ShiftKind::strong) {
        // Disjoint domains: a task-specific pixel bijection plus inversion.
        std::vector<std::int64_t> perm(static_cast<std::size_t>(px));
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(cfg.seed, "synthetic/permute/task" + std::to_string(task_idx));
        rng.shuffle(perm);
        for (std::int64_t i = 0; i < base.n; ++i) {
            const std::uint8_t* src = base.image(i);
            std::uint8_t* dst = out.pixels.data() + i * px;
            for (std::int64_t p = 0; p < px; ++p) {
                dst[p] = static_cast<std::uint8_t>(255 - src[perm[static_cast<std::size_t>(p)]]);
            }
        }
    } else {
        // Overlapping domains: small per-image rotations that grow with the
        // task index.
        Rng rng(cfg.seed, "synthetic/rotate/task" + std::to_string(task_idx) + "/" + base.split);
        const float max_deg = 7.5f * static_cast<float>(task_idx);
        for (std::int64_t i = 0; i < base.n; ++i) {
            const float deg = rng.uniform(0.0f, max_deg);
            rotate_image(base.image(i), out.pixels.data() + i * px, base.height,
                         base.width, deg);
        }
    }
    return out;
}

}  // namespace

TaskSequence synthetic_sequence(const SyntheticConfig& cfg) {
    if (cfg.n_tasks <= 0 || cfg.train_per_class <= 0 || cfg.test_per_class <= 0 ||
        cfg.classes <= 1 || cfg.image_size <= 0) {
        throw InputError("synthetic_sequence: sizes must be positive (classes >= 2)");
    }
    const std::int64_t px = static_cast<std::int64_t>(cfg.image_size) * cfg.image_size;
    std::vector<std::uint8_t> templates(static_cast<std::size_t>(cfg.classes) * px);
    Rng trng(cfg.seed, "synthetic/templates");
    for (auto& v : templates) {
        v = trng.next_double() < 0.5 ? 30 : 220;
    }
    const ImageDataset base_train = synth_base_split(cfg, cfg.train_per_class, templates, "train");
    const ImageDataset base_test = synth_base_split(cfg, cfg.test_per_class, templates, "test");

    TaskSequence seq;
    seq.name = cfg.identical_tasks
                   ? "synthetic_identical"
                   : (cfg.shift == ShiftKind::strong ? "synthetic_strong" : "synthetic_mild");
    seq.image_h = cfg.image_size;
    seq.image_w = cfg.image_size;
    seq.classes = cfg.classes;
    for (int t = 0; t < cfg.n_tasks; ++t) {
        ImageDataset tr = synth_shift_task(base_train, cfg, t);
        ImageDataset te = synth_shift_task(base_test, cfg, t);
        tr.name = seq.name + "/task" + std::to_string(t);
        te.name = tr.name;
        Task task;
        task.name = tr.name;
        NormStats st = compute_norm_stats(tr);
        task.train.raw = std::move(tr);
        task.train.stats = st;
        task.test.raw = std::move(te);
        task.test.stats = st;
        seq.tasks.push_back(std::move(task));
    }
    return seq;
}

TaskSequence mnist_variant_sequence(const std::string& data_dir,
                                    const std::vector<VariantSpec>& variants,
                                    std::uint64_t seed, bool shared_stats) {
    auto find_file = [&](const char* stem) {
        const std::string plain = data_dir + "/" + stem;
        std::ifstream f(plain, std::ios::binary);
        if (f) return plain;
        const std::string gz = plain + ".gz";
        std::ifstream g(gz, std::ios::binary);
        if (g) return gz;
        throw FormatError("dataset file not found: " + plain + "[.gz]");
    };
    ImageDataset train = load_idx(find_file("train-images-idx3-ubyte"),
                                  find_file("train-labels-idx1-ubyte"));
    ImageDataset test = load_idx(find_file("t10k-images-idx3-ubyte"),
                                 find_file("t10k-labels-idx1-ubyte"));
    train.name = "mnist";
    train.split = "train";
    test.name = "mnist";
    test.split = "test";
    train = pad_to_32(train);
    test = pad_to_32(test);

    TaskSequence seq;
    seq.name = "mnist_variants";
    seq.image_h = 32;
    seq.image_w = 32;
    seq.classes = 10;
    NormStats first_stats;
    for (std::size_t t = 0; t < variants.size(); ++t) {
        VariantSpec spec = variants[t];
        // Derive a per-task stream so two tasks with the same kind differ.
        spec.seed = Rng(seed, "variant/task" + std::to_string(t)).next_u64();
        ImageDataset tr = apply_variant(train, spec);
        ImageDataset te = apply_variant(test, spec);
        Task task;
        task.name = std::string("mnist_") + variant_kind_name(spec.kind);
        NormStats st = compute_norm_stats(tr);
        if (t == 0) first_stats = st;
        if (shared_stats) st = first_stats;
        task.train.raw = std::move(tr);
        task.train.stats = st;
        task.test.raw = std::move(te);
        task.test.stats = st;
        seq.tasks.push_back(std::move(task));
    }
    return seq;
}

}  // namespace adaptcl
