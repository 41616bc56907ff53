#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adaptcl/tensor.hpp"

namespace adaptcl {

class Network;

/// Versioned binary container: magic "ACLK1" followed by one record per
/// tensor until end-of-file. Record layout (little-endian):
///   u32 name length, name bytes, u8 dtype (1 = f32, 2 = packed bits),
///   u8 rank, u64 extents[rank], payload.
/// Bit tensors are packed LSB-first, 8 entries per byte.
struct CheckpointRecord {
    std::string name;
    std::uint8_t dtype = 1;
    Tensor tensor;  // bit tensors are expanded to 0.0/1.0 floats in memory
};

void write_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> read_checkpoint(const std::string& path);

/// Collects every weight, bias, threshold, mask and batch-norm tensor of the
/// network. Masks are tagged as bit tensors.
std::vector<CheckpointRecord> snapshot_network(const Network& net);

void save_network(const std::string& path, const Network& net);
/// Loads into an already-built network of the same architecture; names and
/// shapes must match. Throws FormatError otherwise.
void load_network(const std::string& path, Network& net);

}  // namespace adaptcl
