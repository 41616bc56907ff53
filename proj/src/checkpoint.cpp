#include "adaptcl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "adaptcl/errors.hpp"
#include "adaptcl/layers.hpp"

namespace adaptcl {

namespace {

constexpr char kMagic[5] = {'A', 'C', 'L', 'K', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FormatError("checkpoint: truncated " + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is, const std::string& what) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw FormatError("checkpoint: truncated " + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    for (const CheckpointRecord& rec : records) {
        put_u32(os, static_cast<std::uint32_t>(rec.name.size()));
        os.write(rec.name.data(), static_cast<std::streamsize>(rec.name.size()));
        os.put(static_cast<char>(rec.dtype));
        os.put(static_cast<char>(rec.tensor.rank()));
        for (const auto d : rec.tensor.shape) put_u64(os, static_cast<std::uint64_t>(d));
        if (rec.dtype == 1) {
            for (const float v : rec.tensor.data) {
                std::uint32_t bits;
                std::memcpy(&bits, &v, 4);
                put_u32(os, bits);
            }
        } else if (rec.dtype == 2) {
            const std::size_t n = rec.tensor.data.size();
            std::vector<unsigned char> packed((n + 7) / 8, 0);
            for (std::size_t i = 0; i < n; ++i) {
                if (rec.tensor.data[i] != 0.0f) {
                    packed[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
                }
            }
            os.write(reinterpret_cast<const char*>(packed.data()),
                     static_cast<std::streamsize>(packed.size()));
        } else {
            throw FormatError("checkpoint: unknown dtype tag " + std::to_string(rec.dtype));
        }
    }
    if (!os) throw FormatError("checkpoint: write failed for " + path);
}

std::vector<CheckpointRecord> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint: " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, kMagic, 5) != 0) {
        throw FormatError("bad checkpoint magic in " + path);
    }
    std::vector<CheckpointRecord> records;
    while (true) {
        if (is.peek() == std::char_traits<char>::eof()) break;
        CheckpointRecord rec;
        const std::uint32_t name_len = get_u32(is, "name length");
        rec.name.resize(name_len);
        is.read(rec.name.data(), name_len);
        if (!is) throw FormatError("checkpoint: truncated name");
        const int dtype = is.get();
        const int rank = is.get();
        if (dtype == std::char_traits<char>::eof() || rank == std::char_traits<char>::eof()) {
            throw FormatError("checkpoint: truncated header for " + rec.name);
        }
        rec.dtype = static_cast<std::uint8_t>(dtype);
        std::vector<std::int64_t> shape;
        for (int i = 0; i < rank; ++i) {
            shape.push_back(static_cast<std::int64_t>(get_u64(is, "extent of " + rec.name)));
        }
        const std::int64_t n = shape_numel(shape);
        rec.tensor = Tensor::zeros(shape);
        if (rec.dtype == 1) {
            for (std::int64_t i = 0; i < n; ++i) {
                const std::uint32_t bits = get_u32(is, "payload of " + rec.name);
                float v;
                std::memcpy(&v, &bits, 4);
                rec.tensor.data[static_cast<std::size_t>(i)] = v;
            }
        } else if (rec.dtype == 2) {
            std::vector<unsigned char> packed(static_cast<std::size_t>((n + 7) / 8));
            is.read(reinterpret_cast<char*>(packed.data()),
                    static_cast<std::streamsize>(packed.size()));
            if (!is) throw FormatError("checkpoint: truncated bit payload of " + rec.name);
            for (std::int64_t i = 0; i < n; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                rec.tensor.data[ui] = (packed[ui / 8] >> (ui % 8)) & 1u ? 1.0f : 0.0f;
            }
        } else {
            throw FormatError("checkpoint: unknown dtype tag for " + rec.name);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<CheckpointRecord> snapshot_network(const Network& net) {
    std::vector<CheckpointRecord> records;
    for (const auto& layer : net.layers()) {
        const std::string& ln = layer->name();
        if (const MaskedLayerState* st = layer->masked_state()) {
            records.push_back({ln + ".weight", 1, st->weight});
            records.push_back({ln + ".threshold", 1, st->threshold});
            records.push_back({ln + ".prune_mask", 2, st->prune_mask});
            records.push_back({ln + ".freeze_mask", 2, st->freeze_mask});
            if (const auto* d = dynamic_cast<const DenseLayer*>(layer.get())) {
                if (d->has_bias()) records.push_back({ln + ".bias", 1, d->bias});
            } else if (const auto* c = dynamic_cast<const ConvLayer*>(layer.get())) {
                records.push_back({ln + ".bias", 1, c->bias});
            }
        } else if (const auto* bn = dynamic_cast<const BatchNormLayer*>(layer.get())) {
            records.push_back({ln + ".gain", 1, bn->gain});
            records.push_back({ln + ".bias", 1, bn->bias});
            records.push_back({ln + ".running_mean", 1, bn->running_mean});
            records.push_back({ln + ".running_var", 1, bn->running_var});
            Tensor frozen({1}, {bn->frozen ? 1.0f : 0.0f});
            records.push_back({ln + ".frozen", 2, frozen});
        }
    }
    return records;
}

void save_network(const std::string& path, const Network& net) {
    write_checkpoint(path, snapshot_network(net));
}

void load_network(const std::string& path, Network& net) {
    const std::vector<CheckpointRecord> records = read_checkpoint(path);
    std::map<std::string, const CheckpointRecord*> by_name;
    for (const CheckpointRecord& rec : records) by_name[rec.name] = &rec;

    auto take = [&](const std::string& name, Tensor& dst) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("checkpoint missing tensor: " + name);
        if (it->second->tensor.shape != dst.shape) {
            throw FormatError("checkpoint shape mismatch for " + name);
        }
        dst = it->second->tensor;
    };

    for (auto& layer : net.layers()) {
        const std::string& ln = layer->name();
        if (MaskedLayerState* st = layer->masked_state()) {
            take(ln + ".weight", st->weight);
            take(ln + ".threshold", st->threshold);
            take(ln + ".prune_mask", st->prune_mask);
            take(ln + ".freeze_mask", st->freeze_mask);
            if (auto* d = dynamic_cast<DenseLayer*>(layer.get())) {
                if (d->has_bias()) take(ln + ".bias", d->bias);
            } else if (auto* c = dynamic_cast<ConvLayer*>(layer.get())) {
                take(ln + ".bias", c->bias);
            }
        } else if (auto* bn = dynamic_cast<BatchNormLayer*>(layer.get())) {
            take(ln + ".gain", bn->gain);
            take(ln + ".bias", bn->bias);
            take(ln + ".running_mean", bn->running_mean);
            take(ln + ".running_var", bn->running_var);
            Tensor frozen({1}, {0.0f});
            take(ln + ".frozen", frozen);
            bn->frozen = frozen.data[0] != 0.0f;
        }
    }
}

}  // namespace adaptcl
