#include "adaptcl/rng.hpp"

#include <cmath>

namespace adaptcl {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001B3ULL;
    }
    return h;
}
}  // namespace

std::uint64_t Rng::mix64(std::uint64_t v) {
    v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ULL;
    v = (v ^ (v >> 27)) * 0x94D049BB133111EBULL;
    return v ^ (v >> 31);
}

Rng::Rng(std::uint64_t seed, std::string_view stream)
    : key_(mix64(mix64(seed + kGolden) ^ fnv1a64(stream))) {}

std::uint64_t Rng::at(std::uint64_t index) const {
    return mix64(key_ + (index + 1) * kGolden);
}

std::uint64_t Rng::next_u64() { return at(counter_++); }

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

float Rng::uniform(float lo, float hi) {
    return lo + (hi - lo) * static_cast<float>(next_double());
}

std::int64_t Rng::next_index(std::int64_t n) {
    const auto wide = static_cast<unsigned __int128>(next_u64()) *
                      static_cast<unsigned __int128>(n);
    return static_cast<std::int64_t>(wide >> 64);
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

}  // namespace adaptcl
