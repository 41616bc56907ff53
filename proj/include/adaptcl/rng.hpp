#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace adaptcl {

/// Deterministic counter-based generator. Every stochastic choice in the
/// project (weight init, shuffling, permutations, rotation angles, synthetic
/// data) draws from a named substream so that adding a consumer never shifts
/// the values another consumer sees.
///
/// output(i) = mix64(key + (i+1) * GOLDEN), with key derived from
/// (seed, stream name). mix64 is the splitmix64 finalizer, so values are
/// platform-independent and the stream is pure state = f(seed, name, counter).
class Rng {
  public:
    Rng(std::uint64_t seed, std::string_view stream);

    std::uint64_t next_u64();
    /// Value at an absolute counter position, without advancing.
    std::uint64_t at(std::uint64_t index) const;

    /// Uniform in [0,1), 53-bit resolution.
    double next_double();
    float next_float() { return static_cast<float>(next_double()); }
    float uniform(float lo, float hi);
    /// Uniform integer in [0, n), n > 0. Multiply-shift, no modulo bias.
    std::int64_t next_index(std::int64_t n);
    /// Standard normal via Box-Muller (caches the spare value).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
            const std::int64_t j = next_index(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

    static std::uint64_t mix64(std::uint64_t v);

  private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace adaptcl
