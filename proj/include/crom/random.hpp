#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace crom {

// Stream tags for deriving independent substreams from one root seed.
// Encoder and decoder regenerate identical randomness from the header seed,
// so every consumer must draw from its own derived stream.
namespace stream_tag {
inline constexpr std::uint64_t transform = 0x7472616e73666f72ULL;
inline constexpr std::uint64_t source = 0x736f757263650000ULL;
inline constexpr std::uint64_t codec = 0x636f646563000000ULL;
inline constexpr std::uint64_t codebook = 0x636f6465626f6f6bULL;
inline constexpr std::uint64_t channel = 0x6368616e6e656c00ULL;
}  // namespace stream_tag

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic substream seed from (root, tag, index).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag, std::uint64_t index = 0) {
    std::uint64_t s = root;
    std::uint64_t a = splitmix64(s);
    s ^= tag;
    std::uint64_t b = splitmix64(s);
    s ^= index * 0x9e3779b97f4a7c15ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b + 0x632be59bd9b4e019ULL) ^ c;
}

/// Seeded generator with samplers pinned by this library (not the standard
/// library's unspecified distribution algorithms), so streams are
/// bit-reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    void fill_normal(std::span<double> out) {
        for (double& x : out) x = normal();
    }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        // rejection sampling on the top range to avoid modulo bias
        std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound + 1) % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x > limit);
        return x % bound;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace crom
