#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crom/common.hpp"
#include "crom/random.hpp"

namespace crom {

/// Sequential sparse-regression baseline: L sub-codebooks of M iid Gaussian
/// codewords; each iteration greedily picks the max-inner-product codeword
/// and subtracts a scaled copy.
struct SparcParams {
    std::size_t n = 0;
    std::size_t codebook_size = 0;  // M
    std::size_t iterations = 0;     // L
    double rate = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> step_sizes;  // c_1 .. c_L
    /// Subtract the selected codeword normalized to unit norm (the step
    /// size then plays the same role as the rotation codec's alpha_i).
    bool normalize_selected = true;

    void validate() const {
        if (n < 1) throw ConfigError("sparc params: need n >= 1");
        if (codebook_size < 1) throw ConfigError("sparc params: need M >= 1");
        if (iterations < 1) throw ConfigError("sparc params: need L >= 1");
        if (step_sizes.size() != iterations) {
            throw ConfigError("sparc params: need exactly L step sizes");
        }
        for (double c : step_sizes) {
            if (!(c > 0.0)) throw ConfigError("sparc params: step sizes must be positive");
        }
    }
};

/// Derive L = floor(nR / ln M) and the geometric step schedule
/// c_i = sqrt(n (1 - e^{-2R/L})) e^{-(i-1)R/L}.
inline SparcParams make_sparc_params(std::size_t n, std::size_t codebook_size, double rate,
                                     std::uint64_t seed, bool normalize_selected = true) {
    if (n < 1) throw ConfigError("sparc params: need n >= 1");
    if (codebook_size < 2) throw ConfigError("sparc params: need M >= 2 to derive L from a rate");
    if (!(rate > 0.0)) throw ConfigError("sparc params: need rate > 0");
    SparcParams p;
    p.n = n;
    p.codebook_size = codebook_size;
    p.rate = rate;
    p.seed = seed;
    p.normalize_selected = normalize_selected;
    p.iterations = std::size_t(std::floor(double(n) * rate / std::log(double(codebook_size))));
    if (p.iterations < 1) {
        throw ConfigError("sparc params: L = floor(nR / ln M) must be >= 1");
    }
    const double rl = rate / double(p.iterations);
    const double base = std::sqrt(double(n) * (1.0 - std::exp(-2.0 * rl)));
    p.step_sizes.resize(p.iterations);
    for (std::size_t i = 0; i < p.iterations; ++i) {
        p.step_sizes[i] = base * std::exp(-double(i) * rl);
    }
    return p;
}

using SubCodebook = std::vector<SignalBlock>;  // M rows of length n

struct SparcEncoding {
    std::vector<std::uint32_t> indices;
    double final_residual_norm = 0.0;
    SparcParams params;
};

namespace detail {

inline Rng codebook_rng(const SparcParams& p, std::size_t iteration) {
    return Rng(derive_seed(p.seed, stream_tag::codebook, iteration));
}

// Selected codeword scaled the way the encoder subtracts it.
inline void subtract_step(SignalBlock& state, std::span<const double> word, double c,
                          bool normalize) {
    double scale = c;
    if (normalize) {
        double len = norm(word);
        if (len > 0.0) scale = c / len;
    }
    for (std::size_t j = 0; j < state.size(); ++j) state[j] -= scale * word[j];
}

}  // namespace detail

/// Encode with explicit sub-codebooks (one per iteration).
inline SparcEncoding sparc_encode(const SignalBlock& x, const SparcParams& p,
                                  std::span<const SubCodebook> codebooks) {
    p.validate();
    require_dim(x, p.n, "sparc_encode");
    if (codebooks.size() < p.iterations) {
        throw ConfigError("sparc_encode: need one codebook per iteration");
    }
    SparcEncoding enc;
    enc.params = p;
    enc.indices.reserve(p.iterations);
    SignalBlock state = x;
    for (std::size_t i = 0; i < p.iterations; ++i) {
        const SubCodebook& cb = codebooks[i];
        if (cb.size() != p.codebook_size) {
            throw ConfigError("sparc_encode: codebook size mismatch");
        }
        std::size_t best = 0;
        double best_ip = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < cb.size(); ++m) {
            require_dim(cb[m], p.n, "sparc codebook row");
            double ip = dot(cb[m], state);
            if (ip > best_ip) {  // ties keep the smallest index
                best_ip = ip;
                best = m;
            }
        }
        enc.indices.push_back(std::uint32_t(best));
        detail::subtract_step(state, cb[best], p.step_sizes[i], p.normalize_selected);
    }
    enc.final_residual_norm = norm(state);
    return enc;
}

/// Encode with codebooks regenerated from the seed, one row at a time
/// (O(n) working memory).
inline SparcEncoding sparc_encode(const SignalBlock& x, const SparcParams& p) {
    p.validate();
    require_dim(x, p.n, "sparc_encode");
    SparcEncoding enc;
    enc.params = p;
    enc.indices.reserve(p.iterations);
    SignalBlock state = x;
    SignalBlock row(p.n), best_row(p.n);
    for (std::size_t i = 0; i < p.iterations; ++i) {
        Rng rng = detail::codebook_rng(p, i);
        std::size_t best = 0;
        double best_ip = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < p.codebook_size; ++m) {
            rng.fill_normal(row);
            double ip = dot(row, state);
            if (ip > best_ip) {
                best_ip = ip;
                best = m;
                best_row = row;
            }
        }
        enc.indices.push_back(std::uint32_t(best));
        detail::subtract_step(state, best_row, p.step_sizes[i], p.normalize_selected);
    }
    enc.final_residual_norm = norm(state);
    return enc;
}

/// Reconstruction from the first `prefix` selected codewords (all when
/// prefix >= L). Codebooks are regenerated from the seed.
inline SignalBlock sparc_decode_prefix(std::span<const std::uint32_t> indices,
                                       const SparcParams& p, std::size_t prefix) {
    p.validate();
    if (indices.size() > p.iterations) {
        throw ConfigError("sparc_decode: more indices than iterations");
    }
    if (prefix > indices.size()) prefix = indices.size();
    SignalBlock out(p.n, 0.0);
    SignalBlock row(p.n);
    for (std::size_t i = 0; i < prefix; ++i) {
        if (indices[i] >= p.codebook_size) {
            throw ConfigError("sparc_decode: codeword index out of range");
        }
        Rng rng = detail::codebook_rng(p, i);
        for (std::size_t m = 0; m <= indices[i]; ++m) rng.fill_normal(row);
        double scale = p.step_sizes[i];
        if (p.normalize_selected) {
            double len = norm(row);
            if (len > 0.0) scale /= len;
        }
        for (std::size_t j = 0; j < p.n; ++j) out[j] += scale * row[j];
    }
    return out;
}

inline SignalBlock sparc_decode(std::span<const std::uint32_t> indices, const SparcParams& p) {
    return sparc_decode_prefix(indices, p, indices.size());
}

/// Decode against explicit codebooks (mirrors the injected-codebook encoder).
inline SignalBlock sparc_decode(std::span<const std::uint32_t> indices, const SparcParams& p,
                                std::span<const SubCodebook> codebooks) {
    p.validate();
    if (indices.size() > p.iterations || codebooks.size() < indices.size()) {
        throw ConfigError("sparc_decode: index/codebook count mismatch");
    }
    SignalBlock out(p.n, 0.0);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= codebooks[i].size()) {
            throw ConfigError("sparc_decode: codeword index out of range");
        }
        const SignalBlock& row = codebooks[i][indices[i]];
        double scale = p.step_sizes[i];
        if (p.normalize_selected) {
            double len = norm(row);
            if (len > 0.0) scale /= len;
        }
        for (std::size_t j = 0; j < p.n; ++j) out[j] += scale * row[j];
    }
    return out;
}

}  // namespace crom
