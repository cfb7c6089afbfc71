#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "crom/common.hpp"
#include "crom/random.hpp"

namespace crom {

/// Zero-rate AWGN code: message m is sent as a peak at position m with a
/// compensating negative level elsewhere; the decoder picks the argmax.
struct ChannelCode {
    std::size_t n = 0;     ///< block length = number of messages
    double eps_n = 0.0;    ///< power back-off parameter
    double peak = 0.0;     ///< (1 + eps_n) sqrt(2 ln n)
    double avg_power = 0.0;  ///< P_n = 2 (1 + eps_n)^2 ln(n) / (n - 1)
    double rate_nats = 0.0;  ///< ln(n) / n per channel use
};

/// eps_n solves (1 + n eps_n)/(n - 1) = (ln n)^{-1/3}; it is negative for
/// small n, but the average power stays positive.
inline ChannelCode make_channel_code(std::size_t n) {
    if (n < 2) throw ConfigError("channel code: need n >= 2");
    ChannelCode c;
    c.n = n;
    const double ln_n = std::log(double(n));
    c.eps_n = (double(n - 1) * std::pow(ln_n, -1.0 / 3.0) - 1.0) / double(n);
    c.peak = (1.0 + c.eps_n) * std::sqrt(2.0 * ln_n);
    c.avg_power = 2.0 * (1.0 + c.eps_n) * (1.0 + c.eps_n) * ln_n / double(n - 1);
    c.rate_nats = ln_n / double(n);
    return c;
}

inline SignalBlock ch_encode(std::size_t m, const ChannelCode& code) {
    if (m >= code.n) throw ConfigError("ch_encode: message index out of range");
    SignalBlock x(code.n, -code.peak / double(code.n - 1));
    x[m] = code.peak;
    return x;
}

/// Index of the maximum channel output; ties pick the smallest index.
inline std::size_t ch_decode(std::span<const double> y) {
    if (y.empty()) throw ConfigError("ch_decode: empty block");
    std::size_t best = 0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (y[i] > y[best]) best = i;
    }
    return best;
}

/// R_n / C(P_n) with C(P) = (1/2) ln(1 + P).
inline double capacity_ratio(const ChannelCode& code) {
    return code.rate_nats / (0.5 * std::log1p(code.avg_power));
}

/// Monte Carlo error rate over unit-variance AWGN with uniform messages.
inline double simulate_error_rate(const ChannelCode& code, std::size_t trials,
                                  std::uint64_t seed) {
    if (trials < 1) throw ConfigError("simulate_error_rate: need trials >= 1");
    std::size_t errors = 0;
    const double off = -code.peak / double(code.n - 1);
    SignalBlock y(code.n);
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, stream_tag::channel, t));
        std::size_t m = std::size_t(rng.below(code.n));
        for (std::size_t i = 0; i < code.n; ++i) y[i] = off + rng.normal();
        y[m] += code.peak - off;
        if (ch_decode(y) != m) ++errors;
    }
    return double(errors) / double(trials);
}

}  // namespace crom
