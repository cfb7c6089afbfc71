#pragma once

#include <cmath>
#include <cstddef>

#include "crom/common.hpp"
#include "crom/stats.hpp"
#include "crom/topk.hpp"

namespace crom {

/// Describe-the-extremes codec: the message is the index set of the k
/// largest samples; the reconstruction places magnitude alpha there and a
/// compensating negative level elsewhere.
struct ZeroRateCode {
    std::size_t n = 0;
    std::size_t k = 0;
    double alpha = 0.0;
};

/// Code with the closed-form alpha = p_n - q_n.
inline ZeroRateCode make_zero_rate_code(std::size_t n, std::size_t k) {
    ZeroRateConstants c = zero_rate_constants(n, k);
    return ZeroRateCode{n, k, c.alpha_n};
}

/// Code with a caller-chosen reconstruction magnitude (e.g. the expected
/// k-th largest value).
inline ZeroRateCode make_zero_rate_code(std::size_t n, std::size_t k, double alpha) {
    if (n < 2 || k < 1 || k >= n) throw ConfigError("zero-rate code: need n >= 2 and 1 <= k < n");
    if (!(alpha > 0.0)) throw ConfigError("zero-rate code: need alpha > 0");
    return ZeroRateCode{n, k, alpha};
}

/// Default extreme count ceil((ln n)^beta); beta = 0 gives k = 1.
inline std::size_t default_extreme_count(std::size_t n, double beta) {
    if (beta <= 0.0) return 1;
    double k = std::ceil(std::pow(std::log(double(n)), beta));
    return (k < 1.0) ? 1 : std::size_t(k);
}

/// Rate in nats per symbol: ln C(n, k) / n.
inline double zr_rate_nats(const ZeroRateCode& code) {
    return ln_choose(code.n, code.k) / double(code.n);
}

inline IndexMessage zr_encode(std::span<const double> x, const ZeroRateCode& code) {
    require_dim(x, code.n, "zr_encode");
    return g_k(x, code.k);
}

inline SignalBlock zr_decode(const IndexMessage& m, const ZeroRateCode& code) {
    m.validate();
    if (m.n != code.n || m.k() != code.k) {
        throw ConfigError("zr_decode: message (n, k) does not match the code");
    }
    const double off = -double(code.k) * code.alpha / double(code.n - code.k);
    SignalBlock out(code.n, off);
    for (std::uint32_t j : m.indices) out[j] = code.alpha;
    return out;
}

}  // namespace crom
