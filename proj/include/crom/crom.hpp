#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crom/common.hpp"
#include "crom/topk.hpp"
#include "crom/transform.hpp"

namespace crom {

enum class Schedule : std::uint8_t { Simulation = 0, Theorem = 1 };

inline const char* schedule_name(Schedule s) {
    return s == Schedule::Simulation ? "simulation" : "theorem";
}

/// Full codec configuration. `iterations` is derived from the rate:
/// L = floor(n R / ln C(n, k)).
struct CromParams {
    std::size_t n = 0;
    std::size_t k = 1;
    double rate = 0.0;  // nats per symbol
    std::size_t iterations = 0;
    double sigma2 = 1.0;
    double gamma = 0.0;
    Schedule schedule = Schedule::Simulation;
    TransformScheme scheme;

    double message_rate_nats() const { return ln_choose(n, k) / double(n); }
};

inline CromParams make_crom_params(std::size_t n, std::size_t k, double rate,
                                   TransformScheme scheme, double sigma2 = 1.0,
                                   Schedule schedule = Schedule::Simulation, double gamma = 0.0) {
    if (n < 2) throw ConfigError("crom params: need n >= 2");
    if (k < 1 || k >= n) throw ConfigError("crom params: need 1 <= k < n");
    if (!(sigma2 > 0.0)) throw ConfigError("crom params: need sigma2 > 0");
    if (!(rate > 0.0)) throw ConfigError("crom params: need rate > 0");
    if (scheme.n != n) throw ConfigError("crom params: transform scheme dimension must equal n");
    scheme.validate();
    if (schedule == Schedule::Theorem) {
        if (!(gamma >= 0.0) || !(gamma < std::exp(-rate))) {
            throw ConfigError("crom params: theorem schedule needs 0 <= gamma < e^{-R}, got gamma=" +
                              std::to_string(gamma));
        }
    }
    CromParams p;
    p.n = n;
    p.k = k;
    p.rate = rate;
    p.sigma2 = sigma2;
    p.gamma = gamma;
    p.schedule = schedule;
    p.scheme = scheme;
    p.iterations = std::size_t(std::floor(double(n) * rate / ln_choose(n, k)));
    if (p.iterations < 1) {
        throw ConfigError("crom params: L = floor(nR / ln C(n,k)) must be >= 1; rate " +
                          std::to_string(rate) + " is below one message");
    }
    return p;
}

/// Step magnitude for iteration i (1-based).
inline double alpha_i(std::size_t i, const CromParams& p) {
    if (i < 1 || i > p.iterations) {
        throw ConfigError("alpha_i: iteration index out of range [1, L]");
    }
    const double rl = p.rate / double(p.iterations);
    const double shrink = std::exp(-double(i - 1) * rl);
    const double base = double(p.n) * p.sigma2 * (1.0 - std::exp(-2.0 * rl));
    if (p.schedule == Schedule::Simulation) {
        return std::sqrt(base) * shrink;
    }
    const double grow = std::exp(double(i - 1) * rl) * p.gamma;
    const double low = shrink - grow;
    if (!(low > 0.0)) {
        throw ConfigError(
            "alpha_i: gamma too large, e^{-(i-1)R/L} - e^{(i-1)R/L} gamma must stay positive "
            "(iteration " +
            std::to_string(i) + ")");
    }
    return std::sqrt(base * (shrink + grow) * low);
}

/// Result of one encoding pass: the ordered index messages plus the norm of
/// the unsent final residual (diagnostic).
struct CromEncoding {
    std::vector<IndexMessage> messages;
    double final_residual_norm = 0.0;
    CromParams params;
};

/// Per-iteration rate/distortion bookkeeping. Row 0 is the empty-prefix
/// (all-zero reconstruction) point.
struct DistortionTrace {
    struct Row {
        std::size_t iteration = 0;
        double rate_nats = 0.0;
        double distortion = 0.0;
    };
    std::vector<Row> rows;
};

namespace detail {

template <class TransformAt>
CromEncoding encode_impl(const SignalBlock& x, const CromParams& p, TransformAt&& transform_at) {
    require_dim(x, p.n, "crom_encode");
    const std::size_t L = p.iterations;
    CromEncoding enc;
    enc.params = p;
    enc.messages.reserve(L);
    SignalBlock state = x;
    transform_at(1).apply_inplace(state);
    for (std::size_t i = 1; i <= L; ++i) {
        const double a = alpha_i(i, p);
        IndexMessage m = g_k(state, p.k);
        SignalBlock u = build_direction(m);
        enc.messages.push_back(std::move(m));
        for (std::size_t j = 0; j < p.n; ++j) state[j] -= a * u[j];
        transform_at(i + 1).apply_inplace(state);
    }
    enc.final_residual_norm = norm(state);
    return enc;
}

template <class TransformAt>
SignalBlock decode_prefix_impl(std::span<const IndexMessage> messages, const CromParams& p,
                               TransformAt&& transform_at) {
    if (messages.size() > p.iterations) {
        throw ConfigError("decode_prefix: more messages than the configured L");
    }
    for (const IndexMessage& m : messages) {
        if (m.n != p.n || m.k() != p.k) {
            throw ConfigError("decode_prefix: message (n, k) does not match params");
        }
    }
    SignalBlock acc(p.n, 0.0);
    if (messages.empty()) return acc;
    // nested evaluation: i adjoint applications for a length-i prefix
    const std::size_t i = messages.size();
    {
        SignalBlock u = build_direction(messages[i - 1]);
        const double a = alpha_i(i, p);
        for (std::size_t t = 0; t < p.n; ++t) acc[t] = a * u[t];
    }
    for (std::size_t j = i - 1; j >= 1; --j) {
        transform_at(j + 1).apply_adjoint_inplace(acc);
        SignalBlock u = build_direction(messages[j - 1]);
        const double a = alpha_i(j, p);
        for (std::size_t t = 0; t < p.n; ++t) acc[t] += a * u[t];
    }
    transform_at(1).apply_adjoint_inplace(acc);
    return acc;
}

template <class TransformAt>
DistortionTrace trace_impl(const SignalBlock& x, const CromEncoding& enc,
                           TransformAt&& transform_at) {
    const CromParams& p = enc.params;
    require_dim(x, p.n, "distortion_trace");
    if (enc.messages.size() != p.iterations) {
        throw ConfigError("distortion_trace: encoding must carry exactly L messages");
    }
    const double per_message = p.message_rate_nats();
    DistortionTrace trace;
    trace.rows.reserve(p.iterations + 1);
    trace.rows.push_back({0, 0.0, squared_norm(x) / double(p.n)});
    // The reconstruction error is tracked in the frame of the current
    // iteration: rotating the error does not change its norm, so each row is
    // the measured distortion of the actual prefix reconstruction.
    SignalBlock err = x;
    for (std::size_t i = 1; i <= p.iterations; ++i) {
        if (enc.messages[i - 1].n != p.n || enc.messages[i - 1].k() != p.k) {
            throw ConfigError("distortion_trace: message (n, k) does not match params");
        }
        transform_at(i).apply_inplace(err);
        const double a = alpha_i(i, p);
        SignalBlock u = build_direction(enc.messages[i - 1]);
        for (std::size_t j = 0; j < p.n; ++j) err[j] -= a * u[j];
        trace.rows.push_back({i, double(i) * per_message, squared_norm(err) / double(p.n)});
    }
    return trace;
}

struct StreamingTransforms {
    const TransformScheme& scheme;
    mutable std::size_t cached_index = 0;
    mutable std::vector<OrthogonalTransform> cache = {};

    const OrthogonalTransform& operator()(std::size_t index) const {
        if (cached_index != index) {
            cache.clear();
            cache.push_back(make_scheme_transform(scheme, index));
            cached_index = index;
        }
        return cache.front();
    }
};

struct PrebuiltTransforms {
    std::span<const OrthogonalTransform> seq;

    const OrthogonalTransform& operator()(std::size_t index) const {
        if (index < 1 || index > seq.size()) {
            throw ConfigError("transform sequence too short for iteration " +
                              std::to_string(index));
        }
        return seq[index - 1];
    }
};

}  // namespace detail

/// Encode x; transforms are regenerated from the scheme seed on the fly.
inline CromEncoding crom_encode(const SignalBlock& x, const CromParams& p) {
    return detail::encode_impl(x, p, detail::StreamingTransforms{p.scheme});
}

/// Encode with an injected transform sequence (needs at least L+1 elements).
inline CromEncoding crom_encode(const SignalBlock& x, const CromParams& p,
                                std::span<const OrthogonalTransform> transforms) {
    return detail::encode_impl(x, p, detail::PrebuiltTransforms{transforms});
}

/// Reconstruction from the first messages.size() messages. An empty prefix
/// yields the all-zero block.
inline SignalBlock decode_prefix(std::span<const IndexMessage> messages, const CromParams& p) {
    return detail::decode_prefix_impl(messages, p, detail::StreamingTransforms{p.scheme});
}

inline SignalBlock decode_prefix(std::span<const IndexMessage> messages, const CromParams& p,
                                 std::span<const OrthogonalTransform> transforms) {
    return detail::decode_prefix_impl(messages, p, detail::PrebuiltTransforms{transforms});
}

/// Measured distortion of every prefix reconstruction against reference x.
inline DistortionTrace distortion_trace(const SignalBlock& x, const CromEncoding& enc) {
    return detail::trace_impl(x, enc, detail::StreamingTransforms{enc.params.scheme});
}

inline DistortionTrace distortion_trace(const SignalBlock& x, const CromEncoding& enc,
                                        std::span<const OrthogonalTransform> transforms) {
    return detail::trace_impl(x, enc, detail::PrebuiltTransforms{transforms});
}

}  // namespace crom
