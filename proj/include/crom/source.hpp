#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "crom/common.hpp"
#include "crom/random.hpp"

namespace crom {

enum class SourceKind : std::uint8_t { GaussianIid, LaplacianIid, UniformIid, GaussMarkov };

inline const char* source_name(SourceKind k) {
    switch (k) {
        case SourceKind::GaussianIid: return "gaussian-iid";
        case SourceKind::LaplacianIid: return "laplacian-iid";
        case SourceKind::UniformIid: return "uniform-iid";
        case SourceKind::GaussMarkov: return "gauss-markov";
    }
    return "?";
}

struct SourceSpec {
    SourceKind kind = SourceKind::GaussianIid;
    double variance = 1.0;  ///< marginal second moment
    double rho = 0.0;       ///< lag-1 correlation (GaussMarkov only)
    std::uint64_t seed = 0;

    void validate() const {
        if (!(variance >= 0.0)) throw ConfigError("source: need variance >= 0");
        if (kind == SourceKind::GaussMarkov && !(std::abs(rho) < 1.0)) {
            throw ConfigError("source: gauss-markov needs |rho| < 1");
        }
    }
};

/// One block, deterministic in (spec.seed, trial).
inline SignalBlock generate_block(const SourceSpec& spec, std::size_t n, std::uint64_t trial = 0) {
    spec.validate();
    SignalBlock x(n, 0.0);
    if (spec.variance == 0.0) return x;
    Rng rng(derive_seed(spec.seed, stream_tag::source, trial));
    const double sigma = std::sqrt(spec.variance);
    switch (spec.kind) {
        case SourceKind::GaussianIid:
            for (double& v : x) v = sigma * rng.normal();
            break;
        case SourceKind::LaplacianIid: {
            const double b = std::sqrt(spec.variance / 2.0);
            for (double& v : x) {
                double u = rng.uniform() - 0.5;
                v = -b * ((u >= 0.0) ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::abs(u));
            }
            break;
        }
        case SourceKind::UniformIid: {
            const double w = std::sqrt(3.0 * spec.variance);
            for (double& v : x) v = w * (2.0 * rng.uniform() - 1.0);
            break;
        }
        case SourceKind::GaussMarkov: {
            // stationary start keeps the marginal second moment at variance
            const double drive = std::sqrt(1.0 - spec.rho * spec.rho) * sigma;
            double prev = sigma * rng.normal();
            x[0] = prev;
            for (std::size_t t = 1; t < n; ++t) {
                prev = spec.rho * prev + drive * rng.normal();
                x[t] = prev;
            }
            break;
        }
    }
    return x;
}

}  // namespace crom
