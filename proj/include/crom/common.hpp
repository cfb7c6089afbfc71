#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crom {

/// A length-n block of real samples. Source words, residuals and
/// reconstructions are all SignalBlocks.
using SignalBlock = std::vector<double>;

/// Invalid parameters or an inconsistent configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or corrupted stream data. CLI exit code 3.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> x) { return dot(x, x); }

inline double norm(std::span<const double> x) { return std::sqrt(squared_norm(x)); }

/// ln C(n, k) via log-gamma.
inline double ln_choose(std::size_t n, std::size_t k) {
    if (k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0);
}

/// Compensated accumulator; the sum is independent of how partial results
/// were grouped, up to ~1e-16 relative.
class KahanSum {
public:
    void add(double v) {
        double y = v - carry_;
        double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

inline void require_dim(std::span<const double> x, std::size_t n, const char* where) {
    if (x.size() != n) {
        throw ConfigError(std::string(where) + ": block length " + std::to_string(x.size()) +
                          " does not match configured n=" + std::to_string(n));
    }
}

}  // namespace crom
