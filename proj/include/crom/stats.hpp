#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "crom/common.hpp"

namespace crom {

inline constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;

/// Standard normal CDF.
inline double phi(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// Standard normal upper tail Q(x) = 1 - phi(x).
inline double q_func(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

/// Standard normal density.
inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

namespace detail {

// Acklam's rational approximation of the standard normal quantile,
// |relative error| < 1.15e-9 over the full domain.
inline double acklam_phi_inv(double p) {
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Inverse of Q: returns x with Q(x) = p. Strictly decreasing in p.
/// Rational approximation polished by two Newton steps against Q.
inline double q_inv(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ConfigError("q_inv: probability must satisfy 0 < p < 1, got " + std::to_string(p));
    }
    double x = -detail::acklam_phi_inv(p);
    for (int step = 0; step < 2; ++step) {
        double f = q_func(x) - p;
        x += f / normal_pdf(x);
    }
    return x;
}

/// Closed-form constants of the zero-rate scheme for block length n and
/// extreme count k.
struct ZeroRateConstants {
    std::size_t n = 0;
    std::size_t k = 0;
    double p_n = 0.0;      ///< lower quantile of the k-th order statistic
    double q_n = 0.0;      ///< sample-mean deviation quantile
    double alpha_n = 0.0;  ///< reconstruction magnitude, p_n - q_n
};

inline ZeroRateConstants zero_rate_constants(std::size_t n, std::size_t k) {
    if (n < 2) throw ConfigError("zero_rate_constants: need n >= 2, got n=" + std::to_string(n));
    if (k < 1 || k >= n) {
        throw ConfigError("zero_rate_constants: need 1 <= k < n, got k=" + std::to_string(k) +
                          ", n=" + std::to_string(n));
    }
    double arg = double(k) * std::log(double(n)) / double(n - k + 1);
    if (!(arg < 1.0)) {
        throw ConfigError("zero_rate_constants: need k*ln(n)/(n-k+1) < 1, got " +
                          std::to_string(arg));
    }
    ZeroRateConstants c;
    c.n = n;
    c.k = k;
    c.p_n = q_inv(arg);
    c.q_n = q_inv(1.0 / double(n)) / std::sqrt(double(n));
    c.alpha_n = c.p_n - c.q_n;
    return c;
}

/// Threshold t such that the i-th largest of n iid standard normals falls
/// below t with probability at most eps.
inline double order_stat_lower_quantile(std::size_t n, std::size_t i, double eps) {
    if (i < 1 || i > n) {
        throw ConfigError("order_stat_lower_quantile: need 1 <= i <= n");
    }
    if (!(eps > 0.0)) {
        throw ConfigError("order_stat_lower_quantile: need eps > 0");
    }
    double u = (double(i - 1) * std::log(double(n)) - std::log(eps)) / double(n - i + 1);
    if (!(u > 0.0)) {
        throw ConfigError(
            "order_stat_lower_quantile: log term (i-1)ln(n) - ln(eps) must be positive; the "
            "threshold would be infinite");
    }
    if (!(u < 1.0)) {
        throw ConfigError("order_stat_lower_quantile: need (1/(n-i+1))*ln(n^(i-1)/eps) < 1, got " +
                          std::to_string(u));
    }
    return q_inv(u);
}

}  // namespace crom
