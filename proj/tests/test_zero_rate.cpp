#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crom/random.hpp"
#include "crom/source.hpp"
#include "crom/zero_rate.hpp"
#include "support/oracles.hpp"

using Catch::Approx;
using namespace crom;

TEST_CASE("zr_encode: argmax messages and rate bookkeeping", "[zero_rate]") {
    ZeroRateCode code = make_zero_rate_code(4, 1, 2.0);
    SignalBlock x{0.1, 5.0, -2.0, 0.3};
    REQUIRE(zr_encode(x, code).indices == std::vector<std::uint32_t>{1});
    REQUIRE(zr_rate_nats(code) == Approx(std::log(4.0) / 4.0).epsilon(1e-12));

    Rng rng(3);
    for (int it = 0; it < 50; ++it) {
        SignalBlock y(16);
        rng.fill_normal(y);
        std::size_t argmax = 0;
        for (std::size_t i = 1; i < y.size(); ++i) {
            if (y[i] > y[argmax]) argmax = i;
        }
        ZeroRateCode c16 = make_zero_rate_code(16, 1);
        REQUIRE(zr_encode(y, c16).indices == std::vector<std::uint32_t>{std::uint32_t(argmax)});
    }

    SignalBlock wrong(5, 0.0);
    REQUIRE_THROWS_AS(zr_encode(wrong, code), ConfigError);
}

TEST_CASE("zr_decode: two-level reconstruction", "[zero_rate]") {
    const double alpha = 1.25;
    ZeroRateCode code = make_zero_rate_code(4, 1, alpha);
    IndexMessage m{4, {1}};
    SignalBlock xh = zr_decode(m, code);
    REQUIRE(xh[0] == Approx(-alpha / 3.0).margin(1e-15));
    REQUIRE(xh[1] == Approx(alpha).margin(1e-15));
    REQUIRE(xh[2] == Approx(-alpha / 3.0).margin(1e-15));
    REQUIRE(xh[3] == Approx(-alpha / 3.0).margin(1e-15));
}

TEST_CASE("zr_decode: zero mean for random messages", "[zero_rate]") {
    Rng rng(4);
    for (int it = 0; it < 100; ++it) {
        std::size_t n = 3 + rng.below(120);
        std::size_t k = 1 + rng.below(n - 1);
        SignalBlock x(n);
        rng.fill_normal(x);
        ZeroRateCode code = make_zero_rate_code(n, k, 1.0);
        SignalBlock xh = zr_decode(zr_encode(x, code), code);
        double sum = 0.0;
        for (double v : xh) sum += v;
        REQUIRE(sum == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("zero-rate: default alpha and k knob", "[zero_rate]") {
    ZeroRateCode code = make_zero_rate_code(1024, 1);
    REQUIRE(code.alpha == Approx(zero_rate_constants(1024, 1).alpha_n));
    REQUIRE(default_extreme_count(1024, 0.0) == 1);
    REQUIRE(default_extreme_count(1024, 1.0) == 7);  // ceil(ln 1024)
    REQUIRE_THROWS_AS(make_zero_rate_code(4, 1, -1.0), ConfigError);
    REQUIRE_THROWS_AS(make_zero_rate_code(4, 4, 1.0), ConfigError);
}

TEST_CASE("zero-rate: squared-error decomposition identity", "[zero_rate]") {
    // || x - xh ||^2 = ||x||^2 + (2 k a / (n-k)) sum(x)
    //                 - (2 n a / (n-k)) sum_{top-k}(x) + n k a^2 / (n-k)
    Rng rng(5);
    for (int it = 0; it < 200; ++it) {
        std::size_t n = 4 + rng.below(200);
        std::size_t k = 1 + rng.below(std::min<std::size_t>(n - 1, 8));
        double alpha = 0.2 + 2.0 * rng.uniform();
        ZeroRateCode code = make_zero_rate_code(n, k, alpha);
        SignalBlock x(n);
        rng.fill_normal(x);
        IndexMessage m = zr_encode(x, code);
        SignalBlock xh = zr_decode(m, code);
        double lhs = 0.0;
        for (std::size_t i = 0; i < n; ++i) lhs += (x[i] - xh[i]) * (x[i] - xh[i]);
        double sum = 0.0, top = 0.0;
        for (double v : x) sum += v;
        for (std::uint32_t i : m.indices) top += x[i];
        double nn = double(n), kk = double(k);
        double rhs = squared_norm(x) + (2.0 * kk * alpha / (nn - kk)) * sum -
                     (2.0 * nn * alpha / (nn - kk)) * top + nn * kk * alpha * alpha / (nn - kk);
        REQUIRE(lhs == Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("zero-rate: gain at n = 2^14 matches the order-statistic prediction",
          "[zero_rate][slow]") {
    // E[n g] = (n/(n-1)) alpha (2 E[max] - alpha) for k = 1; the quadrature
    // oracle supplies E[max].
    const std::size_t n = 1 << 14;
    ZeroRateCode code = make_zero_rate_code(n, 1);
    const double emax = oracle::expected_max_gaussian(n);
    const double predicted =
        (double(n) / double(n - 1)) * code.alpha * (2.0 * emax - code.alpha);
    const std::size_t trials = 300;
    SourceSpec src{SourceKind::GaussianIid, 1.0, 0.0, 2024};
    double acc = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        SignalBlock x = generate_block(src, n, t);
        SignalBlock xh = zr_decode(zr_encode(x, code), code);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) err += (x[i] - xh[i]) * (x[i] - xh[i]);
        acc += (squared_norm(x) - err) / double(n);
    }
    double mean_gain = acc * double(n) / double(trials);
    // 4 sigma band around the prediction (sd(max) ~ 0.30)
    REQUIRE(mean_gain == Approx(predicted).margin(4.0 * 2.0 * code.alpha * 0.30 /
                                                  std::sqrt(double(trials))));
    // sanity envelope: alpha_n <= sqrt(2 ln n) + 1 for k = 1
    REQUIRE(code.alpha <= std::sqrt(2.0 * std::log(double(n))) + 1.0);
}

TEST_CASE("zero-rate: excess-distortion bound with a calibrated constant",
          "[zero_rate][slow]") {
    // D_n = 1 - 2 R_n + sqrt(2/n) Q^{-1}(eps) + c k ln(ln n) / n with the
    // constant c = 6 frozen from a one-off calibration run (measured c* was
    // in [2.4, 4.1] over this grid).
    const double c_frozen = 6.0;
    struct Case {
        std::size_t n, k, trials;
        double eps;
    };
    for (const Case& cs : {Case{4096, 1, 2000, 0.1}, Case{16384, 1, 1500, 0.05},
                           Case{4096, 2, 2000, 0.1}}) {
        ZeroRateCode code = make_zero_rate_code(cs.n, cs.k);
        const double rn = zr_rate_nats(code);
        const double dn = 1.0 - 2.0 * rn + std::sqrt(2.0 / double(cs.n)) * q_inv(cs.eps) +
                          c_frozen * double(cs.k) * std::log(std::log(double(cs.n))) /
                              double(cs.n);
        SourceSpec src{SourceKind::GaussianIid, 1.0, 0.0, 771 + cs.n + cs.k};
        std::size_t exceed = 0;
        for (std::size_t t = 0; t < cs.trials; ++t) {
            SignalBlock x = generate_block(src, cs.n, t);
            SignalBlock xh = zr_decode(zr_encode(x, code), code);
            double err = 0.0;
            for (std::size_t i = 0; i < cs.n; ++i) err += (x[i] - xh[i]) * (x[i] - xh[i]);
            if (err / double(cs.n) > dn) ++exceed;
        }
        double freq = double(exceed) / double(cs.trials);
        REQUIRE(freq <= cs.eps + 3.0 * std::sqrt(cs.eps / double(cs.trials)));
    }
}
