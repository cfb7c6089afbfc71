#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <vector>

#include "crom/crom.hpp"
#include "crom/random.hpp"
#include "crom/source.hpp"

using Catch::Approx;
using namespace crom;

namespace {

OrthogonalTransform identity_transform(std::size_t n) {
    return OrthogonalTransform::make_givens_layer(n, 1, std::vector<double>(n / 2, 0.0));
}

CromParams params_for(std::size_t n, std::size_t k, double rate, SchemeKind kind,
                      std::uint64_t seed, Schedule sched = Schedule::Simulation,
                      double gamma = 0.0, double sigma2 = 1.0) {
    return make_crom_params(n, k, rate, TransformScheme{kind, seed, n}, sigma2, sched, gamma);
}

// (A_1^T ... A_j^T) v via successive adjoints, rightmost first
SignalBlock chain_adjoint(std::span<const OrthogonalTransform> seq, std::size_t j,
                          SignalBlock v) {
    for (std::size_t t = j; t >= 1; --t) seq[t - 1].apply_adjoint_inplace(v);
    return v;
}

}  // namespace

TEST_CASE("params: iteration count and invariants", "[crom]") {
    auto p = params_for(1024, 1, 1.0, SchemeKind::UniformHaar, 7);
    REQUIRE(p.iterations == 147);  // floor(1024 / ln 1024)
    REQUIRE(params_for(256, 1, 1.0, SchemeKind::UniformHaar, 7).iterations == 46);

    REQUIRE_THROWS_AS(params_for(1024, 0, 1.0, SchemeKind::UniformHaar, 7), ConfigError);
    REQUIRE_THROWS_AS(params_for(1024, 1, 0.0, SchemeKind::UniformHaar, 7), ConfigError);
    REQUIRE_THROWS_AS(params_for(1024, 1, 0.001, SchemeKind::UniformHaar, 7),
                      ConfigError);  // L would be 0
    REQUIRE_THROWS_AS(params_for(1024, 1, 1.0, SchemeKind::UniformHaar, 7, Schedule::Simulation,
                                 0.0, -1.0),
                      ConfigError);  // sigma2
    // theorem schedule: gamma must stay below e^{-R}
    REQUIRE_THROWS_AS(params_for(1024, 1, 1.0, SchemeKind::UniformHaar, 7, Schedule::Theorem,
                                 std::exp(-1.0) + 0.01),
                      ConfigError);
    // sparse schemes demand power-of-two n
    REQUIRE_THROWS_AS(params_for(1000, 1, 1.0, SchemeKind::SparseGivens, 7), ConfigError);
    // scheme dimension must match
    REQUIRE_THROWS_AS(
        make_crom_params(64, 1, 1.0, TransformScheme{SchemeKind::UniformHaar, 7, 32}),
        ConfigError);
}

TEST_CASE("alpha_i: schedules", "[crom]") {
    SECTION("gamma = 0 theorem equals simulation") {
        auto sim = params_for(256, 1, 1.0, SchemeKind::UniformHaar, 1, Schedule::Simulation);
        auto thm = params_for(256, 1, 1.0, SchemeKind::UniformHaar, 1, Schedule::Theorem, 0.0);
        for (std::size_t i = 1; i <= sim.iterations; ++i) {
            REQUIRE(alpha_i(i, thm) == Approx(alpha_i(i, sim)).epsilon(1e-14));
        }
    }
    SECTION("first step closed form") {
        auto p = params_for(256, 1, 1.0, SchemeKind::UniformHaar, 1);
        double rl = 1.0 / double(p.iterations);
        REQUIRE(alpha_i(1, p) ==
                Approx(std::sqrt(256.0 * (1.0 - std::exp(-2.0 * rl)))).epsilon(1e-14));
    }
    SECTION("sigma2 scales the schedule by its square root") {
        auto p1 = params_for(128, 1, 1.0, SchemeKind::UniformHaar, 1);
        auto p4 = params_for(128, 1, 1.0, SchemeKind::UniformHaar, 1, Schedule::Simulation, 0.0,
                             4.0);
        for (std::size_t i : {std::size_t(1), p1.iterations}) {
            REQUIRE(alpha_i(i, p4) == Approx(2.0 * alpha_i(i, p1)).epsilon(1e-14));
        }
    }
    SECTION("independent high-precision evaluation at i = 2, gamma = 0.01") {
        auto p = params_for(1024, 1, 1.0, SchemeKind::UniformHaar, 1, Schedule::Theorem, 0.01);
        REQUIRE(p.iterations == 147);
        const long double R = 1.0L, L = 147.0L, g = 0.01L, n = 1024.0L;
        const long double e1 = std::exp(-(2.0L - 1.0L) * R / L);  // e^{-(i-1)R/L}, i = 2
        const long double e2 = std::exp((2.0L - 1.0L) * R / L) * g;
        const long double want =
            std::sqrt(n * (1.0L - std::exp(-2.0L * R / L)) * (e1 + e2) * (e1 - e2));
        REQUIRE(alpha_i(2, p) == Approx(double(want)).epsilon(1e-12));
    }
    SECTION("imaginary alpha is a configuration error") {
        // gamma below e^{-R} passes construction but turns the late steps
        // imaginary: e^{-(L-1)R/L} < gamma e^{(L-1)R/L}
        auto p = params_for(256, 1, 1.0, SchemeKind::UniformHaar, 1, Schedule::Theorem, 0.35);
        REQUIRE_NOTHROW(alpha_i(1, p));
        REQUIRE_THROWS_AS(alpha_i(p.iterations, p), ConfigError);
    }
    SECTION("index range") {
        auto p = params_for(256, 1, 1.0, SchemeKind::UniformHaar, 1);
        REQUIRE_THROWS_AS(alpha_i(0, p), ConfigError);
        REQUIRE_THROWS_AS(alpha_i(p.iterations + 1, p), ConfigError);
    }
}

TEST_CASE("crom_encode: one hand-evaluated iteration", "[crom]") {
    // L = 1 at n = 2 needs R in [ln(2)/2, ln 2)
    auto p = params_for(2, 1, 0.5, SchemeKind::SparseGivens, 9);
    REQUIRE(p.iterations == 1);
    std::vector<OrthogonalTransform> id;
    id.push_back(identity_transform(2));
    id.push_back(identity_transform(2));
    const double c = 1.7;
    SignalBlock x{c, 0.0};
    CromEncoding enc = crom_encode(x, p, id);
    REQUIRE(enc.messages.size() == 1);
    REQUIRE(enc.messages[0].indices == std::vector<std::uint32_t>{0});
    const double a = alpha_i(1, p);
    const double r0 = c - a / std::numbers::sqrt2;
    const double r1 = a / std::numbers::sqrt2;
    REQUIRE(enc.final_residual_norm ==
            Approx(std::sqrt(r0 * r0 + r1 * r1)).epsilon(1e-12));
    SignalBlock xh = decode_prefix(enc.messages, p, id);
    REQUIRE(xh[0] == Approx(a / std::numbers::sqrt2).margin(1e-14));
    REQUIRE(xh[1] == Approx(-a / std::numbers::sqrt2).margin(1e-14));
}

TEST_CASE("crom: residual identity across schemes and schedules", "[crom]") {
    Rng rng(100);
    for (SchemeKind kind : {SchemeKind::UniformHaar, SchemeKind::SparseGivens,
                            SchemeKind::SparseGivensThenDct}) {
        for (Schedule sched : {Schedule::Simulation, Schedule::Theorem}) {
            auto p = params_for(64, 1, 1.2, kind, 55 + int(kind), sched,
                                sched == Schedule::Theorem ? 0.05 : 0.0);
            SignalBlock x(64);
            rng.fill_normal(x);
            CromEncoding enc = crom_encode(x, p);
            SignalBlock xh = decode_prefix(enc.messages, p);
            double err = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) err += (x[i] - xh[i]) * (x[i] - xh[i]);
            REQUIRE(std::sqrt(err) ==
                    Approx(enc.final_residual_norm).epsilon(1e-9));
        }
    }
}

TEST_CASE("crom_encode: deterministic in (x, params)", "[crom]") {
    auto p = params_for(32, 2, 1.0, SchemeKind::UniformHaar, 1234);
    Rng rng(8);
    SignalBlock x(32);
    rng.fill_normal(x);
    CromEncoding a = crom_encode(x, p);
    CromEncoding b = crom_encode(x, p);
    REQUIRE(a.final_residual_norm == b.final_residual_norm);  // bitwise
    for (std::size_t i = 0; i < a.messages.size(); ++i) {
        REQUIRE(a.messages[i].indices == b.messages[i].indices);
    }
}

TEST_CASE("decode_prefix: empty prefix and prefix consistency", "[crom]") {
    auto p = params_for(32, 1, 1.0, SchemeKind::UniformHaar, 77);
    auto transforms = build_sequence(p.scheme, p.iterations + 1);
    Rng rng(9);
    SignalBlock x(32);
    rng.fill_normal(x);
    CromEncoding enc = crom_encode(x, p, transforms);

    SignalBlock zero = decode_prefix({}, p, transforms);
    for (double v : zero) REQUIRE(v == 0.0);

    std::span<const IndexMessage> all(enc.messages);
    SignalBlock prev = zero;
    for (std::size_t i = 1; i <= p.iterations; ++i) {
        SignalBlock cur = decode_prefix(all.subspan(0, i), p, transforms);
        SignalBlock inc = chain_adjoint(transforms, i,
                                        [&] {
                                            SignalBlock u = build_direction(enc.messages[i - 1]);
                                            const double a = alpha_i(i, p);
                                            for (double& v : u) v *= a;
                                            return u;
                                        }());
        for (std::size_t t = 0; t < x.size(); ++t) {
            REQUIRE(cur[t] - prev[t] == Approx(inc[t]).margin(1e-10));
        }
        prev = cur;
    }
}

TEST_CASE("decode_prefix: nested form equals the naive sum of products", "[crom]") {
    auto p = params_for(64, 1, 1.32, SchemeKind::UniformHaar, 2025);
    auto transforms = build_sequence(p.scheme, p.iterations + 1);
    Rng rng(10);
    SignalBlock x(64);
    rng.fill_normal(x);
    CromEncoding enc = crom_encode(x, p, transforms);
    REQUIRE(p.iterations == 20);
    const std::size_t prefix = 20;

    SignalBlock naive(64, 0.0);
    for (std::size_t j = 1; j <= prefix; ++j) {
        SignalBlock u = build_direction(enc.messages[j - 1]);
        const double a = alpha_i(j, p);
        for (double& v : u) v *= a;
        SignalBlock term = chain_adjoint(transforms, j, std::move(u));
        for (std::size_t t = 0; t < 64; ++t) naive[t] += term[t];
    }
    SignalBlock nested =
        decode_prefix(std::span<const IndexMessage>(enc.messages).subspan(0, prefix), p,
                      transforms);
    for (std::size_t t = 0; t < 64; ++t) {
        REQUIRE(nested[t] == Approx(naive[t]).margin(1e-9));
    }
}

TEST_CASE("decode_prefix: rateless truncation of the message list", "[crom]") {
    auto p = params_for(32, 1, 1.5, SchemeKind::SparseGivens, 33);
    Rng rng(11);
    SignalBlock x(32);
    rng.fill_normal(x);
    CromEncoding enc = crom_encode(x, p);
    const std::size_t i = p.iterations / 2;
    std::vector<IndexMessage> truncated(enc.messages.begin(), enc.messages.begin() + i);
    SignalBlock from_full =
        decode_prefix(std::span<const IndexMessage>(enc.messages).subspan(0, i), p);
    SignalBlock from_truncated = decode_prefix(truncated, p);
    for (std::size_t t = 0; t < x.size(); ++t) {
        REQUIRE(std::bit_cast<std::uint64_t>(from_full[t]) ==
                std::bit_cast<std::uint64_t>(from_truncated[t]));
    }
}

TEST_CASE("decode_prefix: mismatched messages are usage errors", "[crom]") {
    auto p = params_for(32, 1, 1.0, SchemeKind::UniformHaar, 4);
    std::vector<IndexMessage> wrong_n{IndexMessage{16, {3}}};
    REQUIRE_THROWS_AS(decode_prefix(wrong_n, p), ConfigError);
    std::vector<IndexMessage> wrong_k{IndexMessage{32, {3, 5}}};
    REQUIRE_THROWS_AS(decode_prefix(wrong_k, p), ConfigError);
}

TEST_CASE("norm recursion holds at every encoder step", "[crom]") {
    // || X - a U ||^2 = ||X||^2 + a^2 - 2 a <U, X> (U has unit norm)
    auto p = params_for(64, 3, 1.0, SchemeKind::UniformHaar, 66);
    auto transforms = build_sequence(p.scheme, p.iterations + 1);
    Rng rng(12);
    SignalBlock x(64);
    rng.fill_normal(x);

    SignalBlock state = transforms[0].apply(x);
    for (std::size_t i = 1; i <= p.iterations; ++i) {
        const double a = alpha_i(i, p);
        IndexMessage m = g_k(state, p.k);
        SignalBlock u = build_direction(m);
        double before = squared_norm(state);
        double ip = dot(u, state);
        for (std::size_t t = 0; t < state.size(); ++t) state[t] -= a * u[t];
        REQUIRE(squared_norm(state) == Approx(before + a * a - 2.0 * a * ip).epsilon(1e-12));
        transforms[i].apply_inplace(state);
    }
}

TEST_CASE("greedy step: selected direction maximizes the inner product", "[crom]") {
    Rng rng(13);
    const std::size_t n = 9;
    for (int rep = 0; rep < 10; ++rep) {
        SignalBlock state(n);
        rng.fill_normal(state);
        for (std::size_t k = 1; k <= 3; ++k) {
            SignalBlock chosen = build_direction(g_k(state, k));
            double best = dot(chosen, state);
            for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
                if (std::size_t(std::popcount(mask)) != k) continue;
                IndexMessage m;
                m.n = n;
                for (std::uint32_t b = 0; b < n; ++b) {
                    if (mask & (1u << b)) m.indices.push_back(b);
                }
                REQUIRE(best >= dot(build_direction(m), state) - 1e-12);
            }
        }
    }
}

TEST_CASE("distortion_trace: bookkeeping rows", "[crom]") {
    auto p = params_for(64, 1, 1.0, SchemeKind::SparseGivensThenDct, 321);
    SourceSpec src{SourceKind::GaussianIid, 1.0, 0.0, 44};
    SignalBlock x = generate_block(src, 64, 0);
    CromEncoding enc = crom_encode(x, p);
    DistortionTrace trace = distortion_trace(x, enc);

    REQUIRE(trace.rows.size() == p.iterations + 1);
    REQUIRE(trace.rows[0].rate_nats == 0.0);
    REQUIRE(trace.rows[0].distortion == Approx(squared_norm(x) / 64.0).epsilon(1e-15));
    for (std::size_t i = 1; i < trace.rows.size(); ++i) {
        REQUIRE(trace.rows[i].rate_nats > trace.rows[i - 1].rate_nats);  // strictly increasing
        REQUIRE(trace.rows[i].rate_nats ==
                Approx(double(i) * std::log(64.0) / 64.0).epsilon(1e-12));
    }
    double final_d = enc.final_residual_norm * enc.final_residual_norm / 64.0;
    REQUIRE(trace.rows.back().distortion == Approx(final_d).margin(1e-12));

    // the trace rows are the measured distortion of the decoded prefixes
    auto transforms = build_sequence(p.scheme, p.iterations + 1);
    for (std::size_t i : {std::size_t(1), p.iterations / 2, p.iterations}) {
        SignalBlock xh = decode_prefix(
            std::span<const IndexMessage>(enc.messages).subspan(0, i), p, transforms);
        double err = 0.0;
        for (std::size_t t = 0; t < x.size(); ++t) err += (x[t] - xh[t]) * (x[t] - xh[t]);
        REQUIRE(trace.rows[i].distortion == Approx(err / 64.0).epsilon(1e-9));
    }
}

TEST_CASE("crom: gauss-markov source stays in the gaussian distortion band",
          "[crom][slow]") {
    // correlated input is rotated into a near-spherical residual, so the
    // distortion band should match the iid case
    auto p = params_for(256, 1, 1.0, SchemeKind::UniformHaar, 2030);
    SourceSpec src{SourceKind::GaussMarkov, 1.0, 0.9, 606};
    const std::size_t trials = 25;
    double at_full = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        SignalBlock x = generate_block(src, 256, t);
        CromParams pt = p;
        pt.scheme.seed = derive_seed(2030, stream_tag::codec, t);
        CromEncoding enc = crom_encode(x, pt);
        DistortionTrace trace = distortion_trace(x, enc);
        at_full += trace.rows.back().distortion;
    }
    at_full /= double(trials);
    REQUIRE(at_full >= std::exp(-2.0 * 1.0) - 0.05);
    REQUIRE(at_full <= std::exp(-2.0 * 1.0) + 0.25);
}
