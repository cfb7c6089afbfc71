#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "crom/common.hpp"
#include "crom/crom.hpp"
#include "crom/source.hpp"
#include "crom/sparc.hpp"
#include "crom/zero_rate.hpp"

namespace crom {

enum class CodecKind : std::uint8_t { Crom, Sparc, ZeroRate };

inline const char* codec_name(CodecKind k) {
    switch (k) {
        case CodecKind::Crom: return "crom";
        case CodecKind::Sparc: return "sparc";
        case CodecKind::ZeroRate: return "zero-rate";
    }
    return "?";
}

/// A Monte Carlo run: one codec, one source, `trials` blocks, distortion
/// reported at each grid rate.
struct ExperimentSpec {
    std::variant<CromParams, SparcParams, ZeroRateCode> params;
    SourceSpec source;
    std::size_t trials = 100;
    std::vector<double> rate_grid;  // ignored for the zero-rate codec
    std::uint64_t seed = 0;         // per-trial codec randomness derives from this
    unsigned threads = 0;           // 0 = hardware concurrency
};

struct CurveRow {
    std::string codec;
    std::size_t n = 0;
    std::string param;     // "k=.." or "M=.."
    std::string scheme;    // transform scheme, "-" when not applicable
    std::string schedule;  // "-" when not applicable
    std::string source;
    std::size_t trials = 0;
    double rate_nats = 0.0;
    std::size_t messages = 0;
    double mean_distortion = 0.0;
    double std_distortion = 0.0;
};

namespace detail {

/// Run body(t) for t in [0, trials) on `threads` workers. Results must be
/// written to per-trial slots so scheduling cannot change any output.
inline void parallel_trials(std::size_t trials, unsigned threads,
                            const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = unsigned(std::min<std::size_t>(threads, trials));
    if (threads <= 1) {
        for (std::size_t t = 0; t < trials; ++t) body(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t t = next.fetch_add(1);
            if (t >= trials) return;
            try {
                body(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(trials);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

inline void mean_std(const std::vector<double>& values, double& mean, double& sd) {
    KahanSum sum;
    for (double v : values) sum.add(v);
    mean = sum.value() / double(values.size());
    if (values.size() < 2) {
        sd = 0.0;
        return;
    }
    KahanSum sq;
    for (double v : values) sq.add((v - mean) * (v - mean));
    sd = std::sqrt(sq.value() / double(values.size() - 1));
}

/// Iterations whose message cost fits within `rate` nats.
inline std::size_t prefix_for_rate(double rate, double per_message_nats, std::size_t limit) {
    if (rate <= 0.0) return 0;
    std::size_t i = std::size_t(std::floor(rate / per_message_nats + 1e-12));
    return std::min(i, limit);
}

}  // namespace detail

inline std::vector<CurveRow> run_experiment(const ExperimentSpec& spec) {
    if (spec.trials < 1) throw ConfigError("experiment: need trials >= 1");
    spec.source.validate();

    std::vector<double> grid = spec.rate_grid;
    std::string param_label, scheme_label = "-", schedule_label = "-";
    std::size_t n = 0;
    double max_rate = 0.0;

    if (std::holds_alternative<CromParams>(spec.params)) {
        const auto& p = std::get<CromParams>(spec.params);
        n = p.n;
        max_rate = p.rate;
        param_label = "k=" + std::to_string(p.k);
        scheme_label = scheme_name(p.scheme.kind);
        schedule_label = schedule_name(p.schedule);
    } else if (std::holds_alternative<SparcParams>(spec.params)) {
        const auto& p = std::get<SparcParams>(spec.params);
        n = p.n;
        max_rate = p.rate;
        param_label = "M=" + std::to_string(p.codebook_size);
    } else {
        const auto& c = std::get<ZeroRateCode>(spec.params);
        n = c.n;
        max_rate = zr_rate_nats(c);
        param_label = "k=" + std::to_string(c.k);
        grid = {max_rate};  // a zero-rate code has a single operating point
    }
    if (grid.empty()) throw ConfigError("experiment: rate grid is empty");
    for (double r : grid) {
        if (r < 0.0 || r > max_rate + 1e-9) {
            throw ConfigError("experiment: grid rate " + std::to_string(r) +
                              " outside [0, R=" + std::to_string(max_rate) + "]");
        }
    }

    // d[g][t]: distortion of trial t at grid point g
    std::vector<std::vector<double>> d(grid.size(), std::vector<double>(spec.trials, 0.0));
    std::vector<std::size_t> messages_used(grid.size(), 0);
    if (std::holds_alternative<CromParams>(spec.params)) {
        const auto& p = std::get<CromParams>(spec.params);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            messages_used[g] = detail::prefix_for_rate(grid[g], p.message_rate_nats(), p.iterations);
        }
    } else if (std::holds_alternative<SparcParams>(spec.params)) {
        const auto& p = std::get<SparcParams>(spec.params);
        const double per_message = std::log(double(p.codebook_size)) / double(p.n);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            messages_used[g] = detail::prefix_for_rate(grid[g], per_message, p.iterations);
        }
    } else {
        messages_used[0] = 1;
    }

    auto run_trial = [&](std::size_t t) {
        try {
            SignalBlock x = generate_block(spec.source, n, t);
            if (std::holds_alternative<CromParams>(spec.params)) {
                CromParams p = std::get<CromParams>(spec.params);
                p.scheme.seed = derive_seed(spec.seed, stream_tag::codec, t);
                CromEncoding enc = crom_encode(x, p);
                DistortionTrace trace = distortion_trace(x, enc);
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    d[g][t] = trace.rows[messages_used[g]].distortion;
                }
            } else if (std::holds_alternative<SparcParams>(spec.params)) {
                SparcParams p = std::get<SparcParams>(spec.params);
                p.seed = derive_seed(spec.seed, stream_tag::codec, t);
                SparcEncoding enc = sparc_encode(x, p);
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    SignalBlock xh = sparc_decode_prefix(enc.indices, p, messages_used[g]);
                    double err = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        err += (x[j] - xh[j]) * (x[j] - xh[j]);
                    }
                    d[g][t] = err / double(n);
                }
            } else {
                const auto& c = std::get<ZeroRateCode>(spec.params);
                IndexMessage m = zr_encode(x, c);
                SignalBlock xh = zr_decode(m, c);
                double err = 0.0;
                for (std::size_t j = 0; j < n; ++j) err += (x[j] - xh[j]) * (x[j] - xh[j]);
                d[0][t] = err / double(n);
            }
        } catch (const ConfigError& e) {
            throw ConfigError("trial " + std::to_string(t) + ": " + e.what());
        }
    };
    detail::parallel_trials(spec.trials, spec.threads, run_trial);

    std::vector<CurveRow> rows;
    rows.reserve(grid.size() * 2);
    const double sigma2 = spec.source.variance;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        CurveRow row;
        row.codec = codec_name(std::holds_alternative<CromParams>(spec.params) ? CodecKind::Crom
                               : std::holds_alternative<SparcParams>(spec.params)
                                   ? CodecKind::Sparc
                                   : CodecKind::ZeroRate);
        row.n = n;
        row.param = param_label;
        row.scheme = scheme_label;
        row.schedule = schedule_label;
        row.source = source_name(spec.source.kind);
        row.trials = spec.trials;
        row.rate_nats = grid[g];
        row.messages = messages_used[g];
        detail::mean_std(d[g], row.mean_distortion, row.std_distortion);
        rows.push_back(row);
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
        CurveRow ref;
        ref.codec = "dg-reference";
        ref.n = n;
        ref.param = "-";
        ref.scheme = "-";
        ref.schedule = "-";
        ref.source = source_name(spec.source.kind);
        ref.trials = 0;
        ref.rate_nats = grid[g];
        ref.messages = 0;
        ref.mean_distortion = sigma2 * std::exp(-2.0 * grid[g]);
        ref.std_distortion = 0.0;
        rows.push_back(ref);
    }
    return rows;
}

inline constexpr const char* kCsvHeader =
    "codec,n,param,scheme,schedule,source,trials,rate_nats,messages,mean_distortion,"
    "std_distortion";

inline std::string format_csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_csv(std::ostream& os, std::span<const CurveRow> rows) {
    os << "# crom-curve-csv v1\n" << kCsvHeader << "\n";
    for (const CurveRow& r : rows) {
        os << r.codec << ',' << r.n << ',' << r.param << ',' << r.scheme << ',' << r.schedule
           << ',' << r.source << ',' << r.trials << ',' << format_csv_double(r.rate_nats) << ','
           << r.messages << ',' << format_csv_double(r.mean_distortion) << ','
           << format_csv_double(r.std_distortion) << '\n';
    }
}

}  // namespace crom
