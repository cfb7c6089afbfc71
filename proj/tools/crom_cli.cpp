// crom: rateless lossy-compression toolkit command line.
//
// Subcommands: encode, decode, simulate, zero-rate, channel.
// Exit codes: 0 success, 2 configuration error, 3 format/corruption error.

#include <CLI11.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crom/channel.hpp"
#include "crom/experiment.hpp"
#include "crom/io.hpp"
#include "crom/stats.hpp"

namespace {

using namespace crom;

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input file: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              std::streamsize(bytes.size()));
    if (!out) throw ConfigError("failed writing output file: " + path);
}

// sample files are raw little-endian 64-bit floats
SignalBlock read_samples(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_bytes(path);
    if (bytes.size() % 8 != 0) {
        throw FormatError("sample file size is not a multiple of 8 bytes: " + path);
    }
    SignalBlock x(bytes.size() / 8);
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= std::uint64_t(bytes[8 * i + b]) << (8 * b);
        x[i] = std::bit_cast<double>(v);
    }
    return x;
}

void write_samples(const std::string& path, std::span<const double> x) {
    std::vector<std::uint8_t> bytes(x.size() * 8);
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::uint64_t v = std::bit_cast<std::uint64_t>(x[i]);
        for (int b = 0; b < 8; ++b) bytes[8 * i + b] = std::uint8_t(v >> (8 * b));
    }
    write_bytes(path, bytes);
}

SchemeKind parse_scheme(const std::string& name) {
    if (name == "uniform-haar") return SchemeKind::UniformHaar;
    if (name == "sparse-givens") return SchemeKind::SparseGivens;
    if (name == "sparse-givens-dct") return SchemeKind::SparseGivensThenDct;
    throw ConfigError("unknown transform scheme: " + name);
}

Schedule parse_schedule(const std::string& name) {
    if (name == "simulation") return Schedule::Simulation;
    if (name == "theorem") return Schedule::Theorem;
    throw ConfigError("unknown schedule: " + name);
}

SourceKind parse_source(const std::string& name) {
    if (name == "gaussian-iid") return SourceKind::GaussianIid;
    if (name == "laplacian-iid") return SourceKind::LaplacianIid;
    if (name == "uniform-iid") return SourceKind::UniformIid;
    if (name == "gauss-markov") return SourceKind::GaussMarkov;
    throw ConfigError("unknown source kind: " + name);
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << text;
}

struct EncodeArgs {
    std::string input, output;
    std::size_t n = 0;  // 0 = whole file
    std::size_t k = 1;
    double rate = 0.0;
    std::string scheme = "uniform-haar";
    std::uint64_t seed = 0;
    double sigma2 = 0.0;  // 0 = estimate from the block
    std::string schedule = "simulation";
    double gamma = 0.0;
};

int run_encode(const EncodeArgs& a) {
    SignalBlock samples = read_samples(a.input);
    std::size_t n = a.n == 0 ? samples.size() : a.n;
    if (samples.size() < n) {
        throw ConfigError("input has " + std::to_string(samples.size()) +
                          " samples, need n=" + std::to_string(n));
    }
    samples.resize(n);
    double sigma2 = a.sigma2;
    if (sigma2 <= 0.0) {
        sigma2 = squared_norm(samples) / double(n);  // recorded in the header
        if (sigma2 <= 0.0) throw ConfigError("cannot estimate sigma2 from an all-zero block");
    }
    CromParams params =
        make_crom_params(n, a.k, a.rate, TransformScheme{parse_scheme(a.scheme), a.seed, n},
                         sigma2, parse_schedule(a.schedule), a.gamma);
    CromEncoding enc = crom_encode(samples, params);
    std::vector<std::uint8_t> bytes = write_stream(enc);
    write_bytes(a.output, bytes);
    std::cerr << "encoded n=" << n << " k=" << a.k << " L=" << params.iterations << " ("
              << bytes.size() << " bytes, scheme " << scheme_name(params.scheme.kind) << ")\n";
    return 0;
}

struct DecodeArgs {
    std::string input, output;
    std::optional<std::size_t> prefix_messages;
    std::optional<std::size_t> prefix_bytes;
};

int run_decode(const DecodeArgs& a) {
    std::vector<std::uint8_t> bytes = read_bytes(a.input);
    std::span<const std::uint8_t> view(bytes);
    if (a.prefix_bytes) view = view.first(std::min(view.size(), *a.prefix_bytes));
    ReadResult stream = read_stream(view, a.prefix_messages);
    SignalBlock xh = decode_prefix(stream.messages, stream.params);
    write_samples(a.output, xh);
    std::cerr << "decoded " << stream.messages.size() << "/" << stream.expected_messages
              << " messages";
    if (stream.truncated_mid_message) std::cerr << " (trailing partial message discarded)";
    std::cerr << "\n";
    return 0;
}

struct SimulateArgs {
    std::string codec = "crom";
    std::size_t n = 1024;
    std::size_t k = 1;
    std::size_t codebook = 256;
    double rate = 1.0;
    std::size_t trials = 100;
    std::string scheme = "uniform-haar";
    std::string schedule = "simulation";
    double gamma = 0.0;
    std::string source = "gaussian-iid";
    double variance = 1.0;
    double rho = 0.9;
    std::vector<double> grid{0.25, 0.5, 0.75, 1.0};
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string output = "-";
};

int run_simulate(const SimulateArgs& a) {
    ExperimentSpec spec;
    if (a.codec == "crom") {
        spec.params =
            make_crom_params(a.n, a.k, a.rate, TransformScheme{parse_scheme(a.scheme), 0, a.n},
                             a.variance, parse_schedule(a.schedule), a.gamma);
    } else if (a.codec == "sparc") {
        spec.params = make_sparc_params(a.n, a.codebook, a.rate, 0);
    } else if (a.codec == "zero-rate") {
        spec.params = make_zero_rate_code(a.n, a.k);
    } else {
        throw ConfigError("unknown codec: " + a.codec);
    }
    spec.source = SourceSpec{parse_source(a.source), a.variance,
                             parse_source(a.source) == SourceKind::GaussMarkov ? a.rho : 0.0,
                             a.seed};
    spec.trials = a.trials;
    spec.rate_grid = a.grid;
    spec.seed = a.seed;
    spec.threads = a.threads;
    std::ostringstream os;
    write_csv(os, run_experiment(spec));
    emit(a.output, os.str());
    return 0;
}

struct ZeroRateArgs {
    std::size_t n = 16384;
    std::size_t k = 1;
    std::size_t trials = 200;
    double eps = 0.1;
    double alpha = 0.0;  // 0 = closed-form default
    std::uint64_t seed = 0;
    std::string output = "-";
};

int run_zero_rate(const ZeroRateArgs& a) {
    ZeroRateCode code = a.alpha > 0.0 ? make_zero_rate_code(a.n, a.k, a.alpha)
                                      : make_zero_rate_code(a.n, a.k);
    if (a.trials < 1) throw ConfigError("zero-rate: need trials >= 1");
    const double rn = zr_rate_nats(code);
    const double d_target = 1.0 - 2.0 * rn + std::sqrt(2.0 / double(a.n)) * q_inv(a.eps);
    SourceSpec src{SourceKind::GaussianIid, 1.0, 0.0, a.seed};
    KahanSum dist_sum, gain_sum;
    std::vector<double> dists(a.trials);
    std::size_t exceed = 0;
    for (std::size_t t = 0; t < a.trials; ++t) {
        SignalBlock x = generate_block(src, a.n, t);
        SignalBlock xh = zr_decode(zr_encode(x, code), code);
        double err = 0.0;
        for (std::size_t i = 0; i < a.n; ++i) err += (x[i] - xh[i]) * (x[i] - xh[i]);
        double d = err / double(a.n);
        dists[t] = d;
        dist_sum.add(d);
        gain_sum.add((squared_norm(x) - err) / double(a.n));
        if (d > d_target) ++exceed;
    }
    double mean_d = dist_sum.value() / double(a.trials);
    KahanSum var;
    for (double d : dists) var.add((d - mean_d) * (d - mean_d));
    double sd = a.trials > 1 ? std::sqrt(var.value() / double(a.trials - 1)) : 0.0;
    double gain_ratio = double(a.n) * (gain_sum.value() / double(a.trials)) /
                        (2.0 * std::log(double(a.n)));
    std::ostringstream os;
    os << "# crom-zero-rate-csv v1\n"
       << "n,k,alpha,rate_nats,trials,eps,mean_distortion,std_distortion,excess_freq,"
          "d_target,gain_ratio\n"
       << a.n << ',' << a.k << ',' << format_csv_double(code.alpha) << ','
       << format_csv_double(rn) << ',' << a.trials << ',' << format_csv_double(a.eps) << ','
       << format_csv_double(mean_d) << ',' << format_csv_double(sd) << ','
       << format_csv_double(double(exceed) / double(a.trials)) << ','
       << format_csv_double(d_target) << ',' << format_csv_double(gain_ratio) << '\n';
    emit(a.output, os.str());
    return 0;
}

struct ChannelArgs {
    std::vector<std::size_t> n_grid{256, 1024, 4096};
    std::size_t trials = 2000;
    std::uint64_t seed = 0;
    std::string output = "-";
};

int run_channel(const ChannelArgs& a) {
    std::ostringstream os;
    os << "# crom-channel-csv v1\n"
       << "n,trials,error_rate,P_n,R_n,capacity_ratio\n";
    for (std::size_t n : a.n_grid) {
        ChannelCode code = make_channel_code(n);
        double pe = simulate_error_rate(code, a.trials, a.seed);
        os << n << ',' << a.trials << ',' << format_csv_double(pe) << ','
           << format_csv_double(code.avg_power) << ',' << format_csv_double(code.rate_nats)
           << ',' << format_csv_double(capacity_ratio(code)) << '\n';
    }
    emit(a.output, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rateless lossy-compression toolkit"};
    app.require_subcommand(1);

    EncodeArgs enc;
    auto* cmd_enc = app.add_subcommand("encode", "encode raw f64 samples into a .crom stream");
    cmd_enc->add_option("input", enc.input, "raw little-endian f64 sample file")->required();
    cmd_enc->add_option("-o,--output", enc.output, "output .crom path")->required();
    cmd_enc->add_option("--rate", enc.rate, "total rate in nats/symbol")->required();
    cmd_enc->add_option("--n", enc.n, "block length (default: whole file)");
    cmd_enc->add_option("--k", enc.k, "indices described per iteration");
    cmd_enc->add_option("--scheme", enc.scheme,
                        "uniform-haar | sparse-givens | sparse-givens-dct");
    cmd_enc->add_option("--seed", enc.seed, "transform seed stored in the header");
    cmd_enc->add_option("--sigma2", enc.sigma2, "source power (default: estimated)");
    cmd_enc->add_option("--schedule", enc.schedule, "simulation | theorem");
    cmd_enc->add_option("--gamma", enc.gamma, "slack parameter for the theorem schedule");

    DecodeArgs dec;
    auto* cmd_dec = app.add_subcommand("decode", "decode a (possibly truncated) .crom stream");
    cmd_dec->add_option("input", dec.input, ".crom stream")->required();
    cmd_dec->add_option("-o,--output", dec.output, "output raw f64 path")->required();
    std::size_t pm = 0, pb = 0;
    auto* opm = cmd_dec->add_option("--prefix-messages", pm, "decode only the first i messages");
    auto* opb = cmd_dec->add_option("--prefix-bytes", pb, "read only the first b bytes");
    opm->excludes(opb);

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Monte Carlo distortion-rate curves (CSV)");
    cmd_sim->add_option("--codec", sim.codec, "crom | sparc | zero-rate");
    cmd_sim->add_option("--n", sim.n, "block length");
    cmd_sim->add_option("--k", sim.k, "indices per iteration (crom, zero-rate)");
    cmd_sim->add_option("--M", sim.codebook, "sub-codebook size (sparc)");
    cmd_sim->add_option("--rate", sim.rate, "total rate in nats/symbol");
    cmd_sim->add_option("--trials", sim.trials, "Monte Carlo trials");
    cmd_sim->add_option("--scheme", sim.scheme,
                        "uniform-haar | sparse-givens | sparse-givens-dct");
    cmd_sim->add_option("--schedule", sim.schedule, "simulation | theorem");
    cmd_sim->add_option("--gamma", sim.gamma, "theorem-schedule slack");
    cmd_sim->add_option("--source", sim.source,
                        "gaussian-iid | laplacian-iid | uniform-iid | gauss-markov");
    cmd_sim->add_option("--variance", sim.variance, "marginal second moment");
    cmd_sim->add_option("--rho", sim.rho, "gauss-markov correlation");
    cmd_sim->add_option("--grid", sim.grid, "report rates (nats)")->delimiter(',');
    cmd_sim->add_option("--seed", sim.seed, "root seed");
    cmd_sim->add_option("--threads", sim.threads, "worker threads (0 = auto)");
    cmd_sim->add_option("-o,--output", sim.output, "CSV path (default stdout)");

    ZeroRateArgs zr;
    auto* cmd_zr = app.add_subcommand("zero-rate", "zero-rate scheme Monte Carlo report");
    cmd_zr->add_option("--n", zr.n, "block length");
    cmd_zr->add_option("--k", zr.k, "described extremes");
    cmd_zr->add_option("--trials", zr.trials, "Monte Carlo trials");
    cmd_zr->add_option("--eps", zr.eps, "target excess-distortion probability");
    cmd_zr->add_option("--alpha", zr.alpha, "override reconstruction magnitude");
    cmd_zr->add_option("--seed", zr.seed, "root seed");
    cmd_zr->add_option("-o,--output", zr.output, "CSV path (default stdout)");

    ChannelArgs ch;
    auto* cmd_ch = app.add_subcommand("channel", "zero-rate AWGN code error-rate sweep (CSV)");
    cmd_ch->add_option("--n-grid", ch.n_grid, "block lengths")->delimiter(',');
    cmd_ch->add_option("--trials", ch.trials, "Monte Carlo trials per n");
    cmd_ch->add_option("--seed", ch.seed, "root seed");
    cmd_ch->add_option("-o,--output", ch.output, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
        if (*opm) dec.prefix_messages = pm;
        if (*opb) dec.prefix_bytes = pb;
        if (cmd_enc->parsed()) return run_encode(enc);
        if (cmd_dec->parsed()) return run_decode(dec);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_zr->parsed()) return run_zero_rate(zr);
        if (cmd_ch->parsed()) return run_channel(ch);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const crom::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const crom::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
