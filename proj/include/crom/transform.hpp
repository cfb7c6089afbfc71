#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crom/common.hpp"
#include "crom/random.hpp"

namespace crom {

enum class TransformKind { DenseHaar, GivensLayer, Dct2, Composition };

namespace detail {

inline bool is_pow2(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

inline std::size_t log2_exact(std::size_t n) { return std::size_t(std::countr_zero(n)); }

// Radix-2 in-place complex FFT with precomputed twiddles.
struct FftPlan {
    std::size_t n = 0;
    std::vector<std::uint32_t> bitrev;
    std::vector<double> wre, wim;  // twiddles, packed per stage

    explicit FftPlan(std::size_t size) : n(size) {
        bitrev.resize(n);
        std::size_t bits = log2_exact(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
            bitrev[i] = std::uint32_t(r);
        }
        wre.reserve(n);
        wim.reserve(n);
        for (std::size_t len = 2; len <= n; len <<= 1) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                double ang = -2.0 * std::numbers::pi * double(j) / double(len);
                wre.push_back(std::cos(ang));
                wim.push_back(std::sin(ang));
            }
        }
    }

    void run(std::span<double> re, std::span<double> im) const {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = bitrev[i];
            if (i < j) {
                std::swap(re[i], re[j]);
                std::swap(im[i], im[j]);
            }
        }
        std::size_t toff = 0;
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const std::size_t half = len / 2;
            for (std::size_t base = 0; base < n; base += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const double cr = wre[toff + j], ci = wim[toff + j];
                    const std::size_t a = base + j, b = base + j + half;
                    const double tr = re[b] * cr - im[b] * ci;
                    const double ti = re[b] * ci + im[b] * cr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            toff += half;
        }
    }
};

// Dense Haar-distributed orthogonal operator in implicit Householder form.
// Equal in distribution to the QR factor (with positive-diagonal sign fix)
// of an n x n iid standard-normal matrix: the j-th reflector of that QR is
// built from an iid Gaussian vector of length n-j+1 independent of the
// earlier ones, so the reflectors are drawn directly. Construction and a
// single application both cost O(n^2).
struct DenseHaarPayload {
    std::size_t n = 0;
    std::vector<double> reflectors;  // packed v_j, lengths n, n-1, ..., 2
    std::vector<double> tau;         // n-1 scale factors 2/||v_j||^2
    std::vector<double> sign;        // n diagonal sign corrections

    DenseHaarPayload(std::size_t size, Rng& rng) : n(size) {
        sign.resize(n);
        if (n == 0) throw ConfigError("dense haar: need n >= 1");
        if (n > 1) {
            reflectors.resize(n * (n + 1) / 2 - 1);
            tau.resize(n - 1);
            std::size_t off = 0;
            for (std::size_t j = 0; j + 1 < n; ++j) {
                const std::size_t len = n - j;
                std::span<double> v(reflectors.data() + off, len);
                rng.fill_normal(v);
                double g0 = v[0];
                double a = norm(v);
                double s0 = (g0 >= 0.0) ? 1.0 : -1.0;
                v[0] += s0 * a;
                double vnorm2 = 2.0 * a * (a + std::abs(g0));
                tau[j] = (vnorm2 > 0.0) ? 2.0 / vnorm2 : 0.0;
                sign[j] = -s0;
                off += len;
            }
        }
        sign[n - 1] = (rng.normal() >= 0.0) ? 1.0 : -1.0;
    }

    void reflect(std::size_t j, std::span<double> x) const {
        const std::size_t len = n - j;
        const double* v = reflectors.data() + (j * n - j * (j - 1) / 2);
        double* y = x.data() + j;
        double t = 0.0;
        for (std::size_t i = 0; i < len; ++i) t += v[i] * y[i];
        t *= tau[j];
        for (std::size_t i = 0; i < len; ++i) y[i] -= t * v[i];
    }

    void forward(std::span<double> x) const {  // x <- Q D x
        for (std::size_t i = 0; i < n; ++i) x[i] *= sign[i];
        for (std::size_t j = n - 1; j-- > 0;) reflect(j, x);
    }

    void adjoint(std::span<double> x) const {  // x <- D Q^T x
        for (std::size_t j = 0; j + 1 < n; ++j) reflect(j, x);
        for (std::size_t i = 0; i < n; ++i) x[i] *= sign[i];
    }
};

// One layer of the recursive sparse Givens family: 2^(layer-1) diagonal
// blocks, each rotating coordinate pairs (p, p + half) by one angle.
struct GivensLayerPayload {
    std::size_t n = 0;
    std::size_t layer = 0;  // r in [1, log2(n)]
    std::vector<double> angles;
    std::vector<double> c, s;

    GivensLayerPayload(std::size_t size, std::size_t r, std::vector<double> theta)
        : n(size), layer(r), angles(std::move(theta)) {
        if (!is_pow2(n) || n < 2) {
            throw ConfigError("givens layer: n must be a power of two >= 2, got " +
                              std::to_string(n));
        }
        const std::size_t stages = log2_exact(n);
        if (layer < 1 || layer > stages) {
            throw ConfigError("givens layer: layer index must lie in [1, log2(n)]=[1, " +
                              std::to_string(stages) + "], got " + std::to_string(layer));
        }
        if (angles.size() != n / 2) {
            throw ConfigError("givens layer: need exactly n/2 angles, got " +
                              std::to_string(angles.size()));
        }
        c.resize(n / 2);
        s.resize(n / 2);
        for (std::size_t i = 0; i < n / 2; ++i) {
            c[i] = std::cos(angles[i]);
            s[i] = std::sin(angles[i]);
        }
    }

    std::size_t half() const { return n >> layer; }

    void forward(std::span<double> x) const {
        const std::size_t h = half();
        std::size_t a = 0;
        for (std::size_t base = 0; base < n; base += 2 * h) {
            for (std::size_t j = 0; j < h; ++j, ++a) {
                const double xp = x[base + j], xq = x[base + j + h];
                x[base + j] = c[a] * xp - s[a] * xq;
                x[base + j + h] = s[a] * xp + c[a] * xq;
            }
        }
    }

    void adjoint(std::span<double> x) const {
        const std::size_t h = half();
        std::size_t a = 0;
        for (std::size_t base = 0; base < n; base += 2 * h) {
            for (std::size_t j = 0; j < h; ++j, ++a) {
                const double xp = x[base + j], xq = x[base + j + h];
                x[base + j] = c[a] * xp + s[a] * xq;
                x[base + j + h] = -s[a] * xp + c[a] * xq;
            }
        }
    }
};

// Orthonormal DCT-II. Power-of-two sizes run through a length-n complex FFT
// (even/odd reordering plus a quarter-sample phase twist); other sizes fall
// back to direct O(n^2) evaluation.
struct Dct2Payload {
    std::size_t n = 0;
    std::vector<double> pre_c, pre_s;  // cos/sin(pi j / 2n)
    std::vector<double> scale;         // c_j sqrt(2/n)
    std::vector<FftPlan> plan;         // empty unless power of two and n > 1

    explicit Dct2Payload(std::size_t size) : n(size) {
        if (n < 1) throw ConfigError("dct2: need n >= 1");
        pre_c.resize(n);
        pre_s.resize(n);
        scale.resize(n);
        const double root = std::sqrt(2.0 / double(n));
        for (std::size_t j = 0; j < n; ++j) {
            double ang = std::numbers::pi * double(j) / (2.0 * double(n));
            pre_c[j] = std::cos(ang);
            pre_s[j] = std::sin(ang);
            scale[j] = (j == 0) ? root / std::numbers::sqrt2 : root;
        }
        if (is_pow2(n) && n > 1) plan.emplace_back(n);
    }

    void forward(std::span<double> x) const {
        if (plan.empty()) {
            forward_direct(x);
            return;
        }
        std::vector<double> re(n), im(n, 0.0);
        for (std::size_t t = 0; t < n / 2; ++t) {
            re[t] = x[2 * t];
            re[n - 1 - t] = x[2 * t + 1];
        }
        plan.front().run(re, im);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = scale[j] * (re[j] * pre_c[j] + im[j] * pre_s[j]);
        }
    }

    void adjoint(std::span<double> x) const {
        if (plan.empty()) {
            adjoint_direct(x);
            return;
        }
        std::vector<double> re(n), im(n);
        // rebuild the FFT spectrum from the cosine coefficients, then invert
        for (std::size_t j = 0; j < n; ++j) {
            double sj = x[j] / scale[j];
            double sn = (j == 0) ? 0.0 : x[n - j] / scale[n - j];
            re[j] = pre_c[j] * sj + pre_s[j] * sn;
            im[j] = -(pre_s[j] * sj - pre_c[j] * sn);  // conjugated for inverse FFT
        }
        plan.front().run(re, im);
        const double inv = 1.0 / double(n);
        for (std::size_t t = 0; t < n / 2; ++t) {
            x[2 * t] = re[t] * inv;
            x[2 * t + 1] = re[n - 1 - t] * inv;
        }
    }

    void forward_direct(std::span<double> x) const {
        std::vector<double> y(n, 0.0);
        const double step = std::numbers::pi / (2.0 * double(n));
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                acc += x[t] * std::cos(step * double(j) * double(2 * t + 1));
            }
            y[j] = scale[j] * acc;
        }
        std::copy(y.begin(), y.end(), x.begin());
    }

    void adjoint_direct(std::span<double> x) const {
        std::vector<double> y(n, 0.0);
        const double step = std::numbers::pi / (2.0 * double(n));
        for (std::size_t t = 0; t < n; ++t) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += scale[j] * x[j] * std::cos(step * double(j) * double(2 * t + 1));
            }
            y[t] = acc;
        }
        std::copy(y.begin(), y.end(), x.begin());
    }
};

}  // namespace detail

/// A length-preserving linear operator with forward and adjoint application.
/// Instances are immutable after construction and safe to apply concurrently.
class OrthogonalTransform {
public:
    static OrthogonalTransform make_dense_haar(std::size_t n, Rng& rng) {
        return OrthogonalTransform(detail::DenseHaarPayload(n, rng));
    }

    static OrthogonalTransform make_givens_layer(std::size_t n, std::size_t layer,
                                                 std::vector<double> angles) {
        return OrthogonalTransform(detail::GivensLayerPayload(n, layer, std::move(angles)));
    }

    static OrthogonalTransform make_dct2(std::size_t n) {
        return OrthogonalTransform(detail::Dct2Payload(n));
    }

    /// compose(a, b) applies b first, then a (operator product a*b).
    static OrthogonalTransform make_composition(std::vector<OrthogonalTransform> parts) {
        if (parts.empty()) throw ConfigError("composition: need at least one transform");
        for (const auto& p : parts) {
            if (p.dim() != parts.front().dim()) {
                throw ConfigError("composition: all parts must share the same dimension");
            }
        }
        return OrthogonalTransform(Composition{std::move(parts)});
    }

    TransformKind kind() const {
        switch (payload_.index()) {
            case 0: return TransformKind::DenseHaar;
            case 1: return TransformKind::GivensLayer;
            case 2: return TransformKind::Dct2;
            default: return TransformKind::Composition;
        }
    }

    std::size_t dim() const {
        switch (payload_.index()) {
            case 0: return std::get<0>(payload_).n;
            case 1: return std::get<1>(payload_).n;
            case 2: return std::get<2>(payload_).n;
            default: return std::get<3>(payload_).parts.front().dim();
        }
    }

    void apply_inplace(std::span<double> x) const {
        require_dim(x, dim(), "transform apply");
        switch (payload_.index()) {
            case 0: std::get<0>(payload_).forward(x); break;
            case 1: std::get<1>(payload_).forward(x); break;
            case 2: std::get<2>(payload_).forward(x); break;
            default: {
                const auto& parts = std::get<3>(payload_).parts;
                for (auto it = parts.rbegin(); it != parts.rend(); ++it) it->apply_inplace(x);
                break;
            }
        }
    }

    void apply_adjoint_inplace(std::span<double> x) const {
        require_dim(x, dim(), "transform adjoint apply");
        switch (payload_.index()) {
            case 0: std::get<0>(payload_).adjoint(x); break;
            case 1: std::get<1>(payload_).adjoint(x); break;
            case 2: std::get<2>(payload_).adjoint(x); break;
            default: {
                const auto& parts = std::get<3>(payload_).parts;
                for (const auto& p : parts) p.apply_adjoint_inplace(x);
                break;
            }
        }
    }

    SignalBlock apply(SignalBlock x) const {
        apply_inplace(x);
        return x;
    }

    SignalBlock apply_adjoint(SignalBlock x) const {
        apply_adjoint_inplace(x);
        return x;
    }

    /// Givens payload accessors (empty for other kinds).
    std::span<const double> givens_angles() const {
        if (auto* g = std::get_if<1>(&payload_)) return g->angles;
        return {};
    }
    std::size_t givens_layer_index() const {
        if (auto* g = std::get_if<1>(&payload_)) return g->layer;
        return 0;
    }

private:
    struct Composition {
        std::vector<OrthogonalTransform> parts;
    };

    using Payload = std::variant<detail::DenseHaarPayload, detail::GivensLayerPayload,
                                 detail::Dct2Payload, Composition>;

    explicit OrthogonalTransform(Payload p) : payload_(std::move(p)) {}

    Payload payload_;
};

enum class SchemeKind : std::uint8_t { UniformHaar = 0, SparseGivens = 1, SparseGivensThenDct = 2 };

inline const char* scheme_name(SchemeKind k) {
    switch (k) {
        case SchemeKind::UniformHaar: return "uniform-haar";
        case SchemeKind::SparseGivens: return "sparse-givens";
        case SchemeKind::SparseGivensThenDct: return "sparse-givens-dct";
    }
    return "?";
}

/// Deterministic recipe for the transform sequence A_1, A_2, ...:
/// (kind, seed, n) reproduce every element, and each element is derivable
/// in isolation (per-index substreams), so decoders can regenerate
/// transforms in any order with O(1) storage.
struct TransformScheme {
    SchemeKind kind = SchemeKind::UniformHaar;
    std::uint64_t seed = 0;
    std::size_t n = 0;

    void validate() const {
        if (n < 1) throw ConfigError("transform scheme: need n >= 1");
        if (kind != SchemeKind::UniformHaar && (!detail::is_pow2(n) || n < 2)) {
            throw ConfigError(
                "transform scheme: sparse Givens schemes require n to be a power of two >= 2, "
                "got n=" +
                std::to_string(n));
        }
    }
};

/// Build the index-th transform of a scheme (1-based: index 1 yields A_1).
inline OrthogonalTransform make_scheme_transform(const TransformScheme& scheme,
                                                 std::size_t index) {
    scheme.validate();
    if (index < 1) throw ConfigError("make_scheme_transform: index is 1-based");
    Rng rng(derive_seed(scheme.seed, stream_tag::transform, index));
    if (scheme.kind == SchemeKind::UniformHaar) {
        return OrthogonalTransform::make_dense_haar(scheme.n, rng);
    }
    const std::size_t stages = detail::log2_exact(scheme.n);
    const std::size_t layer = ((index - 1) % stages) + 1;  // iteration 1 uses layer 1
    std::vector<double> angles(scheme.n / 2);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    auto givens = OrthogonalTransform::make_givens_layer(scheme.n, layer, std::move(angles));
    if (scheme.kind == SchemeKind::SparseGivens) return givens;
    std::vector<OrthogonalTransform> parts;
    parts.push_back(OrthogonalTransform::make_dct2(scheme.n));
    parts.push_back(std::move(givens));
    return OrthogonalTransform::make_composition(std::move(parts));
}

inline std::vector<OrthogonalTransform> build_sequence(const TransformScheme& scheme,
                                                       std::size_t count) {
    std::vector<OrthogonalTransform> out;
    out.reserve(count);
    for (std::size_t i = 1; i <= count; ++i) out.push_back(make_scheme_transform(scheme, i));
    return out;
}

}  // namespace crom
