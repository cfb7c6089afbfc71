#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crom/common.hpp"
#include "crom/crom.hpp"
#include "crom/topk.hpp"

namespace crom {

using uint128 = unsigned __int128;

/// Fixed header of a .crom stream; all multi-byte fields little-endian.
inline constexpr std::size_t kHeaderBytes = 49;
inline constexpr std::uint8_t kStreamVersion = 1;

namespace detail {

inline constexpr uint128 kUint128Max = ~uint128(0);

// C(n, k) saturating at 2^128 - 1 (safe for ordering comparisons).
inline uint128 choose128_sat(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    uint128 c = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        uint128 f = uint128(n - k + i);
        if (c > kUint128Max / f) return kUint128Max;
        c = c * f / uint128(i);
    }
    return c;
}

inline unsigned bit_width128(uint128 v) {
    unsigned w = 0;
    while (v != 0) {
        ++w;
        v >>= 1;
    }
    return w;
}

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
};

struct ByteReader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    bool need(std::size_t count) const { return pos + count <= bytes.size(); }
    std::uint8_t u8() { return bytes[pos++]; }
    std::uint16_t u16() {
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= std::uint16_t(bytes[pos++]) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

// MSB-first bit packer; messages start at bit offset width*i with no
// inter-message padding, the final byte is zero-padded.
struct BitWriter {
    std::vector<std::uint8_t>& out;
    unsigned fill = 0;  // bits used in the last byte

    void push(uint128 value, unsigned width) {
        for (unsigned b = width; b-- > 0;) {
            if (fill == 0) out.push_back(0);
            unsigned bit = unsigned((value >> b) & 1);
            out.back() |= std::uint8_t(bit << (7 - fill));
            fill = (fill + 1) & 7;
        }
    }
};

struct BitReader {
    std::span<const std::uint8_t> body;

    std::size_t total_bits() const { return body.size() * 8; }

    uint128 read_at(std::size_t bit_offset, unsigned width) const {
        uint128 v = 0;
        for (unsigned b = 0; b < width; ++b) {
            std::size_t pos = bit_offset + b;
            unsigned bit = (body[pos / 8] >> (7 - (pos % 8))) & 1u;
            v = (v << 1) | uint128(bit);
        }
        return v;
    }
};

}  // namespace detail

/// C(n, k); rejects values that do not fit 128 bits.
inline uint128 choose128(std::size_t n, std::size_t k) {
    uint128 c = detail::choose128_sat(n, k);
    if (c == detail::kUint128Max) {
        throw ConfigError("choose128: C(" + std::to_string(n) + ", " + std::to_string(k) +
                          ") exceeds 128 bits; configuration not serializable");
    }
    return c;
}

/// Rank/width of a sorted k-subset in the colexicographic combinatorial
/// number system.
struct SubsetRank {
    uint128 rank = 0;
    unsigned width_bits = 0;
};

/// Bits needed for any rank of a k-of-n subset: ceil(log2 C(n, k)).
inline unsigned subset_rank_width(std::size_t n, std::size_t k) {
    uint128 c = choose128(n, k);
    return detail::bit_width128(c - 1);
}

inline SubsetRank subset_rank(const IndexMessage& m) {
    m.validate();
    SubsetRank r;
    r.width_bits = subset_rank_width(m.n, m.k());
    for (std::size_t j = 0; j < m.indices.size(); ++j) {
        r.rank += detail::choose128_sat(m.indices[j], j + 1);
    }
    return r;
}

inline IndexMessage subset_unrank(uint128 rank, std::size_t n, std::size_t k) {
    if (k < 1 || k >= n) throw ConfigError("subset_unrank: need 1 <= k < n");
    if (rank >= choose128(n, k)) {
        throw FormatError("subset_unrank: rank exceeds C(n, k); corrupt message");
    }
    IndexMessage m;
    m.n = n;
    m.indices.assign(k, 0);
    std::size_t hi = n;  // exclusive upper bound for the next (largest) index
    for (std::size_t j = k; j >= 1; --j) {
        // largest v with C(v, j) <= rank, via binary search on v in [j-1, hi)
        std::size_t lo = j - 1, up = hi;
        while (up - lo > 1) {
            std::size_t mid = lo + (up - lo) / 2;
            if (detail::choose128_sat(mid, j) <= rank) {
                lo = mid;
            } else {
                up = mid;
            }
        }
        m.indices[j - 1] = std::uint32_t(lo);
        rank -= detail::choose128_sat(lo, j);
        hi = lo;
    }
    return m;
}

namespace detail {

inline std::uint8_t scheme_id(SchemeKind k) { return std::uint8_t(k); }

inline SchemeKind scheme_from_id(std::uint8_t id) {
    switch (id) {
        case 0: return SchemeKind::UniformHaar;
        case 1: return SchemeKind::SparseGivens;
        case 2: return SchemeKind::SparseGivensThenDct;
        default: throw FormatError("stream header: unknown transform scheme id " + std::to_string(id));
    }
}

}  // namespace detail

/// Serialize an encoding: 49-byte header, then L fixed-width subset ranks
/// packed MSB-first. Any byte-truncation at a message boundary stays
/// decodable up to that message.
inline std::vector<std::uint8_t> write_stream(const CromEncoding& enc) {
    const CromParams& p = enc.params;
    if (enc.messages.size() != p.iterations) {
        throw ConfigError("write_stream: encoding must carry exactly L messages");
    }
    const unsigned width = subset_rank_width(p.n, p.k);
    detail::ByteWriter w;
    w.bytes.reserve(kHeaderBytes + (std::size_t(width) * p.iterations + 7) / 8);
    w.u8('C');
    w.u8('R');
    w.u8('O');
    w.u8('M');
    w.u8(kStreamVersion);
    w.u32(std::uint32_t(p.n));
    w.u16(std::uint16_t(p.k));
    w.u32(std::uint32_t(p.iterations));
    w.u8(detail::scheme_id(p.scheme.kind));
    w.u64(p.scheme.seed);
    w.f64(p.sigma2);
    w.u8(std::uint8_t(p.schedule));
    w.f64(p.gamma);
    w.f64(p.rate);
    detail::BitWriter bits{w.bytes};
    for (const IndexMessage& m : enc.messages) {
        if (m.n != p.n || m.k() != p.k) {
            throw ConfigError("write_stream: message (n, k) does not match params");
        }
        bits.push(subset_rank(m).rank, width);
    }
    return w.bytes;
}

struct ReadResult {
    CromParams params;
    std::vector<IndexMessage> messages;
    std::size_t expected_messages = 0;  ///< L from the header
    bool truncated_mid_message = false;
};

/// Parse a (possibly truncated) stream. All complete messages present are
/// returned; a trailing partial message is discarded and flagged.
inline ReadResult read_stream(std::span<const std::uint8_t> bytes,
                              std::optional<std::size_t> max_messages = std::nullopt) {
    if (bytes.size() < kHeaderBytes) {
        throw FormatError("stream truncated inside the header (" + std::to_string(bytes.size()) +
                          " of " + std::to_string(kHeaderBytes) + " bytes)");
    }
    detail::ByteReader r{bytes};
    if (r.u8() != 'C' || r.u8() != 'R' || r.u8() != 'O' || r.u8() != 'M') {
        throw FormatError("bad magic: not a crom stream");
    }
    std::uint8_t version = r.u8();
    if (version != kStreamVersion) {
        throw FormatError("unsupported stream version " + std::to_string(version));
    }
    std::uint32_t n = r.u32();
    std::uint16_t k = r.u16();
    std::uint32_t header_iters = r.u32();
    std::uint8_t scheme_id = r.u8();
    std::uint64_t seed = r.u64();
    double sigma2 = r.f64();
    std::uint8_t schedule_id = r.u8();
    double gamma = r.f64();
    double rate = r.f64();
    if (schedule_id > 1) {
        throw FormatError("stream header: unknown schedule id " + std::to_string(schedule_id));
    }
    ReadResult out;
    try {
        TransformScheme scheme{detail::scheme_from_id(scheme_id), seed, n};
        out.params = make_crom_params(n, k, rate, scheme, sigma2, Schedule(schedule_id), gamma);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("stream header carries invalid parameters: ") + e.what());
    }
    if (out.params.iterations != header_iters) {
        throw FormatError("stream header iteration count " + std::to_string(header_iters) +
                          " does not match floor(nR / ln C(n,k)) = " +
                          std::to_string(out.params.iterations));
    }
    out.expected_messages = header_iters;

    const unsigned width = subset_rank_width(n, k);
    detail::BitReader body{bytes.subspan(kHeaderBytes)};
    std::size_t present = body.total_bits() / width;
    if (present > header_iters) present = header_iters;
    std::size_t wanted = max_messages ? std::min(*max_messages, present) : present;
    // >= 8 leftover bits past the last complete message cannot be final-byte
    // padding, so they are a cut-off partial message
    if (wanted == present && present < header_iters &&
        body.total_bits() - present * std::size_t(width) >= 8) {
        out.truncated_mid_message = true;
    }
    out.messages.reserve(wanted);
    for (std::size_t i = 0; i < wanted; ++i) {
        uint128 rank = body.read_at(i * std::size_t(width), width);
        out.messages.push_back(subset_unrank(rank, n, k));
    }
    return out;
}

}  // namespace crom
