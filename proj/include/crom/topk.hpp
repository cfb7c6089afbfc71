#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "crom/common.hpp"

namespace crom {

/// The set of k indices selected by one iteration, sorted ascending.
struct IndexMessage {
    std::size_t n = 0;
    std::vector<std::uint32_t> indices;

    std::size_t k() const { return indices.size(); }

    void validate() const {
        if (indices.empty() || indices.size() >= n) {
            throw ConfigError("IndexMessage: need 1 <= k < n");
        }
        for (std::size_t j = 0; j < indices.size(); ++j) {
            if (indices[j] >= n) throw ConfigError("IndexMessage: index out of range");
            if (j > 0 && indices[j] <= indices[j - 1]) {
                throw ConfigError("IndexMessage: indices must be strictly increasing");
            }
        }
    }
};

/// Indices of the k largest entries of x. Ties pick the smaller index.
/// Average linear time (partial selection, no full sort).
inline IndexMessage g_k(std::span<const double> x, std::size_t k) {
    const std::size_t n = x.size();
    if (k < 1 || k >= n) {
        throw ConfigError("g_k: need 1 <= k < n, got k=" + std::to_string(k) +
                          ", n=" + std::to_string(n));
    }
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    // lexicographic on (value desc, index asc) makes the tie rule independent
    // of the selection algorithm's internals
    auto before = [&x](std::uint32_t a, std::uint32_t b) {
        return x[a] > x[b] || (x[a] == x[b] && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), before);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return IndexMessage{n, std::move(idx)};
}

/// Unit direction vector for an index message: positive weight on selected
/// coordinates, negative elsewhere; unit norm and zero sum by construction.
inline SignalBlock build_direction(const IndexMessage& m) {
    m.validate();
    const double n = double(m.n);
    const double k = double(m.k());
    const double up = std::sqrt((n - k) / (n * k));
    const double down = -std::sqrt(k / (n * (n - k)));
    SignalBlock u(m.n, down);
    for (std::uint32_t j : m.indices) u[j] = up;
    return u;
}

}  // namespace crom
