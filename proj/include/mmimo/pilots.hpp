#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mmimo/geometry.hpp"
#include "mmimo/random.hpp"

namespace mmimo {

// Pilot book bookkeeping. B orthogonal pilots of length B; index(l, k) is the
// 0-based pilot of user k in cell l.
struct PilotAllocation {
    int B = 0;
    int beta = 1;
    double beta_f = 0.0;
    int cells = 0;
    int users_per_cell = 0;
    std::vector<int> index;  // [l*K + k]

    int pilot(int l, int k) const { return index[l * users_per_cell + k]; }
};

inline bool wrap_adjacent(const NetworkGeometry& net, int i, int j) {
    if (i == j) return false;
    return wrap_distance(net, net.bs_positions[i], j) <= 1.01 * kSqrt3 * net.radius_m;
}

// Fixed pilot-group tables for the 19-cell torus, keyed to the canonical cell
// order of build_hex_network.
//
// The torus adjacency graph is the circulant C19(1,7,8); exhaustive search
// shows it has no proper 3- or 4-coloring, so for beta in {3,4} some
// same-group cells are unavoidably wrap-adjacent. The tables below are
// balanced colorings minimizing the number of such seam conflicts
// (beta=3: 8 edges, beta=4: 4 edges, beta=7: none).
inline std::vector<int> reuse_coloring(const NetworkGeometry& net, int beta) {
    if (net.cell_count != 19)
        throw std::invalid_argument("reuse_coloring: expects the 19-cell layout");
    static constexpr std::array<int, 19> kBeta3 = {0, 1, 0, 2, 0, 2, 1, 2, 1, 1,
                                                   0, 1, 0, 2, 1, 2, 2, 0, 0};
    static constexpr std::array<int, 19> kBeta4 = {3, 2, 3, 2, 0, 1, 0, 3, 3, 2,
                                                   2, 0, 0, 1, 0, 3, 1, 2, 1};
    static constexpr std::array<int, 19> kBeta7 = {0, 0, 1, 0, 1, 2, 3, 1, 2, 3,
                                                   2, 3, 4, 5, 6, 4, 6, 4, 5};
    switch (beta) {
        case 1: return std::vector<int>(19, 0);
        case 3: return {kBeta3.begin(), kBeta3.end()};
        case 4: return {kBeta4.begin(), kBeta4.end()};
        case 7: return {kBeta7.begin(), kBeta7.end()};
        default: throw std::invalid_argument("unsupported pilot reuse factor");
    }
}

namespace detail {
// Deterministic Fisher-Yates on indices 0..n-1.
inline std::vector<int> permutation(int n, Xoshiro256pp& rng) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(p[i], p[j]);
    }
    return p;
}
}  // namespace detail

// Symmetric reuse: a cell in group g draws its K pilots from {gK, ..., gK+K-1},
// randomly permuted among its users. B = beta*K.
inline PilotAllocation allocate_symmetric(const std::vector<int>& coloring, int K,
                                          int beta, Xoshiro256pp& rng) {
    const int L = static_cast<int>(coloring.size());
    PilotAllocation alloc;
    alloc.B = beta * K;
    alloc.beta = beta;
    alloc.beta_f = 0.0;
    alloc.cells = L;
    alloc.users_per_cell = K;
    alloc.index.resize(static_cast<std::size_t>(L) * K);
    for (int l = 0; l < L; ++l) {
        const auto perm = detail::permutation(K, rng);
        for (int k = 0; k < K; ++k) alloc.index[l * K + k] = coloring[l] * K + perm[k];
    }
    return alloc;
}

// Fractional reuse: the beta_f*K users closest to their serving BS share the
// same "center" pilots in every cell; the remaining users follow the symmetric
// group scheme on the rest of the book. B = K*(beta_f + (1-beta_f)*beta).
inline PilotAllocation allocate_refined(const NetworkGeometry& net,
                                        const std::vector<int>& coloring,
                                        const UserDrop& drop, int K, int beta,
                                        double beta_f, Xoshiro256pp& rng) {
    const int L = static_cast<int>(coloring.size());
    const double c_exact = beta_f * K;
    const int C = static_cast<int>(std::lround(c_exact));
    if (std::abs(c_exact - C) > 1e-9 || C < 0 || C > K)
        throw std::invalid_argument("beta_f*K must be an integer in [0, K]");

    PilotAllocation alloc;
    alloc.B = C + beta * (K - C);
    alloc.beta = beta;
    alloc.beta_f = beta_f;
    alloc.cells = L;
    alloc.users_per_cell = K;
    alloc.index.resize(static_cast<std::size_t>(L) * K);

    for (int l = 0; l < L; ++l) {
        std::vector<int> order(K);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return wrap_distance(net, drop.position(l, a), l) <
                   wrap_distance(net, drop.position(l, b), l);
        });
        const auto cperm = detail::permutation(C, rng);
        const auto eperm = detail::permutation(K - C, rng);
        for (int i = 0; i < C; ++i) alloc.index[l * K + order[i]] = cperm[i];
        for (int i = 0; i < K - C; ++i)
            alloc.index[l * K + order[C + i]] = C + coloring[l] * (K - C) + eperm[i];
    }
    return alloc;
}

}  // namespace mmimo
