#pragma once

#include <utility>
#include <vector>

#include "mmimo/rmt.hpp"
#include "mmimo/scenario.hpp"

namespace mmimo::test {

struct TinyScenario {
    UserDrop drop;
    PilotAllocation alloc;
    PowerProfile powers;
};

// Hand-built scenario with explicit gains (layout [(j*L+l)*K+k]) and powers.
inline TinyScenario make_tiny(int L, int K, int B, std::vector<double> gains,
                              std::vector<double> p, double sigma2,
                              std::vector<int> pilots = {}) {
    TinyScenario t;
    t.drop.cells = L;
    t.drop.users_per_cell = K;
    t.drop.positions.resize(L * K);
    t.drop.gains = std::move(gains);
    t.alloc.B = B;
    t.alloc.beta = 1;
    t.alloc.cells = L;
    t.alloc.users_per_cell = K;
    if (pilots.empty()) {
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) t.alloc.index.push_back(k);
    } else {
        t.alloc.index = std::move(pilots);
    }
    t.powers.p = std::move(p);
    t.powers.tau = t.powers.p;
    t.powers.rho_dl.assign(t.powers.p.size(), 1.0);
    t.powers.sigma2 = sigma2;
    return t;
}

// Full paper-style drop on the 19-cell network.
struct PaperScenario {
    NetworkGeometry net;
    UserDrop drop;
    PilotAllocation alloc;
    ScenarioState state;
};

inline PaperScenario make_paper_scenario(int K, int beta, std::uint64_t seed,
                                         double sigma2 = 1.0) {
    PaperScenario s;
    s.net = build_hex_network(500.0);
    s.drop = make_drop(s.net, K, 3.7, 5.0, seed);
    Xoshiro256pp rng(derive_seed(seed, 1));
    s.alloc = allocate_symmetric(reuse_coloring(s.net, beta), K, beta, rng);
    s.state = build_scenario(s.drop, s.alloc,
                             make_power_profile(s.net, s.drop, 0.0, -3.0, 3.7, sigma2));
    return s;
}

}  // namespace mmimo::test
