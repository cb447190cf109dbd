#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mmimo/geometry.hpp"
#include "mmimo/pilots.hpp"
#include "mmimo/power.hpp"
#include "mmimo/random.hpp"

namespace mmimo {

// Small-scale fading of one coherence block. h[j] is M x (L*K); column l*K+k
// holds h_jlk ~ CN(0, d_j(z_lk) I_M).
struct ChannelTensor {
    int M = 0;
    int cells = 0;
    int users_per_cell = 0;
    std::vector<Eigen::MatrixXcd> h;

    Eigen::MatrixXcd::ConstColXpr column(int j, int l, int k) const {
        return h[j].col(l * users_per_cell + k);
    }
};

inline void draw_channels_into(const UserDrop& drop, int M, Xoshiro256pp& rng,
                               ChannelTensor& out) {
    if (M < 1) throw std::invalid_argument("M must be >= 1");
    const int L = drop.cells;
    const int K = drop.users_per_cell;
    const int N = L * K;
    out.M = M;
    out.cells = L;
    out.users_per_cell = K;
    out.h.resize(L);
    for (int j = 0; j < L; ++j) {
        out.h[j].resize(M, N);
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k)
                fill_complex_normal(rng, drop.gain(j, l, k), out.h[j].col(l * K + k));
    }
}

inline ChannelTensor draw_channels(const UserDrop& drop, int M, Xoshiro256pp& rng) {
    ChannelTensor t;
    draw_channels_into(drop, M, rng, t);
    return t;
}

// MMSE estimation coefficients alpha_{j,b} of Eq. type
//   alpha = 1 / (B * sum_{(l,m): i_lm = b} p_lm d_j(z_lm) + sigma2),
// one per (BS, pilot). Flattened [j*B + b].
inline std::vector<double> estimation_coefficients(const UserDrop& drop,
                                                   const PilotAllocation& alloc,
                                                   const PowerProfile& powers) {
    const int L = drop.cells;
    const int K = drop.users_per_cell;
    const int B = alloc.B;
    std::vector<double> sums(static_cast<std::size_t>(L) * B, 0.0);
    for (int j = 0; j < L; ++j)
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k)
                sums[j * B + alloc.pilot(l, k)] += powers.p[l * K + k] * drop.gain(j, l, k);
    std::vector<double> alpha(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i)
        alpha[i] = 1.0 / (B * sums[i] + powers.sigma2);
    return alpha;
}

// Estimated channel directions. h_dir[j] is M x B with columns hhat_V,jb; the
// per-user estimate is the collinear rescaling
//   hhat_jlk = sqrt(p_lk) d_j(z_lk) * h_dir[j].col(i_lk).
struct EstimateSet {
    int M = 0;
    int B = 0;
    std::vector<Eigen::MatrixXcd> h_dir;
};

inline double estimate_scale(const UserDrop& drop, const PowerProfile& powers,
                             int j, int l, int k) {
    return std::sqrt(powers.p[l * drop.users_per_cell + k]) * drop.gain(j, l, k);
}

inline Eigen::VectorXcd user_estimate(const EstimateSet& est, const UserDrop& drop,
                                      const PilotAllocation& alloc,
                                      const PowerProfile& powers, int j, int l, int k) {
    return estimate_scale(drop, powers, j, l, k) * est.h_dir[j].col(alloc.pilot(l, k));
}

// Works in the pilot-projected domain: y_{j,b} = B sum_{i_lm=b} sqrt(p_lm) h_jlm + n
// with n ~ CN(0, B sigma2 I_M), then hhat_V,jb = alpha_{j,b} y_{j,b}. The M x B
// received matrix Y_j is never materialized.
inline void observe_and_estimate_into(const ChannelTensor& channels, const UserDrop& drop,
                                      const PilotAllocation& alloc,
                                      const PowerProfile& powers,
                                      const std::vector<double>& alpha,
                                      Xoshiro256pp& rng, EstimateSet& out) {
    const int L = drop.cells;
    const int K = drop.users_per_cell;
    const int B = alloc.B;
    const int M = channels.M;
    out.M = M;
    out.B = B;
    out.h_dir.resize(L);
    Eigen::VectorXcd noise(M);
    for (int j = 0; j < L; ++j) {
        auto& dir = out.h_dir[j];
        dir.setZero(M, B);
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k)
                dir.col(alloc.pilot(l, k)) +=
                    std::sqrt(powers.p[l * K + k]) * channels.h[j].col(l * K + k);
        for (int b = 0; b < B; ++b) {
            fill_complex_normal(rng, B * powers.sigma2, noise);
            dir.col(b) = alpha[j * B + b] * (double(B) * dir.col(b) + noise);
        }
    }
}

inline EstimateSet observe_and_estimate(const ChannelTensor& channels, const UserDrop& drop,
                                        const PilotAllocation& alloc,
                                        const PowerProfile& powers,
                                        const std::vector<double>& alpha,
                                        Xoshiro256pp& rng) {
    EstimateSet est;
    observe_and_estimate_into(channels, drop, alloc, powers, alpha, rng, est);
    return est;
}

// Scalar coefficient of the error covariance C_jlk = err * I_M:
//   err = d_j(z_lk) (1 - p_lk d_j(z_lk) alpha_{j,i_lk} B).
inline double error_variance(const UserDrop& drop, const PilotAllocation& alloc,
                             const PowerProfile& powers, const std::vector<double>& alpha,
                             int j, int l, int k) {
    const int K = drop.users_per_cell;
    const double d = drop.gain(j, l, k);
    const double quality =
        powers.p[l * K + k] * d * alpha[j * alloc.B + alloc.pilot(l, k)] * alloc.B;
    const double err = d * (1.0 - quality);
    if (err < -1e-12 * d)
        throw std::logic_error("error_variance: negative result, inconsistent inputs");
    return std::max(err, 0.0);
}

// Scalar coefficient of the estimate covariance Phi_jlk = est * I_M.
inline double estimate_variance(const UserDrop& drop, const PilotAllocation& alloc,
                                const PowerProfile& powers, const std::vector<double>& alpha,
                                int j, int l, int k) {
    const int K = drop.users_per_cell;
    const double d = drop.gain(j, l, k);
    return powers.p[l * K + k] * d * d * alpha[j * alloc.B + alloc.pilot(l, k)] * alloc.B;
}

}  // namespace mmimo
