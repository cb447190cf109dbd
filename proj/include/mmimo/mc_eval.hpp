#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mmimo/parallel.hpp"
#include "mmimo/precoding.hpp"
#include "mmimo/random.hpp"
#include "mmimo/scenario.hpp"

namespace mmimo {

// Streaming sums for the Eq.-(15)-type SINR. Interference is accumulated as
// the rho/lambda-weighted total per victim user (the weights are fixed before
// pass two of the protocol), plus the self term for diagnostics.
class SinrAccumulator {
public:
    SinrAccumulator() = default;
    // weights[l*K+m] = rho_dl_lm / lambda_lm; lambda from the first pass.
    SinrAccumulator(int cells, int users_per_cell, std::vector<double> weights,
                    std::vector<double> lambda)
        : cells_(cells), users_(users_per_cell), weights_(std::move(weights)),
          lambda_(std::move(lambda)),
          sum_signal_(static_cast<std::size_t>(cells) * users_per_cell, {0.0, 0.0}),
          sum_self_sq_(sum_signal_.size(), 0.0),
          sum_weighted_sq_(sum_signal_.size(), 0.0) {}

    long count() const { return n_; }
    const std::vector<std::complex<double>>& sum_signal() const { return sum_signal_; }
    const std::vector<double>& sum_self_sq() const { return sum_self_sq_; }
    const std::vector<double>& sum_weighted_sq() const { return sum_weighted_sq_; }
    const std::vector<double>& lambda() const { return lambda_; }
    const std::vector<double>& weights() const { return weights_; }

    // Adds one realization given the unnormalized directions G[offset+l] (M x K).
    void accumulate(const ChannelTensor& channels, const std::vector<Eigen::MatrixXcd>& G,
                    Eigen::MatrixXcd& scratch, int offset = 0) {
        const int K = users_;
        const int N = cells_ * K;
        for (int l = 0; l < cells_; ++l) {
            scratch.noalias() = channels.h[l].adjoint() * G[offset + l];  // N x K
            for (int row = 0; row < N; ++row) {
                double acc = 0.0;
                for (int m = 0; m < K; ++m)
                    acc += weights_[l * K + m] * std::norm(scratch(row, m));
                sum_weighted_sq_[row] += acc;
            }
            for (int k = 0; k < K; ++k) {
                const std::complex<double> x =
                    scratch(l * K + k, k) / std::sqrt(lambda_[l * K + k]);
                sum_signal_[l * K + k] += x;
                sum_self_sq_[l * K + k] += std::norm(x);
            }
        }
        ++n_;
    }

    // Fixed-order merge; both operands must share dimensions and weights.
    void merge(const SinrAccumulator& other) {
        for (std::size_t i = 0; i < sum_signal_.size(); ++i) {
            sum_signal_[i] += other.sum_signal_[i];
            sum_self_sq_[i] += other.sum_self_sq_[i];
            sum_weighted_sq_[i] += other.sum_weighted_sq_[i];
        }
        n_ += other.n_;
    }

private:
    int cells_ = 0;
    int users_ = 0;
    std::vector<double> weights_;
    std::vector<double> lambda_;
    std::vector<std::complex<double>> sum_signal_;
    std::vector<double> sum_self_sq_;
    std::vector<double> sum_weighted_sq_;
    long n_ = 0;
};

struct SEReport {
    int cells = 0;
    int users_per_cell = 0;
    double prelog = 0.0;
    std::vector<double> sinr;         // [j*K + k]
    std::vector<double> genie_sinr;   // same SINR with perfect signal knowledge
    std::vector<double> se_per_user;  // prelog * log2(1 + sinr)
    std::vector<double> sum_se_cell;  // [j]
    double sum_se_avg = 0.0;          // all-cell average (cells are statistically identical)
    double sum_se_center = 0.0;
};

inline double se_percentile(std::vector<double> values, double pct) {
    std::sort(values.begin(), values.end());
    const double pos = pct / 100.0 * (static_cast<double>(values.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// Closes the accumulator into SINRs and spectral efficiencies.
inline SEReport finalize(const SinrAccumulator& acc, const PowerProfile& powers,
                         int cells, int users_per_cell, int B, int S) {
    if (acc.count() < 1) throw std::invalid_argument("finalize: no realizations");
    SEReport rep;
    rep.cells = cells;
    rep.users_per_cell = users_per_cell;
    rep.prelog = 1.0 - static_cast<double>(B) / S;
    if (rep.prelog < 0.0) throw std::invalid_argument("finalize: B > S");
    const int K = users_per_cell;
    const double n = static_cast<double>(acc.count());
    rep.sinr.resize(static_cast<std::size_t>(cells) * K);
    rep.genie_sinr.resize(rep.sinr.size());
    rep.se_per_user.resize(rep.sinr.size());
    rep.sum_se_cell.assign(cells, 0.0);
    for (int j = 0; j < cells; ++j) {
        for (int k = 0; k < K; ++k) {
            const std::size_t i = static_cast<std::size_t>(j) * K + k;
            const double rho = powers.rho_dl[i];
            const double sig = rho * std::norm(acc.sum_signal()[i] / n);
            const double self_sq = rho * acc.sum_self_sq()[i] / n;
            const double total = acc.sum_weighted_sq()[i] / n;
            const double den = total - sig + powers.sigma2;
            if (!(den > 0.0))
                throw std::runtime_error(
                    "finalize: nonpositive SINR denominator; increase n_realizations");
            rep.sinr[i] = sig / den;
            rep.genie_sinr[i] = self_sq / (total - self_sq + powers.sigma2);
            rep.se_per_user[i] = rep.prelog * std::log2(1.0 + rep.sinr[i]);
            rep.sum_se_cell[j] += rep.se_per_user[i];
        }
        rep.sum_se_avg += rep.sum_se_cell[j];
    }
    rep.sum_se_avg /= cells;
    rep.sum_se_center = rep.sum_se_cell[0];
    return rep;
}

struct McOptions {
    int realizations = 1000;
    std::uint64_t seed = 1;
    int threads = 0;     // 0: hardware concurrency
    int block_size = 16; // realizations per reduction block; fixed so the
                         // merge order never depends on the thread count
};

struct McResult {
    Scheme scheme;
    std::vector<double> lambda;
    SEReport report;
};

// Two-pass Monte Carlo evaluation of Eq.-(14)/(15)-type SE for a list of
// precoding schemes sharing the channel realizations. Pass one estimates the
// normalization lambda_jk = E||g_jk||^2; pass two regenerates the identical
// realizations from the per-realization seeds and accumulates the SINR sums.
// Bitwise deterministic for a fixed (seed, realizations, block_size).
inline std::vector<McResult> run_monte_carlo(const UserDrop& drop,
                                             const PilotAllocation& alloc,
                                             const ScenarioState& s, int M,
                                             const std::vector<Scheme>& schemes, int S,
                                             const McOptions& opt) {
    const int L = drop.cells;
    const int K = drop.users_per_cell;
    const int R = opt.realizations;
    const int n_schemes = static_cast<int>(schemes.size());
    if (R < 1) throw std::invalid_argument("run_monte_carlo: needs >= 1 realization");
    const int n_blocks = (R + opt.block_size - 1) / opt.block_size;

    struct Workspace {
        ChannelTensor channels;
        EstimateSet est;
        std::vector<Eigen::MatrixXcd> G;
        Eigen::MatrixXcd scratch;
    };

    auto simulate = [&](std::uint64_t rseed, Workspace& ws) {
        Xoshiro256pp rng(rseed);
        draw_channels_into(drop, M, rng, ws.channels);
        observe_and_estimate_into(ws.channels, drop, alloc, s.powers, s.alpha, rng, ws.est);
        ws.G.resize(n_schemes * L);
        for (int si = 0; si < n_schemes; ++si)
            for (int l = 0; l < L; ++l)
                ws.G[si * L + l] =
                    build_directions(schemes[si], ws.est, s.weights, drop, alloc, s.powers, l);
    };

    // Pass 1: normalization constants.
    std::vector<std::vector<PowerNormalizer>> norm_blocks(
        n_blocks, std::vector<PowerNormalizer>(n_schemes, PowerNormalizer(L, K)));
    parallel_tasks(n_blocks, opt.threads, [&](int blk) {
        Workspace ws;
        const int lo = blk * opt.block_size;
        const int hi = std::min(R, lo + opt.block_size);
        for (int r = lo; r < hi; ++r) {
            simulate(derive_seed(opt.seed, static_cast<std::uint64_t>(r)), ws);
            for (int si = 0; si < n_schemes; ++si) {
                for (int l = 0; l < L; ++l) norm_blocks[blk][si].add(l, ws.G[si * L + l]);
                norm_blocks[blk][si].add_count();
            }
        }
    });
    std::vector<PowerNormalizer> norms(n_schemes, PowerNormalizer(L, K));
    for (int blk = 0; blk < n_blocks; ++blk)
        for (int si = 0; si < n_schemes; ++si) norms[si].merge(norm_blocks[blk][si]);

    std::vector<McResult> out(n_schemes);
    std::vector<std::vector<double>> weights(n_schemes);
    for (int si = 0; si < n_schemes; ++si) {
        out[si].scheme = schemes[si];
        out[si].lambda = norms[si].finalize(schemes[si]).lambda;
        weights[si].resize(out[si].lambda.size());
        for (std::size_t i = 0; i < weights[si].size(); ++i)
            weights[si][i] = s.powers.rho_dl[i] / out[si].lambda[i];
    }

    // Pass 2: SINR statistics with fixed lambda.
    std::vector<std::vector<SinrAccumulator>> acc_blocks(n_blocks);
    for (auto& blk : acc_blocks) {
        blk.reserve(n_schemes);
        for (int si = 0; si < n_schemes; ++si)
            blk.emplace_back(L, K, weights[si], out[si].lambda);
    }
    parallel_tasks(n_blocks, opt.threads, [&](int blk) {
        Workspace ws;
        ws.scratch.resize(L * K, K);
        for (int r = blk * opt.block_size; r < std::min(R, (blk + 1) * opt.block_size); ++r) {
            simulate(derive_seed(opt.seed, static_cast<std::uint64_t>(r)), ws);
            for (int si = 0; si < n_schemes; ++si)
                acc_blocks[blk][si].accumulate(ws.channels, ws.G, ws.scratch, si * L);
        }
    });
    for (int si = 0; si < n_schemes; ++si) {
        SinrAccumulator total(L, K, weights[si], out[si].lambda);
        for (int blk = 0; blk < n_blocks; ++blk) total.merge(acc_blocks[blk][si]);
        out[si].report = finalize(total, s.powers, L, K, alloc.B, S);
    }
    return out;
}

}  // namespace mmimo
