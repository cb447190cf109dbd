#include <gtest/gtest.h>

#include "mmimo/mc_eval.hpp"
#include "test_support.hpp"

using namespace mmimo;
using mmimo::test::make_paper_scenario;
using mmimo::test::make_tiny;

namespace {
ChannelTensor unit_channels(int L, int K, int M, std::complex<double> value) {
    ChannelTensor ch;
    ch.M = M;
    ch.cells = L;
    ch.users_per_cell = K;
    ch.h.assign(L, Eigen::MatrixXcd::Constant(M, L * K, value));
    return ch;
}
}  // namespace

TEST(McEval, AlignedHandCase) {
    // single user, h = w = unit vector aligned: signal 1, self 1, eta = 1/(1-1+1)
    const int L = 1, K = 1, M = 1;
    SinrAccumulator acc(L, K, {1.0}, {1.0});
    const auto ch = unit_channels(L, K, M, {1.0, 0.0});
    std::vector<Eigen::MatrixXcd> G{Eigen::MatrixXcd::Constant(M, K, {1.0, 0.0})};
    Eigen::MatrixXcd scratch(L * K, K);
    acc.accumulate(ch, G, scratch);
    PowerProfile pw;
    pw.rho_dl = {1.0};
    pw.sigma2 = 1.0;
    const auto rep = finalize(acc, pw, L, K, 1, 500);
    EXPECT_DOUBLE_EQ(rep.sinr[0], 1.0);
    EXPECT_NEAR(rep.se_per_user[0], (1.0 - 1.0 / 500) * 1.0, 1e-12);
}

TEST(McEval, OrthogonalContributesNothing) {
    const int L = 1, K = 1, M = 2;
    SinrAccumulator acc(L, K, {1.0}, {1.0});
    ChannelTensor ch = unit_channels(L, K, M, {0.0, 0.0});
    ch.h[0](0, 0) = 1.0;  // h = e1
    std::vector<Eigen::MatrixXcd> G{Eigen::MatrixXcd::Zero(M, K)};
    G[0](1, 0) = 1.0;  // w = e2, orthogonal to h
    Eigen::MatrixXcd scratch(L * K, K);
    acc.accumulate(ch, G, scratch);
    EXPECT_DOUBLE_EQ(acc.sum_weighted_sq()[0], 0.0);
    EXPECT_DOUBLE_EQ(std::abs(acc.sum_signal()[0]), 0.0);
}

TEST(McEval, AccumulatorAdditivity) {
    auto s = make_paper_scenario(2, 3, 91);
    const int M = 4;
    Xoshiro256pp rng(92);
    std::vector<double> lambda(19 * 2, 1.0), weights(19 * 2, 0.5);
    SinrAccumulator one(19, 2, weights, lambda);
    SinrAccumulator a(19, 2, weights, lambda), b(19, 2, weights, lambda);
    Eigen::MatrixXcd scratch(19 * 2, 2);
    for (int r = 0; r < 4; ++r) {
        const auto ch = draw_channels(s.drop, M, rng);
        const auto est = observe_and_estimate(ch, s.drop, s.alloc, s.state.powers,
                                              s.state.alpha, rng);
        std::vector<Eigen::MatrixXcd> G;
        for (int l = 0; l < 19; ++l)
            G.push_back(mf_directions(est, s.drop, s.alloc, s.state.powers, l));
        one.accumulate(ch, G, scratch);
        (r < 2 ? a : b).accumulate(ch, G, scratch);
    }
    a.merge(b);
    EXPECT_EQ(a.count(), one.count());
    for (std::size_t i = 0; i < one.sum_weighted_sq().size(); ++i) {
        EXPECT_NEAR(a.sum_weighted_sq()[i], one.sum_weighted_sq()[i],
                    1e-12 * one.sum_weighted_sq()[i]);
        EXPECT_NEAR(a.sum_self_sq()[i], one.sum_self_sq()[i],
                    1e-12 * one.sum_self_sq()[i]);
        EXPECT_NEAR(std::abs(a.sum_signal()[i] - one.sum_signal()[i]), 0.0,
                    1e-12 * std::abs(one.sum_signal()[i]));
    }
}

TEST(McEval, NoiseDominatedLimit) {
    auto s = make_paper_scenario(1, 1, 93, /*sigma2=*/1.0);
    McOptions opt;
    opt.realizations = 40;
    opt.seed = 5;
    opt.threads = 1;
    const auto base =
        run_monte_carlo(s.drop, s.alloc, s.state, 4, {Scheme::MF}, 500, opt);
    // crank the noise three orders of magnitude: eta collapses
    auto s2 = s;
    s2.state.powers.sigma2 *= 1e3;
    const auto noisy =
        run_monte_carlo(s2.drop, s2.alloc, s2.state, 4, {Scheme::MF}, 500, opt);
    for (std::size_t i = 0; i < base[0].report.sinr.size(); ++i)
        EXPECT_LT(noisy[0].report.sinr[i], 0.05 * base[0].report.sinr[i]);
}

TEST(McEval, FullOverheadMeansZeroSe) {
    const int L = 1, K = 1;
    SinrAccumulator acc(L, K, {1.0}, {1.0});
    const auto ch = unit_channels(L, K, 1, {1.0, 0.0});
    std::vector<Eigen::MatrixXcd> G{Eigen::MatrixXcd::Constant(1, 1, {1.0, 0.0})};
    Eigen::MatrixXcd scratch(1, 1);
    acc.accumulate(ch, G, scratch);
    PowerProfile pw;
    pw.rho_dl = {1.0};
    pw.sigma2 = 1.0;
    const auto rep = finalize(acc, pw, L, K, /*B=*/500, /*S=*/500);
    EXPECT_DOUBLE_EQ(rep.prelog, 0.0);
    EXPECT_DOUBLE_EQ(rep.se_per_user[0], 0.0);
}

// Worst-case-noise structure: the reported eta never exceeds the genie SINR
// computed from the same samples.
TEST(McEval, GenieBoundHolds) {
    auto s = make_paper_scenario(2, 3, 94);
    McOptions opt;
    opt.realizations = 50;
    opt.seed = 6;
    opt.threads = 2;
    const auto res = run_monte_carlo(s.drop, s.alloc, s.state, 8,
                                     {Scheme::MMMSE, Scheme::MF}, 500, opt);
    for (const auto& r : res)
        for (std::size_t i = 0; i < r.report.sinr.size(); ++i)
            EXPECT_LE(r.report.sinr[i], r.report.genie_sinr[i] * (1.0 + 1e-12));
}

// Bitwise reproducibility: same seed, different thread counts, identical
// reports (block-structured reduction).
TEST(McEval, BitwiseDeterminismAcrossThreadCounts) {
    auto s = make_paper_scenario(2, 3, 95);
    McOptions a;
    a.realizations = 37;  // not a multiple of the block size on purpose
    a.seed = 7;
    a.threads = 1;
    McOptions b = a;
    b.threads = 4;
    const auto ra = run_monte_carlo(s.drop, s.alloc, s.state, 6, {Scheme::MMMSE}, 500, a);
    const auto rb = run_monte_carlo(s.drop, s.alloc, s.state, 6, {Scheme::MMMSE}, 500, b);
    for (std::size_t i = 0; i < ra[0].report.sinr.size(); ++i) {
        EXPECT_EQ(ra[0].report.sinr[i], rb[0].report.sinr[i]);
        EXPECT_EQ(ra[0].lambda[i], rb[0].lambda[i]);
    }
}

// Normalization contract: with lambda from the same realization set, the
// empirical mean of ||w||^2 equals one exactly (up to rounding).
TEST(McEval, NormalizationUnitPower) {
    auto s = make_paper_scenario(2, 3, 96);
    const int M = 6, R = 20;
    PowerNormalizer norm(1, 2);  // track BS 0 only
    std::vector<Eigen::MatrixXcd> stored;
    for (int r = 0; r < R; ++r) {
        Xoshiro256pp rng(derive_seed(123, r));
        const auto ch = draw_channels(s.drop, M, rng);
        const auto est = observe_and_estimate(ch, s.drop, s.alloc, s.state.powers,
                                              s.state.alpha, rng);
        const auto G = m_mmse_directions(est, s.state.weights, s.drop, s.alloc,
                                         s.state.powers, 0);
        stored.push_back(G);
        norm.add(0, G);
        norm.add_count();
    }
    const auto set = norm.finalize(Scheme::MMMSE);
    for (int k = 0; k < 2; ++k) {
        double mean_w = 0.0;
        for (const auto& G : stored) mean_w += G.col(k).squaredNorm() / set.lambda[k];
        EXPECT_NEAR(mean_w / R, 1.0, 1e-12);
    }
}

// Deterministic symmetry of the DE in a fully symmetric scenario; the MC sum
// SE agrees across cells within sampling tolerance.
TEST(McEval, SymmetricScenarioCellSymmetry) {
    const auto net = build_hex_network(500.0);
    UserDrop drop;
    drop.cells = 19;
    drop.users_per_cell = 1;
    for (int l = 0; l < 19; ++l)
        drop.positions.push_back(net.bs_positions[l] + Vec2(200.0, 40.0));
    drop.gains.resize(19 * 19);
    for (int j = 0; j < 19; ++j)
        for (int l = 0; l < 19; ++l)
            drop.gains[j * 19 + l] = channel_gain(net, drop.position(l, 0), j, 0.0, 3.7);
    Xoshiro256pp rng(97);
    const auto alloc = allocate_symmetric(reuse_coloring(net, 1), 1, 1, rng);
    const auto state = build_scenario(
        drop, alloc, make_power_profile(net, drop, 0.0, -3.0, 3.7, 1.0));

    const auto de = large_scale_sinr(drop, alloc, state, 32);
    for (int l = 1; l < 19; ++l) EXPECT_NEAR(de.eta_bar[l], de.eta_bar[0], 1e-9 * de.eta_bar[0]);

    McOptions opt;
    opt.realizations = 400;
    opt.seed = 11;
    const auto mc = run_monte_carlo(drop, alloc, state, 32, {Scheme::MMMSE}, 500, opt);
    const double center = mc[0].report.sum_se_cell[0];
    for (int l = 1; l < 19; ++l)
        EXPECT_NEAR(mc[0].report.sum_se_cell[l], center, 0.15 * center);
}

TEST(McEval, PercentileInterpolation) {
    std::vector<double> v{4.0, 1.0, 2.0, 3.0};
    EXPECT_DOUBLE_EQ(se_percentile(v, 50.0), 2.5);
    EXPECT_DOUBLE_EQ(se_percentile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(se_percentile(v, 100.0), 4.0);
}
