#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmimo/experiment.hpp"

namespace mmimo {

// Built-in verification suite behind the `validate` CLI verb. Failures are
// report content, not exceptions.
struct OracleCheck {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct OracleReport {
    std::vector<OracleCheck> checks;
    bool all_pass = true;

    void add(const std::string& name, double measured, double threshold) {
        checks.push_back({name, measured, threshold, measured <= threshold});
        all_pass = all_pass && checks.back().pass;
    }
};

struct ValidateOptions {
    std::uint64_t seed = 17;
    int threads = 0;
    int mc_realizations = 500;
    int oracle_samples = 2000;
    // Test hook: multiplies the gamma weights fed to the deterministic
    // equivalent. 0 drops the Lambda weighting (a wrong-gamma-definition
    // control that must blow the MC-vs-DE gap check); uniform rescales are
    // nearly invisible because the MMSE solution is close to scale invariant.
    double gamma_distortion = 1.0;
};

namespace detail {

inline Eigen::MatrixXcd random_hermitian_psd(int M, Xoshiro256pp& rng) {
    Eigen::MatrixXcd A(M, M);
    for (int c = 0; c < M; ++c) fill_complex_normal(rng, 1.0, A.col(c));
    Eigen::MatrixXcd R = A * A.adjoint();
    R *= static_cast<double>(M) / R.trace().real();
    return R;
}

}  // namespace detail

// Theorem-1/2 statements used as Monte Carlo oracles on random Hermitian
// covariances: the resolvent traces must match the fixed-point values.
inline void check_rmt_oracles(OracleReport& rep, std::uint64_t seed, int samples,
                              int M = 64, int B = 16, double rho = 0.5) {
    Xoshiro256pp rng(derive_seed(seed, 0x501));
    std::vector<Eigen::MatrixXcd> R(B);
    std::vector<Eigen::LLT<Eigen::MatrixXcd>> chol;
    chol.reserve(B);
    for (int b = 0; b < B; ++b) {
        R[b] = detail::random_hermitian_psd(M, rng);
        chol.emplace_back(R[b] / static_cast<double>(M));
    }
    Eigen::VectorXd dvals(M);
    for (int i = 0; i < M; ++i) dvals[i] = rng.uniform(0.5, 1.5);
    const Eigen::MatrixXcd D = dvals.cast<std::complex<double>>().asDiagonal();
    const Eigen::MatrixXcd Theta = detail::random_hermitian_psd(M, rng);

    const Thm1Result t1 = thm1_fixed_point(R, rho);
    const Thm2Result t2 = thm2_prime(R, rho, Theta, t1);
    const double de1 = trace_product(D, t1.T) / M;
    const double de2 = trace_product(D, t2.T_prime) / M;

    double mc1 = 0.0, mc2 = 0.0;
    Eigen::MatrixXcd H(M, B);
    Eigen::VectorXcd z(M);
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(M, M);
    for (int s = 0; s < samples; ++s) {
        for (int b = 0; b < B; ++b) {
            fill_complex_normal(rng, 1.0, z);
            H.col(b) = chol[b].matrixL() * z;
        }
        Eigen::MatrixXcd Q = H * H.adjoint();
        Q.diagonal().array() += rho;
        const Eigen::MatrixXcd Qi = Q.llt().solve(eye);
        mc1 += (D * Qi).trace().real() / M;
        mc2 += (D * Qi * Theta * Qi).trace().real() / M;
    }
    mc1 /= samples;
    mc2 /= samples;
    rep.add("thm1-mc-oracle-gap", std::abs(mc1 - de1) / std::abs(de1), 0.02);
    rep.add("thm2-mc-oracle-gap", std::abs(mc2 - de2) / std::abs(de2), 0.03);
}

inline void check_golden_ratio(OracleReport& rep) {
    const Eigen::VectorXd c = Eigen::VectorXd::Ones(1);
    const ScalarThm1 s1 = scalar_thm1(c, 1.0, 1, {1e-14, 100000});
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    rep.add("golden-ratio-fixed-point", std::abs(s1.delta[0] - golden), 1e-10);
}

inline void check_dual_path(OracleReport& rep, std::uint64_t seed) {
    const NetworkGeometry net = build_hex_network(500.0);
    const std::uint64_t ds = derive_seed(seed, 0xd0a1);
    ExperimentConfig c;
    const auto scen = make_drop_scenario(net, c, 2, 3, 0.0, ds);
    const FixedPointConfig cfg{1e-12, 100000};
    const auto scalar = large_scale_sinr(scen.drop, scen.alloc, scen.state, 8,
                                         DePath::Scalar, cfg);
    const auto general = large_scale_sinr(scen.drop, scen.alloc, scen.state, 8,
                                          DePath::General, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < scalar.eta_bar.size(); ++i)
        worst = std::max(worst, std::abs(scalar.eta_bar[i] - general.eta_bar[i]) /
                                    scalar.eta_bar[i]);
    for (std::size_t i = 0; i < scalar.theta_tpp.size(); ++i) {
        worst = std::max(worst, std::abs(scalar.theta_t[i] - general.theta_t[i]) /
                                    std::max(scalar.theta_t[i], 1e-300));
        worst = std::max(worst, std::abs(scalar.theta_tpp[i] - general.theta_tpp[i]) /
                                    std::max(scalar.theta_tpp[i], 1e-300));
    }
    rep.add("scalar-vs-general-path", worst, 1e-9);
}

inline void check_estimation_moments(OracleReport& rep, std::uint64_t seed,
                                     int samples = 10000) {
    const NetworkGeometry net = build_hex_network(500.0);
    ExperimentConfig c;
    const auto scen = make_drop_scenario(net, c, 2, 3, 0.0, derive_seed(seed, 0xe571));
    const int M = 2;
    const int B = scen.alloc.B;
    Xoshiro256pp rng(derive_seed(seed, 0xe572));

    // Track ||hhat_V,0b||^2 / M against alpha*B and the orthogonality inner
    // product hhat^H (h - hhat) for one user, as z-scores.
    double cov_sum = 0.0, cov_sq = 0.0;
    std::complex<double> orth_sum{0.0, 0.0};
    double orth_sq = 0.0;
    const int j = 0, l = 5, k = 1;
    const int b_user = scen.alloc.pilot(l, k);
    for (int s = 0; s < samples; ++s) {
        const ChannelTensor ch = draw_channels(scen.drop, M, rng);
        const EstimateSet est =
            observe_and_estimate(ch, scen.drop, scen.alloc, scen.state.powers,
                                 scen.state.alpha, rng);
        const double v = est.h_dir[j].col(b_user).squaredNorm() / M;
        cov_sum += v;
        cov_sq += v * v;
        const Eigen::VectorXcd hhat =
            user_estimate(est, scen.drop, scen.alloc, scen.state.powers, j, l, k);
        const std::complex<double> ip =
            (hhat.adjoint() * (ch.column(j, l, k) - hhat))(0, 0);
        orth_sum += ip;
        orth_sq += std::norm(ip);
    }
    const double n = samples;
    const double cov_mean = cov_sum / n;
    const double cov_sd = std::sqrt(std::max(cov_sq / n - cov_mean * cov_mean, 1e-300));
    const double target = scen.state.alpha[j * B + b_user] * B;
    rep.add("estimate-covariance-z", std::abs(cov_mean - target) / (cov_sd / std::sqrt(n)),
            3.0);
    const double orth_mean = std::abs(orth_sum / n);
    const double orth_sd = std::sqrt(std::max(orth_sq / n, 1e-300));
    rep.add("mmse-orthogonality-z", orth_mean / (orth_sd / std::sqrt(n)), 3.0);
}

inline void check_zf_nulling(OracleReport& rep, std::uint64_t seed) {
    const NetworkGeometry net = build_hex_network(500.0);
    ExperimentConfig c;
    const auto scen = make_drop_scenario(net, c, 3, 3, 0.0, derive_seed(seed, 0x2f));
    const int M = 16;
    Xoshiro256pp rng(derive_seed(seed, 0x2f0));
    double worst = 0.0;
    for (int rep_i = 0; rep_i < 5; ++rep_i) {
        const ChannelTensor ch = draw_channels(scen.drop, M, rng);
        const EstimateSet est = observe_and_estimate(ch, scen.drop, scen.alloc,
                                                     scen.state.powers, scen.state.alpha,
                                                     rng);
        for (int j = 0; j < net.cell_count; ++j) {
            const Eigen::MatrixXcd G = m_zf_directions(est, scen.drop, scen.alloc, j);
            for (int k = 0; k < 3; ++k)
                for (int b = 0; b < est.B; ++b) {
                    if (b == scen.alloc.pilot(j, k)) continue;
                    const double ip = std::abs(est.h_dir[j].col(b).dot(G.col(k)));
                    worst = std::max(ip / (est.h_dir[j].col(b).norm() * G.col(k).norm()),
                                     worst);
                }
        }
    }
    rep.add("zf-nulling-relative", worst, 1e-9);
}

inline void check_mc_vs_de(OracleReport& rep, const ValidateOptions& opt) {
    const NetworkGeometry net = build_hex_network(500.0);
    ExperimentConfig c;
    const auto scen = make_drop_scenario(net, c, 10, 3, 0.0, derive_seed(opt.seed, 0xde));
    const int M = 64;
    McOptions mco;
    mco.realizations = opt.mc_realizations;
    mco.seed = derive_seed(opt.seed, 0xde1);
    mco.threads = opt.threads;
    const auto mc = run_monte_carlo(scen.drop, scen.alloc, scen.state, M,
                                    {Scheme::MMMSE}, c.S, mco);
    ScenarioState distorted = scen.state;
    for (auto& g : distorted.weights.gamma) g *= opt.gamma_distortion;
    const auto de = large_scale_sinr(scen.drop, scen.alloc, distorted, M);
    std::vector<double> gaps(de.eta_bar.size());
    for (std::size_t i = 0; i < gaps.size(); ++i)
        gaps[i] = std::abs(mc[0].report.sinr[i] - de.eta_bar[i]) / de.eta_bar[i];
    rep.add("mc-vs-de-median-sinr-gap", median(gaps), 0.05);
}

inline OracleReport run_oracle_suite(const ValidateOptions& opt = {}) {
    OracleReport rep;
    check_golden_ratio(rep);
    check_dual_path(rep, opt.seed);
    check_rmt_oracles(rep, opt.seed, opt.oracle_samples);
    check_estimation_moments(rep, opt.seed);
    check_zf_nulling(rep, opt.seed);
    check_mc_vs_de(rep, opt);
    return rep;
}

// JSON dumps for plotting and audit.
inline json geometry_to_json(const NetworkGeometry& net) {
    json bs = json::array();
    for (const auto& b : net.bs_positions) bs.push_back({b.x(), b.y()});
    json wraps = json::array();
    for (const auto& w : net.wrap_vectors) wraps.push_back({w.x(), w.y()});
    return json{{"cell_count", net.cell_count},
                {"radius_m", net.radius_m},
                {"bs_positions", bs},
                {"wrap_vectors", wraps}};
}

inline json allocation_to_json(const PilotAllocation& alloc) {
    json cells = json::array();
    for (int l = 0; l < alloc.cells; ++l) {
        json pilots = json::array();
        for (int k = 0; k < alloc.users_per_cell; ++k) pilots.push_back(alloc.pilot(l, k));
        cells.push_back(pilots);
    }
    return json{{"B", alloc.B},
                {"beta", alloc.beta},
                {"beta_f", alloc.beta_f},
                {"pilot_index", cells}};
}

}  // namespace mmimo
