#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmimo/scenario.hpp"

namespace mmimo {

struct FixedPointConfig {
    double rel_tol = 1e-10;
    int max_iter = 10000;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (last residual " + std::to_string(residual) + ")"),
          last_residual(residual) {}
    double last_residual;
};

// Real trace of a product of two Hermitian matrices.
inline double trace_product(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return a.cwiseProduct(b.transpose()).sum().real();
}

// ---------------------------------------------------------------------------
// General matrix fixed point: resolvent deterministic equivalents for random
// matrices with independent columns h_b ~ CN(0, R_b / M).
// ---------------------------------------------------------------------------

struct Thm1Result {
    Eigen::VectorXd delta;          // fixed point, one entry per column class
    Eigen::MatrixXcd T;             // T(rho)
    int iterations = 0;
    std::vector<double> residuals;  // sup-norm step sizes, for diagnostics
};

// Iterates delta_b = (1/M) tr(R_b ((1/M) sum_j R_j/(1+delta_j) + rho I)^{-1})
// from delta_b^{(0)} = 1/rho until the relative sup-norm step drops below tol.
inline Thm1Result thm1_fixed_point(const std::vector<Eigen::MatrixXcd>& R, double rho,
                                   const FixedPointConfig& cfg = {}) {
    if (R.empty()) throw std::invalid_argument("thm1: needs at least one R_b");
    if (!(rho > 0.0)) throw std::invalid_argument("thm1: rho must be > 0");
    const int B = static_cast<int>(R.size());
    const int M = static_cast<int>(R[0].rows());

    Thm1Result res;
    res.delta = Eigen::VectorXd::Constant(B, 1.0 / rho);
    Eigen::MatrixXcd core(M, M);
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(M, M);

    auto resolvent = [&](const Eigen::VectorXd& delta) -> Eigen::MatrixXcd {
        core.setZero();
        for (int b = 0; b < B; ++b) core += R[b] / (1.0 + delta[b]);
        core /= static_cast<double>(M);
        core.diagonal().array() += rho;
        return core.llt().solve(eye);
    };

    double residual = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= cfg.max_iter; ++it) {
        res.T = resolvent(res.delta);
        Eigen::VectorXd next(B);
        for (int b = 0; b < B; ++b) next[b] = trace_product(R[b], res.T) / M;
        const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
        residual = (next - res.delta).cwiseAbs().maxCoeff() / scale;
        res.delta = next;
        res.iterations = it;
        res.residuals.push_back(residual);
        if (residual < cfg.rel_tol) {
            res.T = resolvent(res.delta);
            return res;
        }
    }
    throw ConvergenceError("thm1 fixed point did not converge", residual);
}

struct Thm2Result {
    Eigen::VectorXd delta_prime;
    Eigen::MatrixXcd T_prime;
    Eigen::MatrixXd J;
    Eigen::VectorXd v;
};

// Derivative-type equivalent: T'(rho) for a Hermitian nonnegative Theta.
inline Thm2Result thm2_prime(const std::vector<Eigen::MatrixXcd>& R, double rho,
                             const Eigen::MatrixXcd& Theta, const Thm1Result& thm1) {
    const int B = static_cast<int>(R.size());
    const int M = static_cast<int>(R[0].rows());
    const Eigen::MatrixXcd& T = thm1.T;

    std::vector<Eigen::MatrixXcd> RT(B);
    for (int b = 0; b < B; ++b) RT[b] = R[b] * T;

    Thm2Result res;
    res.J.resize(B, B);
    res.v.resize(B);
    const Eigen::MatrixXcd W = T * Theta * T;
    for (int b = 0; b < B; ++b) {
        res.v[b] = trace_product(R[b], W) / M;
        for (int l = 0; l < B; ++l) {
            const double tr = RT[b].cwiseProduct(RT[l].transpose()).sum().real();
            res.J(b, l) = tr / (M * M * std::pow(1.0 + thm1.delta[l], 2));
        }
    }
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(B, B) - res.J;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    res.delta_prime = lu.solve(res.v);
    if ((A * res.delta_prime - res.v).cwiseAbs().maxCoeff() >
        1e-8 * std::max(1.0, res.v.cwiseAbs().maxCoeff()))
        throw std::runtime_error("thm2: I - J is singular");

    Eigen::MatrixXcd mid = Eigen::MatrixXcd::Zero(M, M);
    for (int b = 0; b < B; ++b)
        mid += R[b] * (res.delta_prime[b] / std::pow(1.0 + thm1.delta[b], 2));
    res.T_prime = W + T * (mid / M) * T;
    return res;
}

// ---------------------------------------------------------------------------
// Scalar fast path. Under the i.i.d. channel model every covariance is a
// scaled identity R_b = c_b I_M, which collapses both theorems to scalar
// recursions: T = t I with t = 1/((1/M) sum_b c_b/(1+delta_b) + rho) and
// delta_b = c_b t; for Theorem 2, J is exactly rank one and
// T'(Theta = theta I) = t' I with t' = t^2 theta / (1 - t^2 q),
// q = (1/M) sum_b c_b^2/(1+delta_b)^2, delta'_b = c_b t'.
// ---------------------------------------------------------------------------

struct ScalarThm1 {
    Eigen::VectorXd delta;
    double t = 0.0;
    int iterations = 0;
    std::vector<double> residuals;
};

inline ScalarThm1 scalar_thm1(const Eigen::VectorXd& c, double rho, int M,
                              const FixedPointConfig& cfg = {}) {
    if (!(rho > 0.0)) throw std::invalid_argument("scalar thm1: rho must be > 0");
    const int B = static_cast<int>(c.size());
    ScalarThm1 res;
    res.delta = Eigen::VectorXd::Constant(B, 1.0 / rho);
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= cfg.max_iter; ++it) {
        double s = 0.0;
        for (int b = 0; b < B; ++b) s += c[b] / (1.0 + res.delta[b]);
        res.t = 1.0 / (s / M + rho);
        const Eigen::VectorXd next = c * res.t;
        const double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
        residual = (next - res.delta).cwiseAbs().maxCoeff() / scale;
        res.delta = next;
        res.iterations = it;
        res.residuals.push_back(residual);
        if (residual < cfg.rel_tol) {
            double s2 = 0.0;
            for (int b = 0; b < B; ++b) s2 += c[b] / (1.0 + res.delta[b]);
            res.t = 1.0 / (s2 / M + rho);
            return res;
        }
    }
    throw ConvergenceError("scalar thm1 fixed point did not converge", residual);
}

struct ScalarThm2 {
    Eigen::VectorXd delta_prime;
    double t_prime = 0.0;
};

inline ScalarThm2 scalar_thm2(const Eigen::VectorXd& c, int M, double theta_coeff,
                              const ScalarThm1& s1) {
    double q = 0.0;
    for (int b = 0; b < c.size(); ++b)
        q += c[b] * c[b] / std::pow(1.0 + s1.delta[b], 2);
    q /= M;
    const double denom = 1.0 - s1.t * s1.t * q;
    if (!(denom > 0.0)) throw std::runtime_error("scalar thm2: I - J is singular");
    ScalarThm2 res;
    res.t_prime = s1.t * s1.t * theta_coeff / denom;
    res.delta_prime = c * res.t_prime;
    return res;
}

struct ScalarFastPath {
    ScalarThm1 thm1;
    ScalarThm2 thm2;  // for Theta = theta_coeff * I
};

inline ScalarFastPath scalar_fast_path(const Eigen::VectorXd& c, double rho, int M,
                                       double theta_coeff,
                                       const FixedPointConfig& cfg = {}) {
    ScalarFastPath res;
    res.thm1 = scalar_thm1(c, rho, M, cfg);
    res.thm2 = scalar_thm2(c, M, theta_coeff, res.thm1);
    return res;
}

// ---------------------------------------------------------------------------
// Large-scale SINR assembly for the M-MMSE precoder.
// ---------------------------------------------------------------------------

enum class DePath { Scalar, General };

// Per-BS traces feeding the SINR assembly. theta_t/theta_tpp/tprime_tr are
// (1/M) tr(Phi_b T), (1/M) tr(Phi_b T''), (1/M) tr(T'_b) with Theta of T'_b
// equal to the pilot-b estimate covariance; alphaB is the Phi coefficient.
struct DeterministicEquivalent {
    int M = 0;
    DePath path = DePath::Scalar;
    std::vector<double> rho_reg;    // [l]
    std::vector<double> fp_delta;   // [l*B + b]
    std::vector<double> theta_t;    // [l*B + b]
    std::vector<double> theta_tpp;  // [l*B + b]
    std::vector<double> tprime_tr;  // [l*B + b]
    std::vector<double> alphaB;     // [l*B + b]
    std::vector<double> delta_user;  // [j*K + k], Eq.-26-type quantity at the own BS
    std::vector<double> eta_bar;     // [j*K + k]
};

inline DeterministicEquivalent large_scale_sinr(const UserDrop& drop,
                                                const PilotAllocation& alloc,
                                                const ScenarioState& s, int M,
                                                DePath path = DePath::Scalar,
                                                const FixedPointConfig& cfg = {}) {
    const int L = drop.cells;
    const int K = drop.users_per_cell;
    const int B = alloc.B;
    const auto& gamma = s.weights.gamma;

    DeterministicEquivalent de;
    de.M = M;
    de.path = path;
    de.rho_reg.resize(L);
    de.fp_delta.resize(static_cast<std::size_t>(L) * B);
    de.theta_t.resize(de.fp_delta.size());
    de.theta_tpp.resize(de.fp_delta.size());
    de.tprime_tr.resize(de.fp_delta.size());
    de.alphaB.resize(de.fp_delta.size());

    for (int l = 0; l < L; ++l) {
        const double rho = (s.powers.sigma2 + s.weights.phi[l]) / M;
        de.rho_reg[l] = rho;
        Eigen::VectorXd c(B);
        for (int b = 0; b < B; ++b) {
            de.alphaB[l * B + b] = s.alpha[l * B + b] * B;
            c[b] = gamma[l * B + b] * de.alphaB[l * B + b];
        }
        if (path == DePath::Scalar) {
            const ScalarThm1 s1 = scalar_thm1(c, rho, M, cfg);
            const ScalarThm2 s2 = scalar_thm2(c, M, 1.0, s1);
            for (int b = 0; b < B; ++b) {
                de.fp_delta[l * B + b] = s1.delta[b];
                de.theta_t[l * B + b] = de.alphaB[l * B + b] * s1.t;
                de.theta_tpp[l * B + b] = de.alphaB[l * B + b] * s2.t_prime;
                // T'(Theta = alphaB_b I) = alphaB_b * T''(Theta = I) by linearity
                de.tprime_tr[l * B + b] = de.alphaB[l * B + b] * s2.t_prime;
            }
        } else {
            std::vector<Eigen::MatrixXcd> R(B);
            const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(M, M);
            for (int b = 0; b < B; ++b) R[b] = c[b] * eye;
            const Thm1Result t1 = thm1_fixed_point(R, rho, cfg);
            const Thm2Result t2i = thm2_prime(R, rho, eye, t1);
            const double trT = t1.T.trace().real() / M;
            const double trTpp = t2i.T_prime.trace().real() / M;
            for (int b = 0; b < B; ++b) {
                de.fp_delta[l * B + b] = t1.delta[b];
                de.theta_t[l * B + b] = de.alphaB[l * B + b] * trT;
                de.theta_tpp[l * B + b] = de.alphaB[l * B + b] * trTpp;
                const Thm2Result t2b = thm2_prime(R, rho, de.alphaB[l * B + b] * eye, t1);
                de.tprime_tr[l * B + b] = t2b.T_prime.trace().real() / M;
            }
        }
        for (int b = 0; b < B; ++b)
            if (gamma[l * B + b] > 0.0 && !(de.theta_tpp[l * B + b] > 0.0))
                throw std::runtime_error("large_scale_sinr: nonpositive theta''");
    }

    // Assemble eta_bar per user.
    de.delta_user.resize(static_cast<std::size_t>(L) * K);
    de.eta_bar.resize(de.delta_user.size());
    const double sigma2 = s.powers.sigma2;
    for (int j = 0; j < L; ++j)
        for (int k = 0; k < K; ++k) {
            const int bs = alloc.pilot(j, k);
            const double p_jk = s.powers.p[j * K + k];
            de.delta_user[j * K + k] = de.theta_t[j * B + bs];

            const double num = s.powers.rho_dl[j * K + k] * p_jk *
                               std::pow(drop.gain(j, j, k), 2) *
                               std::pow(de.delta_user[j * K + k], 2) /
                               de.theta_tpp[j * B + bs];
            double coherent = 0.0;
            double noncoherent = 0.0;
            for (int l = 0; l < L; ++l) {
                const double d_l = drop.gain(l, j, k);
                const double th = de.theta_t[l * B + bs];
                const double ga = gamma[l * B + bs];
                const double gath = ga * th;
                // common factor of the mu correction for this (user, BS) pair
                const double corr = p_jk * d_l * ga * de.alphaB[l * B + bs] * th *
                                    (2.0 + gath) / std::pow(1.0 + gath, 2);
                for (int m = 0; m < K; ++m) {
                    if (l == j && m == k) continue;
                    const int bm = alloc.pilot(l, m);
                    const double rho_lm = s.powers.rho_dl[l * K + m];
                    if (bm == bs) {
                        coherent += rho_lm * d_l * d_l *
                                    std::pow(de.theta_t[l * B + bm], 2) /
                                    de.theta_tpp[l * B + bm];
                    } else {
                        const double tp = de.tprime_tr[l * B + bm];
                        const double mu = tp - corr * tp;  // theta' = alphaB * tr(T')
                        noncoherent += rho_lm * d_l * mu / (M * de.theta_tpp[l * B + bm]);
                    }
                }
            }
            const double den = p_jk * coherent + noncoherent + sigma2 / M;
            de.eta_bar[j * K + k] = num / den;
            if (!(de.eta_bar[j * K + k] > 0.0))
                throw std::runtime_error("large_scale_sinr: nonpositive eta");
        }
    return de;
}

}  // namespace mmimo
