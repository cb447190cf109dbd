#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmimo/channel.hpp"

namespace mmimo {

enum class Scheme { MF, SMMSE, MZF, MMMSE };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::MF: return "mf";
        case Scheme::SMMSE: return "s-mmse";
        case Scheme::MZF: return "m-zf";
        case Scheme::MMMSE: return "m-mmse";
    }
    return "?";
}

inline Scheme parse_scheme(const std::string& name) {
    if (name == "mf") return Scheme::MF;
    if (name == "s-mmse") return Scheme::SMMSE;
    if (name == "m-zf") return Scheme::MZF;
    if (name == "m-mmse") return Scheme::MMMSE;
    throw std::invalid_argument("unknown scheme: " + name);
}

// Residual-interference model used in the S-MMSE regularizer. The single-cell
// precoder has no estimates of other-cell channels, so their treatment is a
// modeling choice:
//   SharedPhi       same phi as M-MMSE (all-cell estimation error power only)
//   IntraError      own-cell estimation error power only
//   IntraPlusOther  own-cell error power plus the full power of every
//                   other-cell channel treated as unestimated noise
// IntraPlusOther matches treating inter-cell interference purely through its
// statistics and is the default.
enum class SmmseRegularizer { SharedPhi, IntraError, IntraPlusOther };

// Large-scale combiner weights of the M-MMSE detector: gamma_{l,b} the
// diagonal of Lambda_l, phi_l the weighted sum of estimation error variances.
// phi_sc is the S-MMSE counterpart per the chosen regularizer model. All
// depend only on the drop, never on small-scale realizations.
struct CombinerWeights {
    int B = 0;
    std::vector<double> gamma;   // [l*B + b]
    std::vector<double> phi;     // [l]
    std::vector<double> phi_sc;  // [l], S-MMSE regularizer
};

inline CombinerWeights combiner_weights(
    const UserDrop& drop, const PilotAllocation& alloc, const PowerProfile& powers,
    const std::vector<double>& alpha,
    SmmseRegularizer sc_mode = SmmseRegularizer::IntraPlusOther) {
    const int L = drop.cells;
    const int K = drop.users_per_cell;
    const int B = alloc.B;
    CombinerWeights w;
    w.B = B;
    w.gamma.assign(static_cast<std::size_t>(L) * B, 0.0);
    w.phi.assign(L, 0.0);
    w.phi_sc.assign(L, 0.0);
    for (int j = 0; j < L; ++j)
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) {
                const double d = drop.gain(j, l, k);
                const double tp = powers.tau[l * K + k];
                w.gamma[j * B + alloc.pilot(l, k)] += tp * powers.p[l * K + k] * d * d;
                const double err =
                    tp * error_variance(drop, alloc, powers, alpha, j, l, k);
                w.phi[j] += err;
                switch (sc_mode) {
                    case SmmseRegularizer::SharedPhi:
                        w.phi_sc[j] += err;
                        break;
                    case SmmseRegularizer::IntraError:
                        if (l == j) w.phi_sc[j] += err;
                        break;
                    case SmmseRegularizer::IntraPlusOther:
                        w.phi_sc[j] += (l == j) ? err : tp * d;
                        break;
                }
            }
    return w;
}

// M x K matrix of the own-cell channel estimates at BS j.
inline Eigen::MatrixXcd own_estimates(const EstimateSet& est, const UserDrop& drop,
                                      const PilotAllocation& alloc,
                                      const PowerProfile& powers, int j) {
    const int K = drop.users_per_cell;
    Eigen::MatrixXcd own(est.M, K);
    for (int k = 0; k < K; ++k)
        own.col(k) = estimate_scale(drop, powers, j, j, k) *
                     est.h_dir[j].col(alloc.pilot(j, k));
    return own;
}

namespace detail {
inline Eigen::MatrixXcd solve_hpd(Eigen::MatrixXcd A, const Eigen::MatrixXcd& rhs,
                                  const char* what) {
    Eigen::LLT<Eigen::MatrixXcd> llt(std::move(A));
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(std::string(what) + ": factorization failed");
    return llt.solve(rhs);
}
}  // namespace detail

// Unnormalized M-MMSE directions for all K users of BS j:
//   g_k = (Hdir Lambda_j Hdir^H + (sigma2 + phi_j) I)^{-1} hhat_jjk.
inline Eigen::MatrixXcd m_mmse_directions(const EstimateSet& est, const CombinerWeights& w,
                                          const UserDrop& drop, const PilotAllocation& alloc,
                                          const PowerProfile& powers, int j) {
    const int B = est.B;
    thread_local Eigen::MatrixXcd scaled, A;
    scaled = est.h_dir[j];
    for (int b = 0; b < B; ++b) scaled.col(b) *= std::sqrt(w.gamma[j * B + b]);
    A.setZero(est.M, est.M);
    A.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    A.diagonal().array() += powers.sigma2 + w.phi[j];
    return detail::solve_hpd(A, own_estimates(est, drop, alloc, powers, j), "m-mmse");
}

// Single-cell MMSE: same structure restricted to the K intra-cell estimates,
// regularized by sigma2 + phi_sc (see SmmseRegularizer).
inline Eigen::MatrixXcd s_mmse_directions(const EstimateSet& est, const CombinerWeights& w,
                                          const UserDrop& drop, const PilotAllocation& alloc,
                                          const PowerProfile& powers, int j) {
    const int K = drop.users_per_cell;
    const Eigen::MatrixXcd own = own_estimates(est, drop, alloc, powers, j);
    thread_local Eigen::MatrixXcd scaled, A;
    scaled = own;
    for (int k = 0; k < K; ++k) scaled.col(k) *= std::sqrt(powers.tau[j * K + k]);
    A.setZero(est.M, est.M);
    A.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    A.diagonal().array() += powers.sigma2 + w.phi_sc[j];
    return detail::solve_hpd(A, own, "s-mmse");
}

// Multi-cell ZF over all B estimated directions; requires M > B.
inline Eigen::MatrixXcd m_zf_directions(const EstimateSet& est, const UserDrop& drop,
                                        const PilotAllocation& alloc, int j) {
    const int K = drop.users_per_cell;
    if (est.M <= est.B)
        throw std::invalid_argument("m-zf requires M > B");
    thread_local Eigen::MatrixXcd gram;
    gram.setZero(est.B, est.B);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(est.h_dir[j].adjoint());
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(est.B, K);
    for (int k = 0; k < K; ++k) rhs(alloc.pilot(j, k), k) = 1.0;
    return est.h_dir[j] * detail::solve_hpd(gram, rhs, "m-zf");
}

inline Eigen::MatrixXcd mf_directions(const EstimateSet& est, const UserDrop& drop,
                                      const PilotAllocation& alloc,
                                      const PowerProfile& powers, int j) {
    return own_estimates(est, drop, alloc, powers, j);
}

inline Eigen::MatrixXcd build_directions(Scheme scheme, const EstimateSet& est,
                                         const CombinerWeights& w, const UserDrop& drop,
                                         const PilotAllocation& alloc,
                                         const PowerProfile& powers, int j) {
    switch (scheme) {
        case Scheme::MF: return mf_directions(est, drop, alloc, powers, j);
        case Scheme::SMMSE: return s_mmse_directions(est, w, drop, alloc, powers, j);
        case Scheme::MZF: return m_zf_directions(est, drop, alloc, j);
        case Scheme::MMMSE: return m_mmse_directions(est, w, drop, alloc, powers, j);
    }
    throw std::logic_error("unreachable");
}

// Per-user wrappers.
inline Eigen::VectorXcd m_mmse_direction(const EstimateSet& est, const CombinerWeights& w,
                                         const UserDrop& drop, const PilotAllocation& alloc,
                                         const PowerProfile& powers, int j, int k) {
    return m_mmse_directions(est, w, drop, alloc, powers, j).col(k);
}
inline Eigen::VectorXcd m_zf_direction(const EstimateSet& est, const UserDrop& drop,
                                       const PilotAllocation& alloc, int j, int k) {
    return m_zf_directions(est, drop, alloc, j).col(k);
}
inline Eigen::VectorXcd mf_direction(const EstimateSet& est, const UserDrop& drop,
                                     const PilotAllocation& alloc,
                                     const PowerProfile& powers, int j, int k) {
    return mf_directions(est, drop, alloc, powers, j).col(k);
}

// Duality-based power normalization: lambda_jk is the sample mean of ||g_jk||^2
// over a realization set; w_jk = g_jk / sqrt(lambda_jk), so the empirical mean
// of ||w_jk||^2 over that same set equals one exactly.
struct PrecoderSet {
    Scheme scheme = Scheme::MMMSE;
    int cells = 0;
    int users_per_cell = 0;
    std::vector<double> lambda;  // [j*K + k]
};

class PowerNormalizer {
public:
    PowerNormalizer(int cells, int users_per_cell)
        : cells_(cells), users_(users_per_cell),
          sums_(static_cast<std::size_t>(cells) * users_per_cell, 0.0) {}

    void add(int j, const Eigen::MatrixXcd& directions) {
        for (int k = 0; k < users_; ++k)
            sums_[j * users_ + k] += directions.col(k).squaredNorm();
    }
    void add_count() { ++n_; }
    void merge(const PowerNormalizer& other) {
        for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += other.sums_[i];
        n_ += other.n_;
    }

    PrecoderSet finalize(Scheme scheme) const {
        if (n_ < 1) throw std::invalid_argument("normalize: needs >= 1 realization");
        PrecoderSet set;
        set.scheme = scheme;
        set.cells = cells_;
        set.users_per_cell = users_;
        set.lambda.resize(sums_.size());
        for (std::size_t i = 0; i < sums_.size(); ++i) {
            set.lambda[i] = sums_[i] / n_;
            if (!(set.lambda[i] > 0.0))
                throw std::runtime_error("normalize: zero-power direction");
        }
        return set;
    }

private:
    int cells_;
    int users_;
    std::vector<double> sums_;
    long n_ = 0;
};

// Spec-level convenience for a single user's stored realizations.
inline std::pair<double, std::vector<Eigen::VectorXcd>> normalize_samples(
    const std::vector<Eigen::VectorXcd>& g_samples) {
    if (g_samples.empty()) throw std::invalid_argument("normalize: needs >= 1 realization");
    double lambda = 0.0;
    for (const auto& g : g_samples) lambda += g.squaredNorm();
    lambda /= static_cast<double>(g_samples.size());
    if (!(lambda > 0.0)) throw std::runtime_error("normalize: zero-power direction");
    std::vector<Eigen::VectorXcd> w;
    w.reserve(g_samples.size());
    for (const auto& g : g_samples) w.push_back(g / std::sqrt(lambda));
    return {lambda, std::move(w)};
}

}  // namespace mmimo
