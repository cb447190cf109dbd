#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmimo/geometry.hpp"

namespace mmimo {

// Uplink pilot/payload powers, downlink powers and noise.
struct PowerProfile {
    std::vector<double> p;       // pilot powers p_lk, [l*K + k]
    std::vector<double> tau;     // virtual uplink payload powers, = p
    std::vector<double> rho_dl;  // downlink powers, constant = p_max
    double sigma2 = 1.0;
    double rho_ul = 1.0;  // design uplink SNR times sigma2
    double p_max = 0.0;

    double pilot_power(int l, int k, int K) const { return p[l * K + k]; }
};

// Statistical channel inversion: p_lk = tau_lk = rho_ul / d_l(z_lk).
inline void channel_inversion(const UserDrop& drop, double rho_ul,
                              std::vector<double>& p, std::vector<double>& tau) {
    const int L = drop.cells;
    const int K = drop.users_per_cell;
    p.resize(static_cast<std::size_t>(L) * K);
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            const double d = drop.gain(l, l, k);
            if (!(d > 0.0)) throw std::domain_error("channel_inversion: zero serving gain");
            p[l * K + k] = rho_ul / d;
        }
    tau = p;
}

// Downlink power making the no-shadowing cell-corner SNR equal the target:
// p_max * r^{-kappa} / sigma2 = 10^(target/10).
inline double calibrate_pmax(const NetworkGeometry& net, double kappa,
                             double target_edge_snr_db, double sigma2) {
    const double d_edge = std::pow(net.radius_m, -kappa);
    return std::pow(10.0, target_edge_snr_db / 10.0) * sigma2 / d_edge;
}

inline PowerProfile make_power_profile(const NetworkGeometry& net, const UserDrop& drop,
                                       double rho_ul_db, double edge_snr_db,
                                       double kappa, double sigma2) {
    PowerProfile pw;
    pw.sigma2 = sigma2;
    pw.rho_ul = std::pow(10.0, rho_ul_db / 10.0) * sigma2;
    pw.p_max = calibrate_pmax(net, kappa, edge_snr_db, sigma2);
    channel_inversion(drop, pw.rho_ul, pw.p, pw.tau);
    pw.rho_dl.assign(pw.p.size(), pw.p_max);
    return pw;
}

}  // namespace mmimo
