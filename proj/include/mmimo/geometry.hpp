#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mmimo/random.hpp"

namespace mmimo {

using Vec2 = Eigen::Vector2d;

inline constexpr double kSqrt3 = 1.7320508075688772935;
// Users are rejected closer than this fraction of the cell radius to their
// serving BS.
inline constexpr double kMinUserDistanceFactor = 0.14;

// The 19-cell hexagonal layout (center cell plus two rings) identified as a
// torus: translating by any wrap vector maps the layout onto itself.
struct NetworkGeometry {
    int cell_count = 0;
    double radius_m = 0.0;           // hexagon corner radius
    std::vector<Vec2> bs_positions;  // one per cell
    std::vector<Vec2> wrap_vectors;  // zero vector first, then the 6 images
    // Axial lattice coordinates of each cell, kept for pilot-group tables.
    std::vector<std::pair<int, int>> axial;
};

// Builds the 19-cell wrap-around network. Cells live on the hexagonal
// lattice spanned by u = sqrt(3) r (1,0) and v = sqrt(3) r (1/2, sqrt(3)/2);
// the wrap lattice is spanned by 3u+2v and -2u+5v (a 19-cell cluster tiles
// the plane because 19 = 3^2 + 3*2 + 2^2).
inline NetworkGeometry build_hex_network(double radius_m) {
    if (!(radius_m > 0.0)) throw std::invalid_argument("radius_m must be > 0");
    NetworkGeometry net;
    net.radius_m = radius_m;
    const Vec2 u = kSqrt3 * radius_m * Vec2(1.0, 0.0);
    const Vec2 v = kSqrt3 * radius_m * Vec2(0.5, kSqrt3 / 2.0);

    net.axial.emplace_back(0, 0);
    for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) {
            const int ring = std::max({std::abs(a), std::abs(b), std::abs(a + b)});
            if (ring >= 1 && ring <= 2) net.axial.emplace_back(a, b);
        }
    net.cell_count = static_cast<int>(net.axial.size());
    for (auto [a, b] : net.axial) net.bs_positions.push_back(a * u + b * v);

    const Vec2 w1 = 3.0 * u + 2.0 * v;
    const Vec2 w2 = -2.0 * u + 5.0 * v;
    net.wrap_vectors = {Vec2(0.0, 0.0), w1, -w1, w2, -w2, w1 - w2, w2 - w1};
    return net;
}

// Exact torus quotient metric: distance from z - b_j to the nearest point of
// the wrap lattice. The lattice is hexagonal (its two generators meet at 60
// degrees), so rounding the lattice coordinates and scanning the 3x3 integer
// neighborhood finds the true nearest point; this keeps the metric exactly
// translation invariant under wrap vectors, which the 7-image minimum is not
// for far pairs.
inline double wrap_distance(const NetworkGeometry& net, const Vec2& z, int j) {
    if (j < 0 || j >= net.cell_count) throw std::out_of_range("bad BS index");
    const Vec2& w1 = net.wrap_vectors[1];
    const Vec2& w2 = net.wrap_vectors[3];
    const Vec2 x = z - net.bs_positions[j];
    const double det = w1.x() * w2.y() - w1.y() * w2.x();
    const double a = (x.x() * w2.y() - x.y() * w2.x()) / det;
    const double b = (w1.x() * x.y() - w1.y() * x.x()) / det;
    double best = std::numeric_limits<double>::infinity();
    for (int da = -1; da <= 1; ++da)
        for (int db = -1; db <= 1; ++db) {
            const double ia = std::round(a) + da;
            const double ib = std::round(b) + db;
            best = std::min(best, (x - ia * w1 - ib * w2).norm());
        }
    return best;
}

// Pointy-top hexagon with corner radius r centered at the origin.
inline bool point_in_hexagon(const Vec2& p, double r) {
    const double x = std::abs(p.x());
    const double y = std::abs(p.y());
    return x <= kSqrt3 / 2.0 * r && y <= r - x / kSqrt3;
}

// User positions and the large-scale gain tensor of one drop.
struct UserDrop {
    int cells = 0;
    int users_per_cell = 0;
    std::vector<Vec2> positions;       // [l*K + k] = z_lk
    std::vector<double> gains;         // [(j*L + l)*K + k] = d_j(z_lk)
    std::vector<double> shadowing_db;  // same layout, realized 10*log10(C)

    const Vec2& position(int l, int k) const { return positions[l * users_per_cell + k]; }
    // Gain from BS j to user k of cell l.
    double gain(int j, int l, int k) const {
        return gains[(j * cells + l) * users_per_cell + k];
    }
};

// Pathloss with lognormal shadowing: C / dist^kappa, 10*log10(C) = shadow_db.
inline double channel_gain(const NetworkGeometry& net, const Vec2& z, int j,
                           double shadow_db, double kappa) {
    const double dist = wrap_distance(net, z, j);
    if (dist <= 0.0) throw std::domain_error("zero distance: singular pathloss");
    return std::pow(10.0, shadow_db / 10.0) / std::pow(dist, kappa);
}

// Uniform positions over each hexagon, rejection-sampled to keep the serving
// distance at least 0.14 r. Positions only; gains come from compute_gains.
inline UserDrop drop_users(const NetworkGeometry& net, int K, Xoshiro256pp& rng) {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    const double r = net.radius_m;
    UserDrop drop;
    drop.cells = net.cell_count;
    drop.users_per_cell = K;
    drop.positions.reserve(net.cell_count * K);
    for (int l = 0; l < net.cell_count; ++l)
        for (int k = 0; k < K; ++k) {
            Vec2 p;
            do {
                p.x() = rng.uniform(-kSqrt3 / 2.0 * r, kSqrt3 / 2.0 * r);
                p.y() = rng.uniform(-r, r);
            } while (!point_in_hexagon(p, r) || p.norm() < kMinUserDistanceFactor * r);
            drop.positions.push_back(net.bs_positions[l] + p);
        }
    return drop;
}

// Draws one independent shadowing value per (BS, user) link and fills the
// gain tensor. sigma_sf_sq is the variance of 10*log10(C) in dB^2.
inline void compute_gains(const NetworkGeometry& net, UserDrop& drop,
                          double kappa, double sigma_sf_sq, Xoshiro256pp& rng) {
    const int L = net.cell_count;
    const int K = drop.users_per_cell;
    drop.gains.assign(static_cast<std::size_t>(L) * L * K, 0.0);
    drop.shadowing_db.assign(drop.gains.size(), 0.0);
    NormalSource normal(rng);
    const double sd = std::sqrt(sigma_sf_sq);
    for (int j = 0; j < L; ++j)
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k) {
                double a, b;
                normal.pair(a, b);  // second draw discarded to keep pairs aligned
                const double sh = sd * a;
                const std::size_t at = (static_cast<std::size_t>(j) * L + l) * K + k;
                drop.shadowing_db[at] = sh;
                drop.gains[at] = channel_gain(net, drop.position(l, k), j, sh, kappa);
            }
}

inline UserDrop make_drop(const NetworkGeometry& net, int K, double kappa,
                          double sigma_sf_sq, std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    UserDrop drop = drop_users(net, K, rng);
    compute_gains(net, drop, kappa, sigma_sf_sq, rng);
    return drop;
}

}  // namespace mmimo
