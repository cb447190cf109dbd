// Acceptance suite: executes every criterion at its stated tolerance and
// prints one [PASS]/[FAIL] line per criterion. Exit code 0 iff all pass.
//
// Runtime note: criterion 1 alone is pinned at 2000 realizations x 20 drops;
// expect tens of minutes on a small machine. Progress goes to stderr.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mmimo/oracles.hpp"

using namespace mmimo;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_t0;

void progress(const std::string& msg) {
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
    std::fprintf(stderr, "[%7.1fs] %s\n", s, msg.c_str());
}

void record(const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++g_failures;
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

constexpr std::uint64_t kSeed = 0xACCE97;
constexpr int kS = 500;

const NetworkGeometry& net() {
    static const NetworkGeometry n = build_hex_network(500.0);
    return n;
}

// Drop seeds shared across beta/M/scheme so comparisons are paired.
std::uint64_t drop_seed(int K, int d) { return derive_seed(kSeed, K, d); }

DropScenario scenario_for(int K, int beta, int d) {
    ExperimentConfig defaults;
    return make_drop_scenario(net(), defaults, K, beta, 0.0, drop_seed(K, d));
}

std::vector<McResult> mc_eval(const DropScenario& ds, int M, int beta, int R,
                              const std::vector<Scheme>& schemes, int d) {
    McOptions opt;
    opt.realizations = R;
    opt.seed = derive_seed(drop_seed(ds.drop.users_per_cell, d), M, beta);
    opt.threads = 0;
    return run_monte_carlo(ds.drop, ds.alloc, ds.state, M, schemes, kS, opt);
}

double de_sum_se(const DropScenario& ds, int M) {
    const auto de = large_scale_sinr(ds.drop, ds.alloc, ds.state, M);
    const double prelog = 1.0 - double(ds.alloc.B) / kS;
    double sum = 0.0;
    for (double e : de.eta_bar) sum += prelog * std::log2(1.0 + e);
    return sum / ds.drop.cells;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double stdev(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

// --------------------------------------------------------------------------
// AC1: MC-vs-DE agreement at M=100, K=10, beta=4, 2000 realizations, 20 drops.
// --------------------------------------------------------------------------
void criterion1() {
    const int M = 100, K = 10, beta = 4, R = 2000, drops = 20;
    std::vector<double> gaps;
    std::vector<double> mc_sums, de_sums;
    for (int d = 0; d < drops; ++d) {
        const auto ds = scenario_for(K, beta, d);
        const auto mc = mc_eval(ds, M, beta, R, {Scheme::MMMSE}, d);
        const auto de = large_scale_sinr(ds.drop, ds.alloc, ds.state, M);
        for (std::size_t i = 0; i < de.eta_bar.size(); ++i)
            gaps.push_back(std::abs(mc[0].report.sinr[i] - de.eta_bar[i]) /
                           de.eta_bar[i]);
        mc_sums.push_back(mc[0].report.sum_se_avg);
        de_sums.push_back(de_sum_se(ds, M));
        progress(fmt("AC1 drop %d/%d", d + 1, drops));
    }
    const double med = median(gaps);
    const double se_gap = std::abs(mean(mc_sums) - mean(de_sums)) / mean(mc_sums);
    record("AC1 MC-vs-DE SINR median gap", med <= 0.05,
           fmt("median per-user gap %.2f%% (<= 5%%), M=100 K=10 beta=4", 100 * med));
    record("AC1 MC-vs-DE sum-SE gap", se_gap <= 0.03,
           fmt("sum-SE gap %.2f%% (<= 3%%): MC %.2f vs DE %.2f bit/s/Hz", 100 * se_gap,
               mean(mc_sums), mean(de_sums)));
}

// --------------------------------------------------------------------------
// AC2: sum SE strictly increasing in beta at M=200, K=10; each gap beyond
// 2 sigma of the paired per-drop differences.
// --------------------------------------------------------------------------
void criterion2() {
    const int M = 200, K = 10, R = 300, drops = 6;
    const std::vector<int> betas{1, 3, 4, 7};
    std::map<int, std::vector<double>> se;
    for (int d = 0; d < drops; ++d) {
        for (int beta : betas) {
            const auto ds = scenario_for(K, beta, d);
            const auto mc = mc_eval(ds, M, beta, R, {Scheme::MMMSE}, d);
            se[beta].push_back(mc[0].report.sum_se_avg);
        }
        progress(fmt("AC2 drop %d/%d", d + 1, drops));
    }
    bool pass = true;
    std::string detail;
    for (std::size_t i = 1; i < betas.size(); ++i) {
        const int lo = betas[i - 1], hi = betas[i];
        std::vector<double> diff(drops);
        for (int d = 0; d < drops; ++d) diff[d] = se[hi][d] - se[lo][d];
        const double m = mean(diff);
        const double err = 2.0 * stdev(diff) / std::sqrt(double(drops));
        pass = pass && (m > err);
        detail += fmt("b%d-b%d: %+.2f+-%.2f ", hi, lo, m, err);
    }
    record("AC2 monotone in beta", pass,
           detail + fmt("| SE(7)=%.1f SE(4)=%.1f SE(3)=%.1f SE(1)=%.1f", mean(se[7]),
                        mean(se[4]), mean(se[3]), mean(se[1])));
}

// --------------------------------------------------------------------------
// AC3: scheme ordering and the 10%/20% claims at beta=4.
// --------------------------------------------------------------------------
void criterion3() {
    const int beta = 4;
    struct Point {
        int K, M, R, drops;
    };
    const std::vector<Point> points{
        {10, 100, 300, 6}, {10, 200, 300, 6}, {30, 200, 200, 5}};
    const std::vector<Scheme> schemes{Scheme::MMMSE, Scheme::SMMSE, Scheme::MZF,
                                      Scheme::MF};
    std::map<std::tuple<int, int, Scheme>, double> se;
    for (const auto& pt : points) {
        std::map<Scheme, std::vector<double>> per_drop;
        for (int d = 0; d < pt.drops; ++d) {
            const auto ds = scenario_for(pt.K, beta, d);
            const auto mc = mc_eval(ds, pt.M, beta, pt.R, schemes, d);
            for (const auto& r : mc) per_drop[r.scheme].push_back(r.report.sum_se_avg);
            progress(fmt("AC3 K=%d M=%d drop %d/%d", pt.K, pt.M, d + 1, pt.drops));
        }
        for (const auto& [s, v] : per_drop) se[{pt.K, pt.M, s}] = mean(v);
    }
    const double ratio10 = se[{10, 200, Scheme::MMMSE}] / se[{10, 200, Scheme::SMMSE}];
    const double ratio30 = se[{30, 200, Scheme::MMMSE}] / se[{30, 200, Scheme::SMMSE}];
    record("AC3 M-MMSE vs S-MMSE K=10", ratio10 >= 1.05,
           fmt("ratio %.3f (>= 1.05) at M=200", ratio10));
    record("AC3 M-MMSE vs S-MMSE K=30", ratio30 >= 1.12,
           fmt("ratio %.3f (>= 1.12) at M=200", ratio30));
    bool mf_lowest = true;
    std::string detail;
    for (const auto& pt : points) {
        const double mf = se[{pt.K, pt.M, Scheme::MF}];
        for (Scheme s : {Scheme::MMMSE, Scheme::SMMSE, Scheme::MZF})
            mf_lowest = mf_lowest && (mf < se[{pt.K, pt.M, s}]);
        detail += fmt("K=%d M=%d: mf %.1f mmse %.1f smmse %.1f zf %.1f | ", pt.K, pt.M,
                      mf, se[{pt.K, pt.M, Scheme::MMMSE}],
                      se[{pt.K, pt.M, Scheme::SMMSE}], se[{pt.K, pt.M, Scheme::MZF}]);
    }
    record("AC3 MF strictly lowest", mf_lowest, detail);
}

// --------------------------------------------------------------------------
// AC4: M-ZF collapses from K=50 to K=90 under best-beta selection while
// M-MMSE keeps growing (DE for M-MMSE per the Fig.-3 protocol, MC for M-ZF).
// --------------------------------------------------------------------------
void criterion4() {
    const int M = 200, R = 100, drops = 4;
    auto zf_best = [&](int K, const std::vector<int>& betas) {
        std::map<int, std::vector<double>> se;
        for (int d = 0; d < drops; ++d)
            for (int beta : betas) {
                const auto ds = scenario_for(K, beta, d);
                se[beta].push_back(
                    mc_eval(ds, M, beta, R, {Scheme::MZF}, d)[0].report.sum_se_avg);
                progress(fmt("AC4 m-zf K=%d beta=%d drop %d/%d", K, beta, d + 1, drops));
            }
        double best = 0.0;
        for (auto& [b, v] : se) best = std::max(best, median(v));
        return best;
    };
    auto mmse_best = [&](int K, const std::vector<int>& betas) {
        std::map<int, std::vector<double>> se;
        for (int d = 0; d < drops; ++d)
            for (int beta : betas)
                se[beta].push_back(de_sum_se(scenario_for(K, beta, d), M));
        double best = 0.0;
        for (auto& [b, v] : se) best = std::max(best, median(v));
        return best;
    };
    // feasibility at M=200, S=500: m-zf needs M > B; beta=7 exceeds S at K=90
    const double zf50 = zf_best(50, {1, 3});
    const double zf90 = zf_best(90, {1});
    const double mm50 = mmse_best(50, {1, 3, 4, 7});
    const double mm90 = mmse_best(90, {1, 3, 4});
    record("AC4 M-ZF collapse", zf90 < zf50,
           fmt("m-zf sum SE: K=90 %.1f < K=50 %.1f", zf90, zf50));
    record("AC4 M-MMSE keeps growing", mm90 > mm50,
           fmt("m-mmse sum SE: K=90 %.1f > K=50 %.1f", mm90, mm50));
}

// --------------------------------------------------------------------------
// AC5: best-beta table from the deterministic equivalent at M=200.
// --------------------------------------------------------------------------
void criterion5() {
    const int M = 200, drops = 10;
    auto best_beta = [&](int K, const std::vector<int>& betas) {
        int best = 0;
        double best_se = -1.0;
        for (int beta : betas) {
            std::vector<double> v;
            for (int d = 0; d < drops; ++d)
                v.push_back(de_sum_se(scenario_for(K, beta, d), M));
            const double m = median(v);
            if (m > best_se) {
                best_se = m;
                best = beta;
            }
        }
        return std::pair<int, double>(best, best_se);
    };
    const auto [b10, se10] = best_beta(10, {1, 3, 4, 7});
    const auto [b120, se120] = best_beta(120, {1, 3, 4});  // beta=7 exceeds S
    record("AC5 best beta K=10", b10 == 7,
           fmt("best beta %d (expect 7), SE %.1f", b10, se10));
    record("AC5 best beta K=120", b120 == 1,
           fmt("best beta %d (expect 1), SE %.1f", b120, se120));
}

// --------------------------------------------------------------------------
// AC6: RMT oracle suite.
// --------------------------------------------------------------------------
void criterion6() {
    OracleReport rep;
    check_rmt_oracles(rep, kSeed, 2000);
    record("AC6a Thm1 MC oracle", rep.checks[0].pass,
           fmt("gap %.3f%% (< 2%%) at M=64 B=16, 2000 samples",
               100 * rep.checks[0].measured));
    record("AC6b Thm2 MC oracle", rep.checks[1].pass,
           fmt("gap %.3f%% (< 3%%)", 100 * rep.checks[1].measured));
    OracleReport dual;
    check_dual_path(dual, kSeed);
    record("AC6c scalar vs general path", dual.checks[0].pass,
           fmt("worst relative difference %.2e (<= 1e-9)", dual.checks[0].measured));
    OracleReport golden;
    check_golden_ratio(golden);
    record("AC6d golden-ratio fixed point", golden.checks[0].pass,
           fmt("|delta - (sqrt(5)-1)/2| = %.2e (<= 1e-10)", golden.checks[0].measured));
}

// --------------------------------------------------------------------------
// AC7: estimation suite (moments at 3 sigma, collinearity, sum rule).
// --------------------------------------------------------------------------
void criterion7() {
    OracleReport rep;
    check_estimation_moments(rep, kSeed, 10000);
    record("AC7 estimate covariance", rep.checks[0].pass,
           fmt("z-score %.2f (<= 3) at 1e4 samples", rep.checks[0].measured));
    record("AC7 MMSE orthogonality", rep.checks[1].pass,
           fmt("z-score %.2f (<= 3)", rep.checks[1].measured));

    const auto ds = scenario_for(4, 1, 0);
    Xoshiro256pp rng(derive_seed(kSeed, 7));
    double worst = 0.0;
    double worst_sum = 0.0;
    for (int r = 0; r < 10; ++r) {
        const auto ch = draw_channels(ds.drop, 8, rng);
        const auto est = observe_and_estimate(ch, ds.drop, ds.alloc, ds.state.powers,
                                              ds.state.alpha, rng);
        const int b = ds.alloc.pilot(0, 0);
        int l2 = -1, k2 = -1;
        for (int l = 1; l < 19 && l2 < 0; ++l)
            for (int k = 0; k < 4; ++k)
                if (ds.alloc.pilot(l, k) == b) {
                    l2 = l;
                    k2 = k;
                    break;
                }
        const auto h1 = user_estimate(est, ds.drop, ds.alloc, ds.state.powers, 2, 0, 0);
        const auto h2 =
            user_estimate(est, ds.drop, ds.alloc, ds.state.powers, 2, l2, k2);
        const double ratio = estimate_scale(ds.drop, ds.state.powers, 2, 0, 0) /
                             estimate_scale(ds.drop, ds.state.powers, 2, l2, k2);
        worst = std::max(worst, (h1 - ratio * h2).norm() / h1.norm());
        for (int j = 0; j < 19; ++j)
            for (int l = 0; l < 19; ++l)
                for (int k = 0; k < 4; ++k) {
                    const double err = error_variance(ds.drop, ds.alloc, ds.state.powers,
                                                      ds.state.alpha, j, l, k);
                    const double est_v = estimate_variance(
                        ds.drop, ds.alloc, ds.state.powers, ds.state.alpha, j, l, k);
                    worst_sum = std::max(worst_sum,
                                         std::abs(err + est_v - ds.drop.gain(j, l, k)) /
                                             ds.drop.gain(j, l, k));
                }
    }
    record("AC7 same-pilot collinearity", worst <= 1e-12,
           fmt("worst relative deviation %.2e (exact per realization)", worst));
    record("AC7 variance sum rule", worst_sum <= 1e-12,
           fmt("worst |err+est-d|/d = %.2e (exact)", worst_sum));
}

// --------------------------------------------------------------------------
// AC8: M-ZF nulling per realization at production scale (M=50, B=40).
// --------------------------------------------------------------------------
void criterion8() {
    const auto ds = scenario_for(10, 4, 0);
    Xoshiro256pp rng(derive_seed(kSeed, 8));
    double worst = 0.0;
    for (int r = 0; r < 20; ++r) {
        const auto ch = draw_channels(ds.drop, 50, rng);
        const auto est = observe_and_estimate(ch, ds.drop, ds.alloc, ds.state.powers,
                                              ds.state.alpha, rng);
        for (int j = 0; j < 19; ++j) {
            const auto G = m_zf_directions(est, ds.drop, ds.alloc, j);
            for (int k = 0; k < 10; ++k)
                for (int b = 0; b < est.B; ++b) {
                    if (b == ds.alloc.pilot(j, k)) continue;
                    worst = std::max(worst,
                                     std::abs(est.h_dir[j].col(b).dot(G.col(k))) /
                                         (est.h_dir[j].col(b).norm() * G.col(k).norm()));
                }
        }
    }
    record("AC8 ZF nulling", worst <= 1e-9,
           fmt("worst relative leakage %.2e (<= 1e-9), 20 realizations M=50 B=40",
               worst));
}

// --------------------------------------------------------------------------
// AC9: byte-identical result CSVs for identical config and master seed.
// --------------------------------------------------------------------------
void criterion9() {
    const auto dir = std::filesystem::temp_directory_path() / "mmimo_acceptance";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    ExperimentConfig c =
        config_from_json(json{{"M", {32}},
                              {"K", {4}},
                              {"beta", {3}},
                              {"schemes", {"mf", "s-mmse", "m-zf", "m-mmse"}},
                              {"n_drops", 2},
                              {"n_realizations", 40},
                              {"master_seed", 20260810}});
    std::ostringstream sink;
    c.output_path = (dir / "run1").string();
    const auto out1 = run_experiment(c, sink);
    c.output_path = (dir / "run2").string();
    const auto out2 = run_experiment(c, sink);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const bool same = slurp(out1.csv_path) == slurp(out2.csv_path);
    record("AC9 determinism", same && !out1.rows.empty(),
           fmt("two runs, %zu rows each, CSVs byte-identical: %s", out1.rows.size(),
               same ? "yes" : "NO"));
    std::filesystem::remove_all(dir);
}

// --------------------------------------------------------------------------
// Fig. 4 qualitative: beta_f = 0 best at K=10, some beta_f > 0 best at K=90
// (DE-based, reduced drops; no tight tolerance imposed).
// --------------------------------------------------------------------------
void figure4_qualitative() {
    const int M = 200, drops = 10;
    ExperimentConfig defaults;
    auto best_bf = [&](int K) {
        double best_se = -1.0;
        double best_bf_val = 0.0;
        for (double bf : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            std::vector<double> v;
            for (int d = 0; d < drops; ++d) {
                double se_best_beta = -1.0;
                for (int beta : {1, 3, 4, 7}) {
                    if (pilot_count(K, beta, bf) > kS) continue;
                    const auto ds = make_drop_scenario(net(), defaults, K, beta, bf,
                                                       drop_seed(K, d));
                    se_best_beta = std::max(se_best_beta, de_sum_se(ds, M));
                }
                v.push_back(se_best_beta);
            }
            const double m = median(v);
            if (m > best_se) {
                best_se = m;
                best_bf_val = bf;
            }
        }
        return best_bf_val;
    };
    const double bf10 = best_bf(10);
    const double bf90 = best_bf(90);
    record("Fig4 beta_f qualitative", bf10 == 0.0 && bf90 > 0.0,
           fmt("best beta_f: K=10 -> %.1f (expect 0), K=90 -> %.1f (expect > 0)", bf10,
               bf90));
}

}  // namespace

int main() {
    g_t0 = std::chrono::steady_clock::now();
    try {
        criterion6();
        criterion7();
        criterion8();
        criterion5();
        figure4_qualitative();
        criterion9();
        criterion2();
        criterion3();
        criterion4();
        criterion1();
    } catch (const std::exception& e) {
        record("suite aborted", false, e.what());
    }
    std::printf("%s\n", g_failures == 0
                            ? "acceptance: ALL PASS"
                            : fmt("acceptance: %d FAILURES", g_failures).c_str());
    return g_failures == 0 ? 0 : 1;
}
