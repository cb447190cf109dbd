#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmimo/mc_eval.hpp"
#include "mmimo/rmt.hpp"

namespace mmimo {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Defaults reproduce the standard setup: r=500 m, kappa=3.7, 5 dB shadow
// fading standard deviation (sigma_sf_sq = 25 dB^2), S=500, uplink SNR 0 dB,
// downlink cell-edge SNR -3 dB.
struct ExperimentConfig {
    std::vector<int> M{100};
    std::vector<int> K{10};
    std::vector<int> beta{4};
    std::vector<double> beta_f{0.0};
    std::vector<std::string> schemes{"m-mmse"};
    int S = 500;
    double r = 500.0;
    double kappa = 3.7;
    double sigma_sf_sq = 25.0;
    double rho_ul_db = 0.0;
    double edge_snr_db = -3.0;
    double sigma2 = 1.0;
    int n_drops = 50;
    int n_realizations = 1000;
    std::uint64_t master_seed = 1;
    std::string output_path = "results";
    int threads = 0;
};

inline ExperimentConfig config_from_json(const json& doc) {
    static const std::vector<std::string> known = {
        "M", "K", "beta", "beta_f", "schemes", "S", "r", "kappa", "sigma_sf_sq",
        "rho_ul_db", "edge_snr_db", "sigma2", "n_drops", "n_realizations",
        "master_seed", "output_path", "threads"};
    for (const auto& [key, _] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key: " + key);
    ExperimentConfig c;
    auto load = [&](const char* key, auto& field) {
        if (doc.contains(key)) doc.at(key).get_to(field);
    };
    load("M", c.M);
    load("K", c.K);
    load("beta", c.beta);
    load("beta_f", c.beta_f);
    load("schemes", c.schemes);
    load("S", c.S);
    load("r", c.r);
    load("kappa", c.kappa);
    load("sigma_sf_sq", c.sigma_sf_sq);
    load("rho_ul_db", c.rho_ul_db);
    load("edge_snr_db", c.edge_snr_db);
    load("sigma2", c.sigma2);
    load("n_drops", c.n_drops);
    load("n_realizations", c.n_realizations);
    load("master_seed", c.master_seed);
    load("output_path", c.output_path);
    load("threads", c.threads);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(doc);
}

inline int pilot_count(int K, int beta, double beta_f) {
    return static_cast<int>(std::lround(K * (beta_f + (1.0 - beta_f) * beta)));
}

inline bool scheme_feasible(const std::string& scheme, int M, int B, int S) {
    if (B > S) return false;
    if (scheme == "m-zf" && M <= B) return false;
    return true;
}

struct SweepPoint {
    int index = 0;  // position in the full Cartesian grid, stable under skipping
    int M = 0;
    int K = 0;
    int beta = 0;
    double beta_f = 0.0;
    int B = 0;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
    std::vector<SweepPoint> pts;
    int idx = 0;
    for (int M : c.M)
        for (int K : c.K)
            for (int beta : c.beta)
                for (double bf : c.beta_f) {
                    pts.push_back({idx++, M, K, beta, bf, pilot_count(K, beta, bf)});
                }
    return pts;
}

// Structured validation; empty result means the config is runnable.
inline std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> errors;
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    };
    require(!c.M.empty(), "M list is empty");
    require(!c.K.empty(), "K list is empty");
    require(!c.beta.empty(), "beta list is empty");
    require(!c.beta_f.empty(), "beta_f list is empty");
    require(!c.schemes.empty(), "scheme list is empty");
    for (int m : c.M) require(m >= 1, "M must be >= 1");
    for (int k : c.K) require(k >= 1, "K must be >= 1");
    for (int b : c.beta)
        require(b == 1 || b == 3 || b == 4 || b == 7, "beta must be in {1,3,4,7}");
    for (double bf : c.beta_f) require(bf >= 0.0 && bf <= 1.0, "beta_f must be in [0,1]");
    for (const auto& s : c.schemes)
        require(s == "mf" || s == "s-mmse" || s == "m-zf" || s == "m-mmse" ||
                    s == "m-mmse-de",
                "unknown scheme: " + s);
    require(c.S >= 1, "S must be >= 1");
    require(c.r > 0.0, "r must be > 0");
    require(c.kappa > 2.0, "kappa must be > 2");
    require(c.sigma_sf_sq >= 0.0, "sigma_sf_sq must be >= 0");
    require(c.sigma2 > 0.0, "sigma2 must be > 0");
    require(c.n_drops >= 1, "n_drops must be >= 1");
    require(c.n_realizations >= 1, "n_realizations must be >= 1");
    for (int k : c.K)
        for (double bf : c.beta_f) {
            const double ck = bf * k;
            require(std::abs(ck - std::lround(ck)) <= 1e-9,
                    "beta_f*K must be an integer (K=" + std::to_string(k) +
                        ", beta_f=" + std::to_string(bf) + ")");
        }
    if (errors.empty()) {
        const auto pts = sweep_points(c);
        bool any_feasible = false;
        for (const auto& pt : pts)
            for (const auto& s : c.schemes)
                if (s == "m-mmse-de" ? pt.B <= c.S : scheme_feasible(s, pt.M, pt.B, c.S))
                    any_feasible = true;
        require(any_feasible, "no feasible (sweep point, scheme) combination");
        if (pts.size() == 1 && any_feasible)
            for (const auto& s : c.schemes)
                if (s != "m-mmse-de" && !scheme_feasible(s, pts[0].M, pts[0].B, c.S))
                    errors.push_back("scheme " + s + " infeasible at the requested point (B=" +
                                     std::to_string(pts[0].B) + ")");
    }
    return errors;
}

// One output row: the full config echo plus per-drop results, re-runnable
// from the row alone. Wall times live in the timing sidecar, keeping the
// CSV/JSON byte-identical across reruns.
struct ResultRow {
    std::string scheme;
    int M = 0, K = 0, beta = 0, B = 0, S = 0;
    double beta_f = 0.0;
    double r = 0.0, kappa = 0.0, sigma_sf_sq = 0.0;
    double rho_ul_db = 0.0, edge_snr_db = 0.0, sigma2 = 1.0;
    int n_realizations = 0;  // 0 for deterministic-equivalent rows
    int drop = 0;
    std::uint64_t drop_seed = 0;
    double sum_se_avg = 0.0;
    double sum_se_center = 0.0;
    double se_p5 = 0.0, se_p50 = 0.0, se_p95 = 0.0;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string csv_header() {
    return "scheme,M,K,beta,beta_f,B,S,r,kappa,sigma_sf_sq,rho_ul_db,edge_snr_db,"
           "sigma2,n_realizations,drop,drop_seed,sum_se_avg,sum_se_center,se_p5,"
           "se_p50,se_p95";
}

inline std::string to_csv(const ResultRow& w) {
    std::ostringstream os;
    os << w.scheme << ',' << w.M << ',' << w.K << ',' << w.beta << ','
       << format_double(w.beta_f) << ',' << w.B << ',' << w.S << ','
       << format_double(w.r) << ',' << format_double(w.kappa) << ','
       << format_double(w.sigma_sf_sq) << ',' << format_double(w.rho_ul_db) << ','
       << format_double(w.edge_snr_db) << ',' << format_double(w.sigma2) << ','
       << w.n_realizations << ',' << w.drop << ',' << w.drop_seed << ','
       << format_double(w.sum_se_avg) << ',' << format_double(w.sum_se_center) << ','
       << format_double(w.se_p5) << ',' << format_double(w.se_p50) << ','
       << format_double(w.se_p95);
    return os.str();
}

inline json to_json(const ResultRow& w) {
    return json{{"scheme", w.scheme},       {"M", w.M},
                {"K", w.K},                 {"beta", w.beta},
                {"beta_f", w.beta_f},       {"B", w.B},
                {"S", w.S},                 {"r", w.r},
                {"kappa", w.kappa},         {"sigma_sf_sq", w.sigma_sf_sq},
                {"rho_ul_db", w.rho_ul_db}, {"edge_snr_db", w.edge_snr_db},
                {"sigma2", w.sigma2},       {"n_realizations", w.n_realizations},
                {"drop", w.drop},           {"drop_seed", w.drop_seed},
                {"sum_se_avg", w.sum_se_avg}, {"sum_se_center", w.sum_se_center},
                {"se_p5", w.se_p5},         {"se_p50", w.se_p50},
                {"se_p95", w.se_p95}};
}

// Assembled per-drop inputs shared by both evaluation paths.
struct DropScenario {
    UserDrop drop;
    PilotAllocation alloc;
    ScenarioState state;
};

inline DropScenario make_drop_scenario(const NetworkGeometry& net, const ExperimentConfig& c,
                                       int K, int beta, double beta_f,
                                       std::uint64_t drop_seed) {
    DropScenario ds;
    ds.drop = make_drop(net, K, c.kappa, c.sigma_sf_sq, drop_seed);
    const auto coloring = reuse_coloring(net, beta);
    Xoshiro256pp alloc_rng(derive_seed(drop_seed, 0xa110c));
    ds.alloc = beta_f > 0.0
                   ? allocate_refined(net, coloring, ds.drop, K, beta, beta_f, alloc_rng)
                   : allocate_symmetric(coloring, K, beta, alloc_rng);
    ds.state = build_scenario(
        ds.drop, ds.alloc,
        make_power_profile(net, ds.drop, c.rho_ul_db, c.edge_snr_db, c.kappa, c.sigma2));
    return ds;
}

inline ResultRow row_from_report(const ExperimentConfig& c, const SweepPoint& pt,
                                 const std::string& scheme, int n_realizations, int drop,
                                 std::uint64_t drop_seed, const SEReport& rep) {
    ResultRow w;
    w.scheme = scheme;
    w.M = pt.M;
    w.K = pt.K;
    w.beta = pt.beta;
    w.beta_f = pt.beta_f;
    w.B = pt.B;
    w.S = c.S;
    w.r = c.r;
    w.kappa = c.kappa;
    w.sigma_sf_sq = c.sigma_sf_sq;
    w.rho_ul_db = c.rho_ul_db;
    w.edge_snr_db = c.edge_snr_db;
    w.sigma2 = c.sigma2;
    w.n_realizations = n_realizations;
    w.drop = drop;
    w.drop_seed = drop_seed;
    w.sum_se_avg = rep.sum_se_avg;
    w.sum_se_center = rep.sum_se_center;
    w.se_p5 = se_percentile(rep.se_per_user, 5.0);
    w.se_p50 = se_percentile(rep.se_per_user, 50.0);
    w.se_p95 = se_percentile(rep.se_per_user, 95.0);
    return w;
}

inline SEReport report_from_de(const DeterministicEquivalent& de, int L, int K, int B, int S) {
    SEReport rep;
    rep.cells = L;
    rep.users_per_cell = K;
    rep.prelog = 1.0 - static_cast<double>(B) / S;
    rep.sinr = de.eta_bar;
    rep.genie_sinr = de.eta_bar;
    rep.se_per_user.resize(de.eta_bar.size());
    rep.sum_se_cell.assign(L, 0.0);
    for (int j = 0; j < L; ++j)
        for (int k = 0; k < K; ++k) {
            rep.se_per_user[j * K + k] = rep.prelog * std::log2(1.0 + de.eta_bar[j * K + k]);
            rep.sum_se_cell[j] += rep.se_per_user[j * K + k];
        }
    for (int j = 0; j < L; ++j) rep.sum_se_avg += rep.sum_se_cell[j];
    rep.sum_se_avg /= L;
    rep.sum_se_center = rep.sum_se_cell[0];
    return rep;
}

struct RunOutput {
    std::vector<ResultRow> rows;
    std::filesystem::path csv_path;
    std::filesystem::path json_path;
    std::filesystem::path timing_path;
};

// Executes the sweep. Deterministic given (config, master_seed): sub-seeds
// derive from (master_seed, sweep-point index, drop index), so results are
// reproducible row by row. Output order: sweep point, drop, scheme, DE last.
inline RunOutput run_experiment(const ExperimentConfig& c, std::ostream& log) {
    const auto errors = validate_config(c);
    if (!errors.empty()) {
        std::string all = "invalid config:";
        for (const auto& e : errors) all += "\n  - " + e;
        throw ConfigError(all);
    }
    const NetworkGeometry net = build_hex_network(c.r);

    std::vector<std::string> mc_schemes;
    bool want_de = false;
    for (const auto& s : c.schemes) {
        if (s == "m-mmse-de") want_de = true;
        else mc_schemes.push_back(s);
        if (s == "m-mmse") want_de = true;
    }

    RunOutput out;
    std::vector<double> wall_ms;
    for (const SweepPoint& pt : sweep_points(c)) {
        std::vector<Scheme> active;
        for (const auto& s : mc_schemes) {
            if (scheme_feasible(s, pt.M, pt.B, c.S)) active.push_back(parse_scheme(s));
            else
                log << "skip: scheme " << s << " infeasible at M=" << pt.M << " K=" << pt.K
                    << " beta=" << pt.beta << " beta_f=" << pt.beta_f << " (B=" << pt.B
                    << ")\n";
        }
        const bool de_here = want_de && pt.B <= c.S;
        if (active.empty() && !de_here) continue;

        for (int drop = 0; drop < c.n_drops; ++drop) {
            const std::uint64_t drop_seed =
                derive_seed(c.master_seed, static_cast<std::uint64_t>(pt.index),
                            static_cast<std::uint64_t>(drop));
            const auto t0 = std::chrono::steady_clock::now();
            const DropScenario ds = make_drop_scenario(net, c, pt.K, pt.beta, pt.beta_f,
                                                       drop_seed);
            if (!active.empty()) {
                McOptions opt;
                opt.realizations = c.n_realizations;
                opt.seed = derive_seed(drop_seed, 0x5eed);
                opt.threads = c.threads;
                const auto results =
                    run_monte_carlo(ds.drop, ds.alloc, ds.state, pt.M, active, c.S, opt);
                for (const auto& res : results)
                    out.rows.push_back(row_from_report(c, pt, scheme_name(res.scheme),
                                                       c.n_realizations, drop, drop_seed,
                                                       res.report));
            }
            if (de_here) {
                const auto de = large_scale_sinr(ds.drop, ds.alloc, ds.state, pt.M);
                const auto rep =
                    report_from_de(de, ds.drop.cells, pt.K, ds.alloc.B, c.S);
                out.rows.push_back(
                    row_from_report(c, pt, "m-mmse-de", 0, drop, drop_seed, rep));
            }
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            while (wall_ms.size() < out.rows.size()) wall_ms.push_back(ms);
            log << "point " << pt.index << " drop " << drop << " done (" << ms << " ms)\n";
        }
    }

    // Resolve output paths; MMIMO_OUTPUT_DIR overrides the directory part.
    std::filesystem::path base(c.output_path);
    if (const char* dir = std::getenv("MMIMO_OUTPUT_DIR"))
        base = std::filesystem::path(dir) / base.filename();
    if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
    out.csv_path = base;
    out.csv_path += ".csv";
    out.json_path = base;
    out.json_path += ".json";
    out.timing_path = base;
    out.timing_path += ".timing.json";

    std::ofstream csv(out.csv_path);
    csv << csv_header() << '\n';
    for (const auto& w : out.rows) csv << to_csv(w) << '\n';

    json mirror = json::array();
    for (const auto& w : out.rows) mirror.push_back(to_json(w));
    std::ofstream(out.json_path) << mirror.dump(1) << '\n';

    json timing = json::array();
    for (std::size_t i = 0; i < out.rows.size(); ++i)
        timing.push_back({{"row", i}, {"wall_ms", wall_ms[i]}});
    std::ofstream(out.timing_path) << timing.dump(1) << '\n';
    return out;
}

// ---------------------------------------------------------------------------
// best-beta selection (Fig.-3-style protocol)
// ---------------------------------------------------------------------------

struct BestBetaEntry {
    std::string scheme;
    int K = 0;
    int best_beta = 0;
    double sum_se = 0.0;  // median over drops of the all-cell average
};

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Picks, per (scheme, K), the beta maximizing the median sum SE; ties go to
// the smaller beta (lower pilot overhead).
inline std::vector<BestBetaEntry> sweep_best_beta(const std::vector<ResultRow>& rows) {
    std::map<std::pair<std::string, int>, std::map<int, std::vector<double>>> grouped;
    for (const auto& w : rows) grouped[{w.scheme, w.K}][w.beta].push_back(w.sum_se_avg);
    std::vector<BestBetaEntry> table;
    for (const auto& [key, by_beta] : grouped) {
        BestBetaEntry e;
        e.scheme = key.first;
        e.K = key.second;
        e.best_beta = 0;
        for (const auto& [beta, values] : by_beta) {
            const double m = median(values);
            if (e.best_beta == 0 || m > e.sum_se) {
                e.best_beta = beta;
                e.sum_se = m;
            }
        }
        table.push_back(e);
    }
    return table;
}

inline std::vector<ResultRow> read_result_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open results file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != csv_header())
        throw ConfigError("unrecognized results CSV header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 21) throw ConfigError("malformed results row: " + line);
        ResultRow w;
        w.scheme = f[0];
        w.M = std::stoi(f[1]);
        w.K = std::stoi(f[2]);
        w.beta = std::stoi(f[3]);
        w.beta_f = std::stod(f[4]);
        w.B = std::stoi(f[5]);
        w.S = std::stoi(f[6]);
        w.r = std::stod(f[7]);
        w.kappa = std::stod(f[8]);
        w.sigma_sf_sq = std::stod(f[9]);
        w.rho_ul_db = std::stod(f[10]);
        w.edge_snr_db = std::stod(f[11]);
        w.sigma2 = std::stod(f[12]);
        w.n_realizations = std::stoi(f[13]);
        w.drop = std::stoi(f[14]);
        w.drop_seed = std::stoull(f[15]);
        w.sum_se_avg = std::stod(f[16]);
        w.sum_se_center = std::stod(f[17]);
        w.se_p5 = std::stod(f[18]);
        w.se_p50 = std::stod(f[19]);
        w.se_p95 = std::stod(f[20]);
        rows.push_back(w);
    }
    return rows;
}

}  // namespace mmimo
