// Experiment runner for the multi-cell massive MIMO downlink simulator.
//
// Verbs:
//   run <config.json>      execute the sweep, write CSV/JSON results
//   validate [config.json] run the built-in oracle suite (and check a config)
//   best-beta <results.csv> per-(scheme, K) best pilot reuse factor
//   dump-geometry [r]      emit the wrap-around layout as JSON
//
// Exit codes: 0 ok, 1 validation error, 2 numerical failure.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "mmimo/oracles.hpp"

namespace {

int cmd_run(const std::string& config_path) {
    const mmimo::ExperimentConfig cfg = mmimo::load_config(config_path);
    const auto out = mmimo::run_experiment(cfg, std::cout);
    std::cout << out.rows.size() << " rows -> " << out.csv_path.string() << ", "
              << out.json_path.string() << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path, int threads) {
    if (!config_path.empty()) {
        const mmimo::ExperimentConfig cfg = mmimo::load_config(config_path);
        const auto errors = mmimo::validate_config(cfg);
        if (!errors.empty()) {
            std::cout << "config: INVALID\n";
            for (const auto& e : errors) std::cout << "  - " << e << "\n";
            return 1;
        }
        std::cout << "config: ok (" << mmimo::sweep_points(cfg).size()
                  << " sweep points)\n";
    }
    mmimo::ValidateOptions opt;
    opt.threads = threads;
    const auto report = mmimo::run_oracle_suite(opt);
    for (const auto& chk : report.checks)
        std::printf("%-28s %-4s measured=%.3e threshold=%.3e\n", chk.name.c_str(),
                    chk.pass ? "PASS" : "FAIL", chk.measured, chk.threshold);
    std::cout << (report.all_pass ? "oracle suite: PASS" : "oracle suite: FAIL") << "\n";
    return 0;
}

int cmd_best_beta(const std::string& results_path) {
    const auto rows = mmimo::read_result_csv(results_path);
    const auto table = mmimo::sweep_best_beta(rows);
    std::cout << "scheme,K,best_beta,sum_se\n";
    for (const auto& e : table)
        std::cout << e.scheme << ',' << e.K << ',' << e.best_beta << ','
                  << mmimo::format_double(e.sum_se) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-cell massive MIMO downlink simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string results_path;
    std::string validate_config_path;
    double dump_radius = 500.0;
    int threads = 0;

    auto* run = app.add_subcommand("run", "execute a sweep from a JSON config");
    run->add_option("config", config_path, "config JSON path")->required();

    auto* validate = app.add_subcommand("validate", "run the built-in oracle suite");
    validate->add_option("config", validate_config_path, "optional config to check");
    validate->add_option("--threads", threads, "worker threads (0 = auto)");

    auto* best = app.add_subcommand("best-beta", "best reuse factor per (scheme, K)");
    best->add_option("results", results_path, "results CSV path")->required();

    auto* dump = app.add_subcommand("dump-geometry", "emit the 19-cell layout as JSON");
    dump->add_option("radius", dump_radius, "cell radius in meters");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path);
        if (validate->parsed()) return cmd_validate(validate_config_path, threads);
        if (best->parsed()) return cmd_best_beta(results_path);
        if (dump->parsed()) {
            std::cout << mmimo::geometry_to_json(mmimo::build_hex_network(dump_radius))
                             .dump(1)
                      << "\n";
            return 0;
        }
    } catch (const mmimo::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
