// gw-electric: command-line front end.
//
//   gw-electric <subcommand> --config path [--seed u64] [--out dir]
//
// Subcommands: constants, simulate-tree, pool, fit-expansion, lambda,
// oracle-check, report. GW_ELECTRIC_THREADS caps worker threads.
// Exit codes: 0 success, 2 configuration error, 3 budget error, 1 otherwise.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "gwel/constants.hpp"
#include "gwel/errors.hpp"
#include "gwel/harness.hpp"
#include "gwel/oracle.hpp"
#include "gwel/report.hpp"

namespace {

using gwel::ExperimentConfig;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    // repeated occurrences are conflicting overrides, not "last one wins"
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    cmd->add_option("--seed", args.seed, "override the master seed")
        ->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    cmd->add_option("--out", args.out_dir, "override the output directory")
        ->multi_option_policy(CLI::MultiOptionPolicy::Throw);
}

ExperimentConfig load_with_overrides(const CommonArgs& args, const char* expected_mode) {
    ExperimentConfig cfg = gwel::load_config_file(args.config_path);
    if (expected_mode && cfg.mode != expected_mode)
        throw gwel::InvalidConfig("config mode '" + cfg.mode + "' does not match subcommand '" +
                                  expected_mode + "'");
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.raw["seed"] = *args.seed; // overrides participate in the run id
    }
    if (args.out_dir) cfg.out_dir = *args.out_dir;
    if (cfg.out_dir.empty()) cfg.out_dir = "results";
    return cfg;
}

int run_mode_command(const CommonArgs& args, const char* expected_mode) {
    const ExperimentConfig cfg = load_with_overrides(args, expected_mode);
    const gwel::RunOutput out = gwel::run_experiment(cfg);
    const std::string dir = gwel::write_run(out, cfg.out_dir, cfg.raw);
    std::cout << "run " << out.id << " written to " << dir << "\n";
    return 0;
}

int cmd_constants(const CommonArgs& args) {
    const ExperimentConfig cfg = load_with_overrides(args, nullptr);
    const auto& off = cfg.offspring;
    const auto& res = cfg.resistance;
    const auto k = gwel::expansion_constants(off, res);
    const double w2 = gwel::w_second_moment(off);
    const bool dubuc = gwel::dubuc_condition(off);

    auto row = [](const char* name, double value, const char* note = "") {
        std::printf("  %-22s %- .15g  %s\n", name, value, note);
    };
    std::printf("model constants\n");
    row("m", off.mean());
    row("p1*m", off.p1() * off.mean(), dubuc ? "(E[1/W] finite)" : "(E[1/W] = infinity)");
    row("a1", k.a1);
    row("a2", k.a2);
    row("b1 = E[xi]", k.b1);
    row("b2 = E[xi^2]", k.b2);
    row("E[xi^-1]", res.mean_inv_xi());
    row("E[W^2]", w2);
    row("c1", k.c1);
    row("c2", k.c2);
    row("c3", k.c3);
    row("c4", k.c4);

    nlohmann::json j = {{"m", off.mean()},
                        {"p1_m", off.p1() * off.mean()},
                        {"dubuc", dubuc},
                        {"a1", k.a1},
                        {"a2", k.a2},
                        {"b1", k.b1},
                        {"b2", k.b2},
                        {"inv_xi_mean", res.mean_inv_xi()},
                        {"w_second_moment", w2},
                        {"c1", k.c1},
                        {"c2", k.c2},
                        {"c3", k.c3},
                        {"c4", k.c4}};
    if (off.is_deterministic()) {
        // closed-form specialization check
        const double c4_det = k.b1 - k.b2 / k.b1;
        std::printf("deterministic offspring specialization\n");
        row("c2 - 1", k.c2 - 1.0);
        row("c3", k.c3);
        row("c4 - (b1 - b2/b1)", k.c4 - c4_det);
        j["det_specialization"] = {{"c2_minus_1", k.c2 - 1.0},
                                   {"c3", k.c3},
                                   {"c4_residual", k.c4 - c4_det}};
    }

    std::string out_dir = args.out_dir.value_or(cfg.out_dir.empty() ? "results" : cfg.out_dir);
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "constants.json";
    std::ofstream(path) << j.dump(2) << "\n";
    std::cout << "constants written to " << path.string() << "\n";
    return 0;
}

int cmd_oracle_check(const CommonArgs& args, const std::string& network_path, int source,
                     const std::vector<int>& sinks, std::uint64_t walk_trials) {
    if (!network_path.empty()) {
        // standalone explicit-network check, one edge per line: "u v r"
        std::ifstream in(network_path);
        if (!in) throw gwel::InvalidConfig("cannot open network file '" + network_path + "'");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (sinks.empty())
            throw gwel::InvalidConfig("--sink is required together with --network");
        const gwel::ExplicitNetwork net = gwel::parse_network(text, source, sinks);
        const double r = gwel::effective_resistance_laplacian(net);
        std::printf("R(source <-> sinks) = %.15g\n", r);
        std::printf("C(source <-> sinks) = %.15g\n", 1.0 / r);
        if (walk_trials > 0) {
            const auto walk = gwel::random_walk_conductance(net, walk_trials, 1);
            std::printf("walk estimate       = %.15g +/- %.3g (%llu trials)\n",
                        walk.conductance, walk.se,
                        static_cast<unsigned long long>(walk.trials));
        }
        return 0;
    }
    return run_mode_command(args, "oracle");
}

int dispatch(int argc, char** argv) {
    CLI::App app{"branching random electric network toolkit"};
    app.require_subcommand(1);

    CommonArgs constants_args;
    auto* constants = app.add_subcommand("constants", "print and save the model constants");
    add_common(constants, constants_args);

    CommonArgs tree_args;
    auto* tree = app.add_subcommand("simulate-tree", "sample trees and aggregate observables");
    add_common(tree, tree_args);

    CommonArgs pool_args;
    auto* pool = app.add_subcommand("pool", "run the particle-pool moment trajectory");
    add_common(pool, pool_args);

    CommonArgs fit_args;
    auto* fit = app.add_subcommand("fit-expansion",
                                   "pool trajectory plus c0 estimate and log-correction fit");
    add_common(fit, fit_args);

    CommonArgs lambda_args;
    auto* lambda = app.add_subcommand("lambda", "supercritical weighting (lambda > m)");
    add_common(lambda, lambda_args);

    CommonArgs oracle_args;
    auto* oracle = app.add_subcommand("oracle-check", "cross-check engine against the oracles");
    std::string network_path;
    int source = 0;
    std::vector<int> sinks;
    std::uint64_t walk_trials = 0;
    oracle->add_option("--config", oracle_args.config_path, "experiment config (JSON)")
        ->expected(1);
    oracle->add_option("--seed", oracle_args.seed, "override the master seed")->expected(1);
    oracle->add_option("--out", oracle_args.out_dir, "override the output directory")
        ->expected(1);
    oracle->add_option("--network", network_path, "explicit network file (u v r per line)")
        ->expected(1);
    oracle->add_option("--source", source, "source vertex for --network")->expected(1);
    oracle->add_option("--sink", sinks, "sink vertices for --network");
    oracle->add_option("--walk-trials", walk_trials, "random-walk trials for --network")
        ->expected(1);

    auto* report = app.add_subcommand("report", "render markdown/CSV/SVG for finished runs");
    std::vector<std::string> run_dirs;
    std::string report_out = "report";
    report->add_option("--run", run_dirs, "run directory (<out>/<id>), repeatable")
        ->required();
    report->add_option("--out", report_out, "report output directory")->expected(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // unknown flags, missing options etc. are configuration errors
        return code == 0 ? 0 : 2;
    }

    if (constants->parsed()) return cmd_constants(constants_args);
    if (tree->parsed()) return run_mode_command(tree_args, "tree");
    if (pool->parsed()) return run_mode_command(pool_args, "pool");
    if (fit->parsed()) {
        const ExperimentConfig probe = load_with_overrides(fit_args, "pool");
        if (probe.c0_cutoff <= 0 && probe.fit_hi <= 0)
            throw gwel::InvalidConfig(
                "fit-expansion needs 'c0_cutoff' and/or 'fit_range' in the config");
        return run_mode_command(fit_args, "pool");
    }
    if (lambda->parsed()) return run_mode_command(lambda_args, "lambda");
    if (oracle->parsed()) {
        if (network_path.empty() && oracle_args.config_path.empty())
            throw gwel::InvalidConfig("oracle-check needs --config or --network");
        return cmd_oracle_check(oracle_args, network_path, source, sinks, walk_trials);
    }
    if (report->parsed()) {
        const gwel::ReportFiles files = gwel::build_report(run_dirs);
        gwel::write_report(files, report_out);
        std::cout << "report written to " << report_out << "\n";
        return 0;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const gwel::BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 3;
    } catch (const gwel::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
