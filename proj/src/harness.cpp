#include "gwel/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "gwel/errors.hpp"
#include "gwel/parallel.hpp"
#include "gwel/rng.hpp"
#include "gwel/stats.hpp"

namespace gwel {

namespace {

constexpr std::size_t kMinDiagnosticTrees = 300;

double checked_rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

// Re-throws the in-flight module error with replica context, preserving the
// category so CLI exit codes survive.
[[noreturn]] void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const BudgetError& e) {
        throw BudgetError(context + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(context + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(context + ": " + e.what());
    }
}

} // namespace

std::vector<double> TreeDepthSamples::norm_c() const {
    std::vector<double> out(c.size());
    for (std::size_t t = 0; t < c.size(); ++t) out[t] = c[t] / x_hat;
    return out;
}

std::vector<double> TreeDepthSamples::n_y() const {
    std::vector<double> out(c.size());
    for (std::size_t t = 0; t < c.size(); ++t)
        out[t] = static_cast<double>(depth) * (c[t] / x_hat - w_hat[t]);
    return out;
}

TreeModeResult run_tree_mode(const ExperimentConfig& cfg) {
    TreeModeResult result;
    TreeOptions opts;
    opts.node_budget = cfg.node_budget;
    if (cfg.fluct_L > 0) {
        const auto consts = expansion_constants(cfg.offspring, cfg.resistance);
        opts.fluct_L = cfg.fluct_L;
        opts.c1 = consts.c1;
        result.fluct_c1 = consts.c1;
    }

    for (std::size_t d = 0; d < cfg.depths.size(); ++d) {
        const int n = cfg.depths[d];
        TreeDepthSamples samples;
        samples.depth = n;
        samples.c.resize(cfg.trees);
        samples.w_hat.resize(cfg.trees);
        samples.thomson.resize(cfg.trees);
        samples.nash.resize(cfg.trees);
        if (cfg.fluct_L > 0) samples.fluct.resize(cfg.trees);

        parallel_for_each(cfg.trees, [&](std::uint64_t t) {
            try {
                const std::uint64_t tree_seed = rng::derive_seed(cfg.seed, d, t);
                const TreeObservables obs =
                    sample_tree_observables(cfg.offspring, cfg.resistance, n, opts, tree_seed);
                samples.c[t] = obs.c_n;
                samples.w_hat[t] = obs.w_hat;
                samples.thomson[t] = obs.thomson_upper;
                samples.nash[t] = obs.nash_williams_lower;
                if (cfg.fluct_L > 0) samples.fluct[t] = obs.fluct_series;
            } catch (...) {
                rethrow_with_context("depth " + std::to_string(n) + ", tree " +
                                     std::to_string(t));
            }
        });

        samples.x_hat = stats::mean(samples.c);
        result.per_depth.push_back(std::move(samples));
    }
    return result;
}

ConvergenceDiagnostic normalized_convergence_diagnostic(const TreeDepthSamples& samples) {
    if (samples.c.size() < kMinDiagnosticTrees)
        throw InsufficientSamples("convergence diagnostic needs >= " +
                                  std::to_string(kMinDiagnosticTrees) + " trees, got " +
                                  std::to_string(samples.c.size()));
    ConvergenceDiagnostic diag;
    diag.depth = samples.depth;
    const std::vector<double> norm = samples.norm_c();
    std::vector<double> abs_dev(norm.size());
    for (std::size_t t = 0; t < norm.size(); ++t)
        abs_dev[t] = std::abs(norm[t] - samples.w_hat[t]);
    diag.mad = stats::mean(abs_dev);
    diag.corr = stats::pearson(norm, samples.w_hat);
    diag.degenerate = !diag.corr.has_value();
    return diag;
}

InverseWEstimate estimate_inverse_w(const OffspringLaw& off, int depth, std::uint64_t trees,
                                    std::uint64_t seed) {
    if (!dubuc_condition(off))
        throw DubucViolated("p1*m = " + std::to_string(off.p1() * off.mean()) +
                            " >= 1: E[1/W] is infinite, refusing to estimate");
    if (depth < 15)
        throw InvalidOption("inverse-W estimation depth must be >= 15, got " +
                            std::to_string(depth));
    if (trees == 0) throw InvalidOption("inverse-W estimation needs at least one tree");

    double scale = 1.0; // m^depth
    for (int k = 0; k < depth; ++k) scale *= off.mean();

    std::vector<double> inv_w(trees);
    parallel_for_each(trees, [&](std::uint64_t t) {
        rng::Xoshiro256pp gen(rng::derive_seed(seed, t));
        std::uint64_t pop = 1;
        for (int k = 0; k < depth; ++k) {
            std::uint64_t next = 0;
            for (std::uint64_t i = 0; i < pop; ++i)
                next += static_cast<std::uint64_t>(off.sample(gen));
            pop = next;
        }
        inv_w[t] = scale / static_cast<double>(pop);
    });

    const auto s = stats::summarize(inv_w);
    InverseWEstimate est;
    est.value = s.mean;
    est.se = s.se;
    est.depth = depth;
    est.trees = trees;
    return est;
}

ResistanceLimitTable resistance_limit_check(const OffspringLaw& off, const ResistanceLaw& res,
                                            const std::vector<int>& depths, std::uint64_t trees,
                                            std::uint64_t seed, const InverseWSection& iw) {
    ResistanceLimitTable table;
    table.inverse_w = estimate_inverse_w(off, iw.depth, iw.trees, rng::derive_seed(seed, 0x157));
    const auto consts = expansion_constants(off, res);
    table.c1 = consts.c1;
    const double target = consts.c1 * table.inverse_w.value;

    TreeOptions opts;
    for (std::size_t d = 0; d < depths.size(); ++d) {
        const int n = depths[d];
        std::vector<double> r_over_n(trees);
        parallel_for_each(trees, [&](std::uint64_t t) {
            const TreeObservables obs = sample_tree_observables(
                off, res, n, opts, rng::derive_seed(seed, d, t));
            r_over_n[t] = 1.0 / (obs.c_n * static_cast<double>(n));
        });
        const auto s = stats::summarize(r_over_n);
        ResistanceLimitRow row;
        row.depth = n;
        row.r_over_n = s.mean;
        row.se = s.se;
        row.ci95_half = s.ci95_half;
        row.target = target;
        row.rel_gap = (s.mean - target) / target;
        row.predicted_rel_bias =
            consts.c4 * std::log(static_cast<double>(n)) / (consts.c1 * n);
        table.rows.push_back(row);
    }
    return table;
}

FluctuationVarianceCheck fluctuation_variance_check(const TreeDepthSamples& samples) {
    if (samples.c.size() < kMinDiagnosticTrees)
        throw InsufficientSamples("variance check needs >= " +
                                  std::to_string(kMinDiagnosticTrees) + " trees");
    if (samples.fluct.empty())
        throw InsufficientSamples("variance check needs the fluctuation series per tree");

    FluctuationVarianceCheck check;
    check.depth = samples.depth;
    const std::vector<double> ny = samples.n_y();
    const auto s_ny = stats::summarize(ny);
    const auto s_fl = stats::summarize(samples.fluct);
    check.mean_ny = s_ny.mean;
    check.se_ny = s_ny.se;
    check.var_ny = s_ny.variance;
    check.var_series = s_fl.variance;
    check.ratio = s_fl.variance > 0.0 ? s_ny.variance / s_fl.variance : 0.0;
    return check;
}

PoolModeResult run_pool_mode(const ExperimentConfig& cfg) {
    PoolModeResult result;
    result.consts = expansion_constants(cfg.offspring, cfg.resistance);
    const double m = cfg.offspring.mean();
    const double lambda = cfg.pool.lambda > 0.0 ? cfg.pool.lambda : m;

    result.trajectory =
        moment_trajectory(cfg.offspring, cfg.resistance, cfg.pool.n_particles,
                          cfg.pool.replicates, cfg.pool.n_max, lambda, cfg.seed,
                          cfg.pool.budget);

    if (cfg.mode == "lambda") {
        result.rescaled = lambda_rescaled(result.trajectory);
        return result;
    }

    result.eps = epsilon_series(result.trajectory, result.consts);
    if (cfg.c0_cutoff > 0)
        result.c0 = estimate_c0(result.trajectory, result.consts, cfg.c0_cutoff);
    if (cfg.fit_hi > 0)
        result.fit = fit_log_correction(result.trajectory, result.consts, cfg.fit_lo, cfg.fit_hi);
    return result;
}

OracleModeResult run_oracle_mode(const ExperimentConfig& cfg) {
    OracleModeResult result;
    std::uint64_t walk_budget = cfg.walk_trees;
    for (std::size_t d = 0; d < cfg.depths.size(); ++d) {
        const int n = cfg.depths[d];
        std::vector<OracleAgreementRow> rows(cfg.trees);
        parallel_for_each(cfg.trees, [&](std::uint64_t t) {
            const std::uint64_t tree_seed = rng::derive_seed(cfg.seed, d, t);
            TreeOptions opts;
            opts.node_budget = cfg.node_budget;
            const TreeObservables obs =
                sample_tree_observables(cfg.offspring, cfg.resistance, n, opts, tree_seed);
            const ExplicitNetwork net =
                export_explicit_tree(cfg.offspring, cfg.resistance, n, tree_seed);

            OracleAgreementRow row;
            row.seed = tree_seed;
            row.depth = n;
            row.engine_c = obs.c_n;
            row.laplacian_c = 1.0 / effective_resistance_laplacian(net);
            row.reduce_c = 1.0 / series_parallel_reduce(net);
            row.rel_diff_laplacian = checked_rel_diff(row.engine_c, row.laplacian_c);
            row.rel_diff_reduce = checked_rel_diff(row.engine_c, row.reduce_c);
            rows[t] = row;
        });
        // Random walks are the slow oracle; only the first few trees get one.
        for (std::uint64_t t = 0; t < cfg.trees && walk_budget > 0; ++t, --walk_budget) {
            OracleAgreementRow& row = rows[t];
            const ExplicitNetwork net =
                export_explicit_tree(cfg.offspring, cfg.resistance, n, row.seed);
            const WalkEstimate walk =
                random_walk_conductance(net, cfg.walk_trials, rng::derive_seed(row.seed, 0x77));
            row.walk_checked = true;
            row.walk_c = walk.conductance;
            row.walk_se = walk.se;
            row.walk_sigma = walk.se > 0.0 ? std::abs(walk.conductance - row.engine_c) / walk.se
                                           : 0.0;
        }
        for (auto& row : rows) {
            result.max_rel_diff_laplacian =
                std::max(result.max_rel_diff_laplacian, row.rel_diff_laplacian);
            result.max_rel_diff_reduce =
                std::max(result.max_rel_diff_reduce, row.rel_diff_reduce);
            if (row.walk_checked)
                result.max_walk_sigma = std::max(result.max_walk_sigma, row.walk_sigma);
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Records

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvBuilder {
    std::string rows = "run_id,mode,n,observable,statistic,value\n";
    const std::string* id = nullptr;
    const std::string* mode = nullptr;

    void add(int n, const std::string& observable, const std::string& statistic, double value) {
        rows += *id;
        rows += ',';
        rows += *mode;
        rows += ',';
        rows += std::to_string(n);
        rows += ',';
        rows += observable;
        rows += ',';
        rows += statistic;
        rows += ',';
        rows += format_value(value);
        rows += '\n';
    }
};

nlohmann::json summary_json(const stats::Summary& s) {
    return nlohmann::json{{"mean", s.mean},
                          {"variance", s.variance},
                          {"se", s.se},
                          {"ci95_half", s.ci95_half},
                          {"count", s.count}};
}

void emit_summary(CsvBuilder& csv, int n, const std::string& name, const stats::Summary& s) {
    csv.add(n, name, "mean", s.mean);
    csv.add(n, name, "variance", s.variance);
    csv.add(n, name, "se", s.se);
    csv.add(n, name, "ci95_half", s.ci95_half);
}

void record_tree_mode(const ExperimentConfig& cfg, const TreeModeResult& tree,
                      nlohmann::json& record, CsvBuilder& csv) {
    nlohmann::json depths = nlohmann::json::array();
    for (const auto& samples : tree.per_depth) {
        const int n = samples.depth;
        nlohmann::json entry;
        entry["n"] = n;
        entry["trees"] = samples.c.size();

        const auto s_c = stats::summarize(samples.c);
        const auto s_w = stats::summarize(samples.w_hat);
        entry["c_n"] = summary_json(s_c);
        entry["w_hat"] = summary_json(s_w);
        emit_summary(csv, n, "c_n", s_c);
        emit_summary(csv, n, "w_hat", s_w);

        entry["n_x_hat"] = static_cast<double>(n) * s_c.mean;
        csv.add(n, "n_x_hat", "value", static_cast<double>(n) * s_c.mean);

        std::vector<double> r_over_n(samples.c.size());
        for (std::size_t t = 0; t < samples.c.size(); ++t)
            r_over_n[t] = 1.0 / (samples.c[t] * n);
        const auto s_r = stats::summarize(r_over_n);
        entry["r_over_n"] = summary_json(s_r);
        emit_summary(csv, n, "r_over_n", s_r);

        const auto s_th = stats::summarize(samples.thomson);
        const auto s_nw = stats::summarize(samples.nash);
        entry["thomson_upper"] = summary_json(s_th);
        entry["nash_williams_lower"] = summary_json(s_nw);
        csv.add(n, "thomson_upper", "mean", s_th.mean);
        csv.add(n, "nash_williams_lower", "mean", s_nw.mean);

        // Plug-in normalization: mean of {C_n} is 1 by construction; the
        // interesting derived stats are the deviation from W_hat.
        const auto ny = samples.n_y();
        const auto s_ny = stats::summarize(ny);
        entry["n_y"] = summary_json(s_ny);
        emit_summary(csv, n, "n_y", s_ny);

        if (samples.c.size() >= kMinDiagnosticTrees) {
            const auto diag = normalized_convergence_diagnostic(samples);
            entry["norm_c_mad"] = diag.mad;
            entry["norm_c_degenerate"] = diag.degenerate;
            csv.add(n, "norm_c", "mad_vs_w", diag.mad);
            if (diag.corr) {
                entry["norm_c_corr"] = *diag.corr;
                csv.add(n, "norm_c", "corr_vs_w", *diag.corr);
            }
        }

        if (!samples.fluct.empty()) {
            const auto s_fl = stats::summarize(samples.fluct);
            entry["fluct_series"] = summary_json(s_fl);
            emit_summary(csv, n, "fluct_series", s_fl);
            if (samples.c.size() >= kMinDiagnosticTrees) {
                const auto check = fluctuation_variance_check(samples);
                entry["var_ratio_ny_series"] = check.ratio;
                csv.add(n, "ny_vs_series", "var_ratio", check.ratio);
            }
        }
        depths.push_back(std::move(entry));
    }
    record["depths"] = std::move(depths);
    if (cfg.fluct_L > 0) record["fluct_c1"] = tree.fluct_c1;

    if (cfg.inverse_w && dubuc_condition(cfg.offspring)) {
        const auto table = resistance_limit_check(cfg.offspring, cfg.resistance, cfg.depths,
                                                  cfg.trees, cfg.seed, *cfg.inverse_w);
        nlohmann::json iw;
        iw["value"] = table.inverse_w.value;
        iw["se"] = table.inverse_w.se;
        iw["depth"] = table.inverse_w.depth;
        iw["trees"] = table.inverse_w.trees;
        iw["note"] = "finite-depth proxy underestimates E[1/W]; increases with K";
        record["inverse_w"] = iw;
        csv.add(table.inverse_w.depth, "inverse_w", "mean", table.inverse_w.value);
        csv.add(table.inverse_w.depth, "inverse_w", "se", table.inverse_w.se);

        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : table.rows) {
            rows.push_back({{"n", row.depth},
                            {"r_over_n", row.r_over_n},
                            {"se", row.se},
                            {"target", row.target},
                            {"rel_gap", row.rel_gap},
                            {"predicted_rel_bias", row.predicted_rel_bias}});
            csv.add(row.depth, "r_over_n", "target", row.target);
            csv.add(row.depth, "r_over_n", "rel_gap", row.rel_gap);
            csv.add(row.depth, "r_over_n", "predicted_rel_bias", row.predicted_rel_bias);
        }
        record["resistance_limit"] = std::move(rows);
    }
}

void record_pool_mode(const ExperimentConfig& cfg, const PoolModeResult& pool,
                      nlohmann::json& record, CsvBuilder& csv) {
    const auto& traj = pool.trajectory;
    record["pool"] = {{"N", traj.n_particles},
                      {"replicates", traj.replicates},
                      {"n_max", traj.n_max},
                      {"lambda", traj.lambda}};
    record["constants"] = {{"a1", pool.consts.a1}, {"a2", pool.consts.a2},
                           {"b1", pool.consts.b1}, {"b2", pool.consts.b2},
                           {"c1", pool.consts.c1}, {"c2", pool.consts.c2},
                           {"c3", pool.consts.c3}, {"c4", pool.consts.c4}};

    nlohmann::json steps = nlohmann::json::array();
    for (int n = 1; n <= traj.n_max; ++n) {
        nlohmann::json entry;
        entry["n"] = n;
        entry["x"] = traj.x[n - 1];
        entry["se_x"] = traj.se_x[n - 1];
        entry["y"] = traj.y[n - 1];
        entry["se_y"] = traj.se_y[n - 1];
        entry["z"] = traj.z[n - 1];
        entry["se_z"] = traj.se_z[n - 1];
        entry["n_x"] = n * traj.x[n - 1];
        csv.add(n, "x", "mean", traj.x[n - 1]);
        csv.add(n, "x", "se", traj.se_x[n - 1]);
        csv.add(n, "y", "mean", traj.y[n - 1]);
        csv.add(n, "y", "se", traj.se_y[n - 1]);
        csv.add(n, "z", "mean", traj.z[n - 1]);
        csv.add(n, "z", "se", traj.se_z[n - 1]);
        csv.add(n, "n_x", "value", n * traj.x[n - 1]);
        if (n <= static_cast<int>(pool.eps.eps.size())) {
            entry["eps"] = pool.eps.eps[n - 1];
            entry["se_eps"] = pool.eps.se[n - 1];
            csv.add(n, "eps", "value", pool.eps.eps[n - 1]);
            csv.add(n, "eps", "se", pool.eps.se[n - 1]);
        }
        steps.push_back(std::move(entry));
    }
    record["trajectory"] = std::move(steps);

    if (pool.c0) {
        record["c0"] = {{"value", pool.c0->value},
                        {"error", pool.c0->error},
                        {"log_form", pool.c0->log_form},
                        {"cutoff", pool.c0->cutoff}};
        csv.add(pool.c0->cutoff, "c0", "value", pool.c0->value);
        csv.add(pool.c0->cutoff, "c0", "error", pool.c0->error);
        csv.add(pool.c0->cutoff, "c0", "log_form", pool.c0->log_form);
    }
    if (pool.fit) {
        record["log_correction_fit"] = {{"slope", pool.fit->slope},
                                        {"intercept", pool.fit->intercept},
                                        {"slope_se", pool.fit->slope_se},
                                        {"slope_ci95", pool.fit->slope_ci95},
                                        {"noise_dominates", pool.fit->noise_dominates},
                                        {"n_lo", cfg.fit_lo},
                                        {"n_hi", cfg.fit_hi}};
        csv.add(0, "fit", "slope", pool.fit->slope);
        csv.add(0, "fit", "slope_ci95", pool.fit->slope_ci95);
        csv.add(0, "fit", "intercept", pool.fit->intercept);
    }
    if (pool.rescaled) {
        nlohmann::json seq = nlohmann::json::array();
        for (int n = 1; n <= traj.n_max; ++n) {
            seq.push_back(pool.rescaled->values[n - 1]);
            csv.add(n, "rescaled_x", "value", pool.rescaled->values[n - 1]);
        }
        record["rescaled"] = {{"values", std::move(seq)},
                              {"ratio_deviation", pool.rescaled->ratio_deviation}};
        csv.add(traj.n_max, "rescaled_x", "ratio_deviation", pool.rescaled->ratio_deviation);
    }
}

void record_oracle_mode(const OracleModeResult& oracle, nlohmann::json& record,
                        CsvBuilder& csv) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : oracle.rows) {
        nlohmann::json entry = {{"seed", row.seed},
                                {"n", row.depth},
                                {"engine_c", row.engine_c},
                                {"laplacian_c", row.laplacian_c},
                                {"reduce_c", row.reduce_c},
                                {"rel_diff_laplacian", row.rel_diff_laplacian},
                                {"rel_diff_reduce", row.rel_diff_reduce}};
        if (row.walk_checked) {
            entry["walk_c"] = row.walk_c;
            entry["walk_se"] = row.walk_se;
            entry["walk_sigma"] = row.walk_sigma;
        }
        rows.push_back(std::move(entry));
    }
    record["agreement"] = std::move(rows);
    record["max_rel_diff_laplacian"] = oracle.max_rel_diff_laplacian;
    record["max_rel_diff_reduce"] = oracle.max_rel_diff_reduce;
    record["max_walk_sigma"] = oracle.max_walk_sigma;
    csv.add(0, "oracle", "max_rel_diff_laplacian", oracle.max_rel_diff_laplacian);
    csv.add(0, "oracle", "max_rel_diff_reduce", oracle.max_rel_diff_reduce);
    csv.add(0, "oracle", "max_walk_sigma", oracle.max_walk_sigma);
}

} // namespace

RunOutput run_experiment(const ExperimentConfig& cfg) {
    RunOutput out;
    out.id = config_hash(cfg.raw);

    nlohmann::json record;
    record["id"] = out.id;
    record["mode"] = cfg.mode;
    record["provenance"] = {{"config_hash", out.id},
                            {"seed", cfg.seed},
                            {"code_version", kCodeVersion}};

    CsvBuilder csv;
    csv.id = &out.id;
    csv.mode = &cfg.mode;

    if (cfg.mode == "tree") {
        const TreeModeResult tree = run_tree_mode(cfg);
        record_tree_mode(cfg, tree, record, csv);
    } else if (cfg.mode == "pool" || cfg.mode == "lambda") {
        const PoolModeResult pool = run_pool_mode(cfg);
        record_pool_mode(cfg, pool, record, csv);
    } else if (cfg.mode == "oracle") {
        const OracleModeResult oracle = run_oracle_mode(cfg);
        record_oracle_mode(oracle, record, csv);
    } else {
        throw InvalidConfig("unknown mode '" + cfg.mode + "'");
    }

    out.record = std::move(record);
    out.csv = std::move(csv.rows);
    return out;
}

namespace {

void write_or_verify(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::string existing((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
        if (existing != content)
            throw Error("refusing to overwrite " + path.string() +
                        " with different content (runs are content-addressed)");
        return;
    }
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw Error("cannot write " + path.string());
    outf << content;
}

} // namespace

std::string write_run(const RunOutput& out, const std::string& out_dir,
                      const nlohmann::json& raw_config) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_dir) / out.id;
    fs::create_directories(dir);
    write_or_verify(dir / "config.json", raw_config.dump(2) + "\n");
    write_or_verify(dir / "record.json", out.record.dump(2) + "\n");
    write_or_verify(dir / "results.csv", out.csv);
    return dir.string();
}

} // namespace gwel
