#pragma once

// Experiment orchestration: seeded replications across the tree engine and
// the particle pools, statistics aggregation, the limit-law diagnostics, and
// result persistence.
//
// Every run is a pure function of (config, master seed): per-replica seeds
// are derived by hashing, parallel work writes to index-addressed slots, and
// aggregation folds in replica-index order. Result files are byte-identical
// for any thread count.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwel/constants.hpp"
#include "gwel/laws.hpp"
#include "gwel/pool.hpp"
#include "gwel/tree.hpp"

namespace gwel {

inline constexpr const char* kCodeVersion = "gw-electric 0.1.0";

// ---------------------------------------------------------------------------
// Configuration

struct PoolSection {
    std::uint32_t n_particles = 0;
    int replicates = 4;
    int n_max = 0;
    double lambda = 0.0; // 0 = critical (lambda = m)
    double budget = kDefaultPoolBudget;
};

struct InverseWSection {
    int depth = 0; // estimation depth K (>= 15)
    std::uint64_t trees = 0;
};

struct ExperimentConfig {
    std::string mode; // tree | pool | oracle | lambda
    OffspringLaw offspring = OffspringLaw::deterministic(2);
    ResistanceLaw resistance = ResistanceLaw::point_mass(1.0);

    // tree / oracle modes
    std::vector<int> depths;
    std::uint64_t trees = 0;
    int fluct_L = 0; // 0 disables the fluctuation series
    std::uint64_t node_budget = std::uint64_t(1) << 32;

    // pool / lambda modes
    PoolSection pool;
    int c0_cutoff = 0;              // 0 disables the c0 estimate
    int fit_lo = 0, fit_hi = 0;     // 0 disables the log-correction fit

    std::optional<InverseWSection> inverse_w;

    // oracle mode
    std::uint64_t walk_trials = 0; // random-walk cross-check trials (0 = skip)
    std::uint64_t walk_trees = 0;  // how many of the sampled trees get a walk

    std::uint64_t seed = 0;
    std::string out_dir;

    nlohmann::json raw; // canonical content, hashed into the run id
};

// Throws InvalidConfig with field context.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);
OffspringLaw offspring_from_json(const nlohmann::json& j);
ResistanceLaw resistance_from_json(const nlohmann::json& j);

std::string config_hash(const nlohmann::json& raw); // 16 hex digits

// ---------------------------------------------------------------------------
// Tree mode

struct TreeDepthSamples {
    int depth = 0;
    std::vector<double> c;      // per-tree conductance
    std::vector<double> w_hat;  // per-tree m^-n #T_n
    std::vector<double> thomson, nash;
    std::vector<double> fluct;  // empty unless the series was requested
    double x_hat = 0.0;         // sample mean of c (plug-in normalizer)

    // norm_c()[t] = c[t] / x_hat
    std::vector<double> norm_c() const;
    std::vector<double> n_y() const; // n * (c/x_hat - w_hat)
};

struct TreeModeResult {
    std::vector<TreeDepthSamples> per_depth;
    double fluct_c1 = 0.0; // c1 used for the series, when requested
};

TreeModeResult run_tree_mode(const ExperimentConfig& cfg);

// Mean |{C_n} - W_hat| and Pearson corr({C_n}, W_hat) for one depth.
// Degenerate laws make the correlation undefined; flagged, not NaN.
struct ConvergenceDiagnostic {
    int depth = 0;
    double mad = 0.0;
    std::optional<double> corr;
    bool degenerate = false;
};

// Throws InsufficientSamples below 300 trees.
ConvergenceDiagnostic normalized_convergence_diagnostic(const TreeDepthSamples& samples);

// E[1/W] via the depth-K population proxy W_K = m^-K #T_K. The finite-K
// value underestimates E[1/W] (conditional Jensen: W_K = E[W | level sizes])
// and increases with K. Throws DubucViolated when p1*m >= 1 and
// InvalidOption for K < 15.
struct InverseWEstimate {
    double value = 0.0;
    double se = 0.0;
    int depth = 0;
    std::uint64_t trees = 0;
};

InverseWEstimate estimate_inverse_w(const OffspringLaw& off, int depth, std::uint64_t trees,
                                    std::uint64_t seed);

struct ResistanceLimitRow {
    int depth = 0;
    double r_over_n = 0.0; // sample mean of R_n / n
    double se = 0.0;
    double ci95_half = 0.0;
    double target = 0.0;            // c1 * E^[1/W]
    double rel_gap = 0.0;           // (r_over_n - target) / target
    double predicted_rel_bias = 0.0; // c4 log n / (c1 n), signed
};

struct ResistanceLimitTable {
    std::vector<ResistanceLimitRow> rows;
    InverseWEstimate inverse_w;
    double c1 = 0.0;
};

ResistanceLimitTable resistance_limit_check(const OffspringLaw& off, const ResistanceLaw& res,
                                            const std::vector<int>& depths, std::uint64_t trees,
                                            std::uint64_t seed, const InverseWSection& iw);

struct FluctuationVarianceCheck {
    int depth = 0;
    double mean_ny = 0.0;
    double se_ny = 0.0;
    double var_ny = 0.0;
    double var_series = 0.0;
    double ratio = 0.0; // var_ny / var_series
};

// Throws InsufficientSamples below 300 trees or when the series is missing.
FluctuationVarianceCheck fluctuation_variance_check(const TreeDepthSamples& samples);

// ---------------------------------------------------------------------------
// Pool / lambda / oracle modes

struct PoolModeResult {
    MomentTrajectory trajectory;
    ExpansionConstants consts;
    EpsilonSeries eps;
    std::optional<C0Estimate> c0;
    std::optional<LogCorrectionFit> fit;
    std::optional<LambdaRescaled> rescaled; // lambda mode
};

PoolModeResult run_pool_mode(const ExperimentConfig& cfg);

struct OracleAgreementRow {
    std::uint64_t seed = 0;
    int depth = 0;
    double engine_c = 0.0;
    double laplacian_c = 0.0;
    double reduce_c = 0.0;
    double rel_diff_laplacian = 0.0;
    double rel_diff_reduce = 0.0;
    bool walk_checked = false;
    double walk_c = 0.0;
    double walk_se = 0.0;
    double walk_sigma = 0.0; // |walk - engine| / SE
};

struct OracleModeResult {
    std::vector<OracleAgreementRow> rows;
    double max_rel_diff_laplacian = 0.0;
    double max_rel_diff_reduce = 0.0;
    double max_walk_sigma = 0.0;
};

OracleModeResult run_oracle_mode(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Records and persistence

struct RunOutput {
    std::string id;
    nlohmann::json record;
    std::string csv;
};

RunOutput run_experiment(const ExperimentConfig& cfg);

// Writes <out_dir>/<id>/{config.json, record.json, results.csv}. Existing
// files are only ever rewritten with identical bytes; differing content is
// an error (MissingRun is never silently clobbered). Returns the run dir.
std::string write_run(const RunOutput& out, const std::string& out_dir,
                      const nlohmann::json& raw_config);

} // namespace gwel
