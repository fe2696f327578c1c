#pragma once

// Population-dynamics iteration of the distributional conductance recursion.
//
// A pool of N particles approximates the law of C_n; each step resamples
// children with replacement from the previous pool (fresh pool per step).
// Moment trajectories x_n = E[C_n], y_n = E[C_n^2], z_n = E[C_n^3] are
// averaged over R independent replicate pools, with standard errors taken
// from the replicate spread (within-pool particles are correlated by the
// resampling). lambda = m is the critical weighting; lambda > m gives the
// supercritical variant whose (lambda/m)^n-rescaled means converge.

#include <cstdint>
#include <vector>

#include "gwel/constants.hpp"
#include "gwel/laws.hpp"
#include "gwel/pool_kernel.hpp"

namespace gwel {

struct PoolState {
    int step = 0; // particles approximate the law of C_step
    std::vector<double> particles;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t replicate = 0;
};

inline constexpr std::uint32_t kMinPoolSize = 1000;
inline constexpr double kDefaultPoolBudget = 2e11; // particle-children per trajectory

// N i.i.d. samples of (1/lambda) sum_{i=1..nu} 1/xi_i. Throws PoolTooSmall
// or InvalidOption (lambda < m).
PoolState init_pool(const OffspringLaw& off, const ResistanceLaw& res, std::uint32_t n_particles,
                    double lambda, std::uint64_t seed, std::uint32_t replicate = 0,
                    pool::KernelChoice kernel = pool::KernelChoice::Auto);

// One step of the recursion; the new pool replaces the old.
void advance_pool(PoolState& state, const OffspringLaw& off, const ResistanceLaw& res,
                  pool::KernelChoice kernel = pool::KernelChoice::Auto);

struct PoolMoments {
    double x = 0.0; // mean
    double y = 0.0; // second moment
    double z = 0.0; // third moment
};

PoolMoments pool_moments(const PoolState& state);

struct MomentTrajectory {
    int n_max = 0;
    std::uint32_t n_particles = 0;
    int replicates = 0;
    double lambda = 0.0;
    double offspring_mean = 0.0;
    double inv_xi_mean = 0.0; // E[1/xi], used by the c0 estimate
    std::uint64_t seed = 0;

    // rep_x[r][n-1] is replicate r's mean at step n; likewise y, z.
    std::vector<std::vector<double>> rep_x, rep_y, rep_z;

    // Aggregates over replicates (index n-1).
    std::vector<double> x, y, z;
    std::vector<double> se_x, se_y, se_z;
};

// Runs R independent replicate pools to depth n_max. Throws PoolTooSmall,
// InvalidOption (R < 4 or lambda < m) or BudgetExceeded when
// n_max * N * E[nu] * R exceeds the budget.
MomentTrajectory moment_trajectory(const OffspringLaw& off, const ResistanceLaw& res,
                                   std::uint32_t n_particles, int replicates, int n_max,
                                   double lambda, std::uint64_t seed,
                                   double budget = kDefaultPoolBudget,
                                   pool::KernelChoice kernel = pool::KernelChoice::Auto);

struct EpsilonSeries {
    // eps[n-1] = 1/x_{n+1} - 1/x_n - c1 for n = 1..n_max-1, with delta-method
    // standard errors using the replicate covariance of adjacent means.
    std::vector<double> eps;
    std::vector<double> se;
};

EpsilonSeries epsilon_series(const MomentTrajectory& traj, const ExpansionConstants& consts);

struct C0Estimate {
    double value = 0.0;      // -c1 + 1/E[1/xi] + sum_{i<=I} (eps_i - c4/i)
    double error = 0.0;      // 1.96 * replicate SE
    double log_form = 0.0;   // value + c4*gamma: the constant paired with
                             // c4*log n in 1/x_n = c1 n + c4 log n + const
    int cutoff = 0;
};

// Truncated-series estimate of the expansion constant c0. Throws
// MissingInverseMoment or InvalidOption (cutoff out of range).
C0Estimate estimate_c0(const MomentTrajectory& traj, const ExpansionConstants& consts,
                       int cutoff);

struct LogCorrectionFit {
    double slope = 0.0; // estimates -c4/c1^2
    double intercept = 0.0;
    double slope_se = 0.0;
    double slope_ci95 = 0.0;
    bool noise_dominates = false; // n^2*SE exceeds half the fitted signal range
    std::size_t points = 0;
};

// Weighted least squares of n^2 (x_n - 1/(c1 n)) against log n over
// n in [n_lo, n_hi]; weights 1/SE^2 with SE = n^2 se_x.
LogCorrectionFit fit_log_correction(const MomentTrajectory& traj,
                                    const ExpansionConstants& consts, int n_lo, int n_hi);

struct LambdaRescaled {
    std::vector<double> values;    // (lambda/m)^n * x_n
    double ratio_deviation = 0.0;  // max |r_{n+1}/r_n - 1| over the last quarter
};

// Requires traj.lambda > m strictly.
LambdaRescaled lambda_rescaled(const MomentTrajectory& traj);

} // namespace gwel
