#include "gwel/pool.hpp"

#include <algorithm>
#include <cmath>

#include "gwel/errors.hpp"
#include "gwel/parallel.hpp"
#include "gwel/stats.hpp"

namespace gwel {

namespace {

// Euler-Mascheroni; converts the harmonic-sum form of the c0 series into the
// log n form (H_I = log I + gamma + O(1/I)).
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

constexpr std::uint64_t kStepBlock = 8192;

void run_step(const pool::StepContext& ctx, std::uint32_t count, double* out,
              pool::StepKernelFn kernel) {
    parallel_for_blocks(count, kStepBlock, [&](std::uint64_t b, std::uint64_t e) {
        kernel(ctx, static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(e), out);
    });
}

pool::StepContext make_context(const PoolState& state, const pool::LawTables& tables,
                               bool init) {
    pool::StepContext ctx;
    ctx.old_particles = init ? nullptr : state.particles.data();
    ctx.pool_size = static_cast<std::uint32_t>(state.particles.size());
    ctx.inv_lambda = 1.0 / state.lambda;
    ctx.key = rng::make_philox_key(state.seed, state.replicate);
    ctx.step = static_cast<std::uint32_t>(state.step + 1);
    ctx.laws = tables;
    return ctx;
}

} // namespace

PoolState init_pool(const OffspringLaw& off, const ResistanceLaw& res, std::uint32_t n_particles,
                    double lambda, std::uint64_t seed, std::uint32_t replicate,
                    pool::KernelChoice kernel) {
    if (n_particles < kMinPoolSize)
        throw PoolTooSmall("pool size " + std::to_string(n_particles) + " below the minimum " +
                           std::to_string(kMinPoolSize));
    if (!(lambda >= off.mean() * (1.0 - 1e-12)))
        throw InvalidOption("pool weighting lambda must be >= offspring mean");

    PoolState state;
    state.step = 0;
    state.lambda = lambda;
    state.seed = seed;
    state.replicate = replicate;
    state.particles.assign(n_particles, 0.0);

    const pool::LawTables tables = pool::make_law_tables(off, res);
    const pool::StepContext ctx = make_context(state, tables, /*init=*/true);
    run_step(ctx, n_particles, state.particles.data(), pool::select_kernel(tables, kernel));
    state.step = 1;
    return state;
}

void advance_pool(PoolState& state, const OffspringLaw& off, const ResistanceLaw& res,
                  pool::KernelChoice kernel) {
    const pool::LawTables tables = pool::make_law_tables(off, res);
    const pool::StepContext ctx = make_context(state, tables, /*init=*/false);
    std::vector<double> fresh(state.particles.size());
    run_step(ctx, static_cast<std::uint32_t>(fresh.size()), fresh.data(),
             pool::select_kernel(tables, kernel));
    state.particles.swap(fresh);
    ++state.step;
}

PoolMoments pool_moments(const PoolState& state) {
    const double* data = state.particles.data();
    const std::size_t n = state.particles.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    PoolMoments m;
    m.x = stats::pairwise_sum_transform(data, n, [](double c) { return c; }) * inv_n;
    m.y = stats::pairwise_sum_transform(data, n, [](double c) { return c * c; }) * inv_n;
    m.z = stats::pairwise_sum_transform(data, n, [](double c) { return c * c * c; }) * inv_n;
    return m;
}

MomentTrajectory moment_trajectory(const OffspringLaw& off, const ResistanceLaw& res,
                                   std::uint32_t n_particles, int replicates, int n_max,
                                   double lambda, std::uint64_t seed, double budget,
                                   pool::KernelChoice kernel) {
    if (replicates < 4)
        throw InvalidOption("trajectory needs at least 4 replicate pools for SEs");
    if (n_max < 1) throw InvalidOption("trajectory needs n_max >= 1");
    const double work = static_cast<double>(n_max) * n_particles * off.mean() * replicates;
    if (work > budget)
        throw BudgetExceeded("trajectory would cost ~" + std::to_string(work) +
                             " particle-children, budget is " + std::to_string(budget));

    MomentTrajectory traj;
    traj.n_max = n_max;
    traj.n_particles = n_particles;
    traj.replicates = replicates;
    traj.lambda = lambda;
    traj.offspring_mean = off.mean();
    traj.inv_xi_mean = res.mean_inv_xi();
    traj.seed = seed;
    traj.rep_x.assign(replicates, std::vector<double>(n_max));
    traj.rep_y.assign(replicates, std::vector<double>(n_max));
    traj.rep_z.assign(replicates, std::vector<double>(n_max));

    for (int r = 0; r < replicates; ++r) {
        try {
            PoolState state = init_pool(off, res, n_particles, lambda, seed,
                                        static_cast<std::uint32_t>(r), kernel);
            for (int n = 1; n <= n_max; ++n) {
                if (n > 1) advance_pool(state, off, res, kernel);
                const PoolMoments m = pool_moments(state);
                traj.rep_x[r][n - 1] = m.x;
                traj.rep_y[r][n - 1] = m.y;
                traj.rep_z[r][n - 1] = m.z;
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw Error("replicate " + std::to_string(r) + ": " + e.what());
        }
    }

    traj.x.resize(n_max);
    traj.y.resize(n_max);
    traj.z.resize(n_max);
    traj.se_x.resize(n_max);
    traj.se_y.resize(n_max);
    traj.se_z.resize(n_max);
    std::vector<double> column(replicates);
    auto aggregate = [&](const std::vector<std::vector<double>>& rep, std::vector<double>& mean,
                         std::vector<double>& se) {
        for (int n = 0; n < n_max; ++n) {
            for (int r = 0; r < replicates; ++r) column[r] = rep[r][n];
            const auto s = stats::summarize(column);
            mean[n] = s.mean;
            se[n] = s.se;
        }
    };
    aggregate(traj.rep_x, traj.x, traj.se_x);
    aggregate(traj.rep_y, traj.y, traj.se_y);
    aggregate(traj.rep_z, traj.z, traj.se_z);
    return traj;
}

EpsilonSeries epsilon_series(const MomentTrajectory& traj, const ExpansionConstants& consts) {
    EpsilonSeries series;
    const int n_max = traj.n_max;
    if (n_max < 2) return series;
    const int r_count = traj.replicates;
    series.eps.resize(n_max - 1);
    series.se.resize(n_max - 1);
    for (int n = 1; n < n_max; ++n) {
        const double x0 = traj.x[n - 1];
        const double x1 = traj.x[n];
        series.eps[n - 1] = 1.0 / x1 - 1.0 / x0 - consts.c1;

        // Delta method: d(eps)/dx_n = 1/x_n^2, d(eps)/dx_{n+1} = -1/x_{n+1}^2,
        // replicate covariance of the adjacent means.
        double v00 = 0.0, v11 = 0.0, c01 = 0.0;
        double m0 = 0.0, m1 = 0.0;
        for (int r = 0; r < r_count; ++r) {
            m0 += traj.rep_x[r][n - 1];
            m1 += traj.rep_x[r][n];
        }
        m0 /= r_count;
        m1 /= r_count;
        for (int r = 0; r < r_count; ++r) {
            const double d0 = traj.rep_x[r][n - 1] - m0;
            const double d1 = traj.rep_x[r][n] - m1;
            v00 += d0 * d0;
            v11 += d1 * d1;
            c01 += d0 * d1;
        }
        const double denom = static_cast<double>(r_count - 1) * r_count;
        v00 /= denom;
        v11 /= denom;
        c01 /= denom;
        const double a = 1.0 / (x0 * x0);
        const double b = 1.0 / (x1 * x1);
        const double var = a * a * v00 + b * b * v11 - 2.0 * a * b * c01;
        series.se[n - 1] = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    return series;
}

C0Estimate estimate_c0(const MomentTrajectory& traj, const ExpansionConstants& consts,
                       int cutoff) {
    if (!std::isfinite(traj.inv_xi_mean) || !(traj.inv_xi_mean > 0.0))
        throw MissingInverseMoment("c0 estimate requires finite E[1/xi]");
    if (cutoff < 1 || cutoff + 1 > traj.n_max)
        throw InvalidOption("c0 cutoff must satisfy 1 <= I <= n_max - 1");

    // Per replicate, the partial sums of eps_i telescope:
    //   sum_{i<=I} eps_i = 1/x_{I+1} - 1/x_1 - I*c1,
    // so the estimate uses each replicate's trajectory directly and the error
    // bar comes from the replicate spread.
    double harmonic = 0.0;
    for (int i = 1; i <= cutoff; ++i) harmonic += 1.0 / static_cast<double>(i);

    std::vector<double> per_rep(traj.replicates);
    for (int r = 0; r < traj.replicates; ++r) {
        const double x1 = traj.rep_x[r][0];
        const double xI = traj.rep_x[r][cutoff];
        per_rep[r] = -consts.c1 + 1.0 / traj.inv_xi_mean + (1.0 / xI - 1.0 / x1) -
                     cutoff * consts.c1 - consts.c4 * harmonic;
    }
    const auto s = stats::summarize(per_rep);
    C0Estimate est;
    est.value = s.mean;
    est.error = s.ci95_half;
    est.log_form = s.mean + consts.c4 * kEulerGamma;
    est.cutoff = cutoff;
    return est;
}

LogCorrectionFit fit_log_correction(const MomentTrajectory& traj,
                                    const ExpansionConstants& consts, int n_lo, int n_hi) {
    if (n_lo < 1 || n_hi <= n_lo || n_hi > traj.n_max)
        throw InvalidOption("fit range must satisfy 1 <= n_lo < n_hi <= n_max");

    std::vector<double> xs, ys, ws;
    bool all_exact = true;
    for (int n = n_lo; n <= n_hi; ++n) {
        const double u = static_cast<double>(n) * n * (traj.x[n - 1] - 1.0 / (consts.c1 * n));
        const double se = static_cast<double>(n) * n * traj.se_x[n - 1];
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(u);
        ws.push_back(se > 0.0 ? 1.0 / (se * se) : 0.0);
        if (se > 0.0) all_exact = false;
    }
    // Degenerate laws give zero replicate spread; fall back to an unweighted
    // fit whose CI comes from the residual dispersion.
    if (all_exact) std::fill(ws.begin(), ws.end(), 1.0);

    const auto fit = stats::wls_line(xs, ys, ws);
    LogCorrectionFit out;
    out.slope = fit.slope;
    out.intercept = fit.intercept;
    out.slope_se = fit.slope_se;
    out.slope_ci95 = fit.slope_ci95;
    out.points = fit.points;

    // Noise diagnostic: median point SE against half the fitted signal range.
    std::vector<double> ses;
    for (std::size_t i = 0; i < ws.size(); ++i)
        ses.push_back(ws[i] > 0.0 ? 1.0 / std::sqrt(ws[i]) : 0.0);
    std::nth_element(ses.begin(), ses.begin() + ses.size() / 2, ses.end());
    const double median_se = ses[ses.size() / 2];
    const double signal = std::abs(fit.slope) * (xs.back() - xs.front());
    out.noise_dominates = median_se > 0.5 * signal;
    return out;
}

LambdaRescaled lambda_rescaled(const MomentTrajectory& traj) {
    if (!(traj.lambda > traj.offspring_mean))
        throw InvalidOption("rescaled sequence requires lambda > m strictly");
    LambdaRescaled out;
    const double ratio = traj.lambda / traj.offspring_mean;
    double factor = 1.0;
    out.values.resize(traj.n_max);
    for (int n = 1; n <= traj.n_max; ++n) {
        factor *= ratio;
        out.values[n - 1] = factor * traj.x[n - 1];
    }
    const int start = traj.n_max - traj.n_max / 4;
    double worst = 0.0;
    for (int n = std::max(start, 1); n < traj.n_max; ++n) {
        const double r = out.values[n] / out.values[n - 1];
        worst = std::max(worst, std::abs(r - 1.0));
    }
    out.ratio_deviation = worst;
    return out;
}

} // namespace gwel
