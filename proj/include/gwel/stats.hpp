#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gwel::stats {

// Pairwise (cascade) summation. Deterministic for a given input order and
// accurate to ~log2(n) ulps, which the 1e-12 exactness checks rely on.
double pairwise_sum(std::span<const double> values);

// Pairwise sum of f(values[i]) without materializing the transformed array.
template <class F>
double pairwise_sum_transform(const double* values, std::size_t n, F f) {
    if (n <= 64) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += f(values[i]);
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_transform(values, half, f) +
           pairwise_sum_transform(values + half, n - half, f);
}

double mean(std::span<const double> values);

// Unbiased sample variance (n-1 denominator); 0 for n < 2.
double sample_variance(std::span<const double> values);

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double se = 0.0;        // sqrt(variance / count)
    double ci95_half = 0.0; // 1.96 * se (normal approximation)
};

Summary summarize(std::span<const double> values);

// Pearson correlation; nullopt when either margin is (numerically) constant.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

struct WlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;      // dispersion-scaled, see stats.cpp
    double slope_ci95 = 0.0;    // 1.96 * slope_se
    double chi2 = 0.0;          // weighted residual sum of squares
    std::size_t points = 0;
};

// Weighted least squares of y against x with per-point weights. Weights are
// typically 1/SE^2; points with non-finite or non-positive weight fall back
// to the smallest positive weight present (or 1.0 if none).
WlsFit wls_line(std::span<const double> xs, std::span<const double> ys,
                std::span<const double> weights);

} // namespace gwel::stats
