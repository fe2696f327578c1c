#include "gwel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gwel::stats {

namespace {

double pairwise_sum_impl(const double* values, std::size_t n) {
    if (n <= 64) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += values[i];
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_impl(values, half) + pairwise_sum_impl(values + half, n - half);
}

} // namespace

double pairwise_sum(std::span<const double> values) {
    return pairwise_sum_impl(values.data(), values.size());
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double m = mean(values);
    const double ss = pairwise_sum_transform(values.data(), n, [m](double v) {
        const double d = v - m;
        return d * d;
    });
    return ss / static_cast<double>(n - 1);
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (s.count == 0) return s;
    s.mean = mean(values);
    s.variance = sample_variance(values);
    s.se = std::sqrt(s.variance / static_cast<double>(s.count));
    s.ci95_half = 1.96 * s.se;
    return s;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = std::min(xs.size(), ys.size());
    if (n < 2) return std::nullopt;
    const double mx = mean(xs.subspan(0, n));
    const double my = mean(ys.subspan(0, n));
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // Constant margins make the correlation undefined; callers report this
    // as a degenerate flag rather than NaN.
    const double scale = static_cast<double>(n);
    if (sxx <= scale * 1e-300 || syy <= scale * 1e-300) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

WlsFit wls_line(std::span<const double> xs, std::span<const double> ys,
                std::span<const double> weights) {
    WlsFit fit;
    const std::size_t n = std::min({xs.size(), ys.size(), weights.size()});
    fit.points = n;
    if (n < 2) return fit;

    double min_pos = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isfinite(weights[i]) && weights[i] > 0.0)
            min_pos = std::min(min_pos, weights[i]);
    }
    const double fallback = std::isfinite(min_pos) ? min_pos : 1.0;

    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = weights[i];
        if (!std::isfinite(w) || w <= 0.0) w = fallback;
        sw += w;
        swx += w * xs[i];
        swy += w * ys[i];
        swxx += w * xs[i] * xs[i];
        swxy += w * xs[i] * ys[i];
    }
    const double det = sw * swxx - swx * swx;
    if (det <= 0.0 || !std::isfinite(det)) return fit;

    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swxx * swy - swx * swxy) / det;

    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = weights[i];
        if (!std::isfinite(w) || w <= 0.0) w = fallback;
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        chi2 += w * r * r;
    }
    fit.chi2 = chi2;

    // Var(slope) = sw/det when weights are exact inverse variances. Scale by
    // the residual dispersion when it exceeds 1, so underestimated input SEs
    // (or the degenerate all-equal-weight fallback) still give honest CIs.
    double dispersion = 1.0;
    if (n > 2) dispersion = std::max(1.0, chi2 / static_cast<double>(n - 2));
    fit.slope_se = std::sqrt(dispersion * sw / det);
    fit.slope_ci95 = 1.96 * fit.slope_se;
    return fit;
}

} // namespace gwel::stats
