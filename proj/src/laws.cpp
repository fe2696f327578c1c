#include "gwel/laws.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gwel/errors.hpp"

namespace gwel {

OffspringLaw OffspringLaw::create(std::vector<int> support, std::vector<double> probs) {
    if (support.empty() || probs.empty())
        throw InvalidPmf("offspring law: empty support or probability list");
    if (support.size() != probs.size())
        throw InvalidPmf("offspring law: support and probs differ in length");

    // Merge duplicate support points so equivalent representations of the
    // same pmf produce identical laws.
    std::map<int, double> merged;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (probs[i] < 0.0)
            throw InvalidPmf("offspring law: negative probability at support " +
                             std::to_string(support[i]));
        merged[support[i]] += probs[i];
    }
    for (const auto& [k, p] : merged) {
        if (k == 0 && p > 0.0)
            throw ZeroOffspring("offspring law: p0 must be 0");
        if (k <= 0)
            throw InvalidPmf("offspring law: support must be positive integers");
    }

    OffspringLaw law;
    double total = 0.0;
    for (const auto& [k, p] : merged) {
        law.support_.push_back(k);
        law.probs_.push_back(p);
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw InvalidPmf("offspring law: probabilities sum to " + std::to_string(total) +
                         ", not 1 (renormalization refused)");

    double m = 0.0;
    for (std::size_t i = 0; i < law.support_.size(); ++i)
        m += law.support_[i] * law.probs_[i];
    if (m <= 1.0)
        throw SubcriticalOrCritical("offspring law: mean " + std::to_string(m) +
                                    " is not supercritical (need m > 1)");
    law.mean_ = m;

    for (std::size_t i = 0; i < law.support_.size(); ++i)
        if (law.support_[i] == 1) law.p1_ = law.probs_[i];

    law.cum_.resize(law.probs_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < law.probs_.size(); ++i) {
        acc += law.probs_[i];
        law.cum_[i] = acc;
    }
    law.cum_.back() = 1.0;
    return law;
}

double OffspringLaw::factorial_moment(int k) const {
    if (k < 1 || k > 4)
        throw InvalidOption("factorial_moment: k must be in 1..4, got " + std::to_string(k));
    double sum = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        double term = 1.0;
        for (int j = 0; j < k; ++j) term *= static_cast<double>(support_[i] - j);
        sum += term * probs_[i];
    }
    return sum;
}

double OffspringLaw::second_moment() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i)
        sum += static_cast<double>(support_[i]) * support_[i] * probs_[i];
    return sum;
}

ResistanceLaw ResistanceLaw::point_mass(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw InvalidConfig("resistance law: point mass value must be positive and finite");
    ResistanceLaw law;
    law.family_ = ResistanceFamily::PointMass;
    law.params_[0] = value;
    law.b1_ = value;
    law.b2_ = value * value;
    law.b3_ = value * value * value;
    law.inv_ = 1.0 / value;
    return law;
}

ResistanceLaw ResistanceLaw::uniform(double a, double b) {
    if (!(a > 0.0) || !(b > a))
        throw InvalidConfig("resistance law: uniform requires 0 < a < b");
    ResistanceLaw law;
    law.family_ = ResistanceFamily::Uniform;
    law.params_[0] = a;
    law.params_[1] = b;
    law.b1_ = 0.5 * (a + b);
    law.b2_ = (a * a + a * b + b * b) / 3.0;
    law.b3_ = (a * a * a + a * a * b + a * b * b + b * b * b) / 4.0;
    law.inv_ = std::log(b / a) / (b - a);
    return law;
}

ResistanceLaw ResistanceLaw::two_point(double v1, double q, double v2) {
    if (!(v1 > 0.0) || !(v2 > 0.0))
        throw InvalidConfig("resistance law: two-point values must be positive");
    if (!(q >= 0.0) || !(q <= 1.0))
        throw InvalidConfig("resistance law: two-point weight q must lie in [0, 1]");
    ResistanceLaw law;
    law.family_ = ResistanceFamily::TwoPoint;
    law.params_[0] = v1;
    law.params_[1] = q;
    law.params_[2] = v2;
    const double p2 = 1.0 - q;
    law.b1_ = q * v1 + p2 * v2;
    law.b2_ = q * v1 * v1 + p2 * v2 * v2;
    law.b3_ = q * v1 * v1 * v1 + p2 * v2 * v2 * v2;
    law.inv_ = q / v1 + p2 / v2;
    return law;
}

ResistanceLaw ResistanceLaw::lognormal(double mu, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma))
        throw InvalidConfig("resistance law: lognormal requires finite mu and sigma > 0");
    ResistanceLaw law;
    law.family_ = ResistanceFamily::LogNormal;
    law.params_[0] = mu;
    law.params_[1] = sigma;
    const double s2 = sigma * sigma;
    law.b1_ = std::exp(mu + 0.5 * s2);
    law.b2_ = std::exp(2.0 * mu + 2.0 * s2);
    law.b3_ = std::exp(3.0 * mu + 4.5 * s2);
    law.inv_ = std::exp(-mu + 0.5 * s2);
    return law;
}

std::string ResistanceLaw::family_name() const {
    switch (family_) {
        case ResistanceFamily::PointMass: return "point_mass";
        case ResistanceFamily::Uniform: return "uniform";
        case ResistanceFamily::TwoPoint: return "two_point";
        case ResistanceFamily::LogNormal: return "lognormal";
    }
    return "unknown";
}

double ResistanceLaw::sample_u01(double u) const {
    switch (family_) {
        case ResistanceFamily::PointMass:
            return params_[0];
        case ResistanceFamily::Uniform:
            return params_[0] + u * (params_[1] - params_[0]);
        case ResistanceFamily::TwoPoint:
            return u < params_[1] ? params_[0] : params_[2];
        case ResistanceFamily::LogNormal: {
            // Clamp away from the endpoints; u = 0 would map to 0.
            const double clamped = std::min(std::max(u, 0x1.0p-53), 1.0 - 0x1.0p-53);
            return std::exp(params_[0] + params_[1] * inverse_normal_cdf(clamped));
        }
    }
    return params_[0];
}

double inverse_normal_cdf(double u) {
    // Acklam's rational approximation with central/tail split.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double p_low = 0.02425;
    double x;
    if (u < p_low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - p_low) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    return x;
}

} // namespace gwel
