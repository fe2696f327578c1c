#pragma once

// Offspring and edge-resistance laws.
//
// Offspring laws have finite support with p0 = 0 and mean m > 1; all
// factorial moments are exact finite sums. Resistance laws are restricted to
// families with closed-form moments so tests have analytic ground truth.

#include <cstdint>
#include <string>
#include <vector>

#include "gwel/rng.hpp"

namespace gwel {

class OffspringLaw {
public:
    // Validates and normalizes the pmf representation: entries with the same
    // support point are merged, the support is sorted. Throws InvalidPmf,
    // ZeroOffspring or SubcriticalOrCritical.
    static OffspringLaw create(std::vector<int> support, std::vector<double> probs);

    // Convenience for a deterministic offspring count.
    static OffspringLaw deterministic(int k) { return create({k}, {1.0}); }

    double mean() const { return mean_; }
    double p1() const { return p1_; }
    int min_support() const { return support_.front(); }
    int max_support() const { return support_.back(); }
    bool is_deterministic() const { return support_.size() == 1; }

    const std::vector<int>& support() const { return support_; }
    const std::vector<double>& probs() const { return probs_; }
    // cum()[i] is the cumulative probability through support()[i]; the last
    // entry is forced to exactly 1.
    const std::vector<double>& cum() const { return cum_; }

    // E[nu * (nu-1) * ... * (nu-k+1)] as an exact sum, k in 1..4.
    double factorial_moment(int k) const;
    double second_moment() const; // E[nu^2]

    int sample_u01(double u) const {
        std::size_t i = 0;
        while (i + 1 < cum_.size() && u >= cum_[i]) ++i;
        return support_[i];
    }

    int sample(rng::Xoshiro256pp& gen) const {
        if (support_.size() == 1) return support_[0];
        return sample_u01(gen.uniform01());
    }

private:
    OffspringLaw() = default;

    std::vector<int> support_;
    std::vector<double> probs_;
    std::vector<double> cum_;
    double mean_ = 0.0;
    double p1_ = 0.0;
};

enum class ResistanceFamily { PointMass, Uniform, TwoPoint, LogNormal };

class ResistanceLaw {
public:
    static ResistanceLaw point_mass(double value);
    static ResistanceLaw uniform(double a, double b); // requires 0 < a < b
    static ResistanceLaw two_point(double v1, double q, double v2);
    static ResistanceLaw lognormal(double mu, double sigma);

    ResistanceFamily family() const { return family_; }
    std::string family_name() const;

    double mean_xi() const { return b1_; }       // E[xi]
    double mean_xi2() const { return b2_; }      // E[xi^2]
    double mean_xi3() const { return b3_; }      // E[xi^3]
    double mean_inv_xi() const { return inv_; }  // E[1/xi]
    double variance() const { return b2_ - b1_ * b1_; }

    // Family parameters, meaning depends on family():
    //   PointMass: p0 = value
    //   Uniform:   p0 = a, p1 = b
    //   TwoPoint:  p0 = v1, p1 = q, p2 = v2
    //   LogNormal: p0 = mu, p1 = sigma
    double param(int i) const { return params_[i]; }

    // Inverse-CDF style transform of a uniform in [0, 1). Strictly positive
    // for every admissible u. The pool kernels reimplement the first three
    // families with identical arithmetic; equivalence tests pin that.
    double sample_u01(double u) const;

    double sample(rng::Xoshiro256pp& gen) const {
        if (family_ == ResistanceFamily::PointMass) return params_[0];
        return sample_u01(gen.uniform01());
    }

    bool is_point_mass() const { return family_ == ResistanceFamily::PointMass; }

private:
    ResistanceLaw() = default;

    ResistanceFamily family_ = ResistanceFamily::PointMass;
    double params_[3] = {0, 0, 0};
    double b1_ = 0, b2_ = 0, b3_ = 0, inv_ = 0;
};

// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9
// absolute error), used by the lognormal sampler.
double inverse_normal_cdf(double u);

} // namespace gwel
