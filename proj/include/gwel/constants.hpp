#pragma once

// Analytic constants of the conductance expansion.
//
// With a1 = E[nu(nu-1)]/m^2, a2 = E[nu(nu-1)(nu-2)]/m^3, b1 = E[xi] and
// b2 = E[xi^2]:
//
//   c1 = a1 b1 / (1 - 1/m)
//   c2 = (3 a1^2/(m-1) + a2) / (1 - 1/m^2)
//   c3 = 2 a1 c1/(m-1) - 2 b1 c2/m
//   c4 = b1/(1 - 1/m) (c3/c1 + a1) - b2 c2/c1
//
// E[C_n] behaves as 1/(c1 n) with a (c4/c1^2) log n / n^2 correction. For a
// deterministic offspring count these collapse to c1 = b1, c2 = 1, c3 = 0,
// c4 = b1 - b2/b1.

#include "gwel/laws.hpp"

namespace gwel {

struct ExpansionConstants {
    double a1 = 0.0;
    double a2 = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
};

// E[W^2] = (sum k^2 p_k - m) / (m (m - 1)) for the population martingale
// limit W; equals 1 exactly when nu is deterministic.
double w_second_moment(const OffspringLaw& off);

// True iff p1 * m < 1, which is equivalent to E[1/W] < infinity.
bool dubuc_condition(const OffspringLaw& off);

// Throws MissingMoment when the required resistance moments are not finite.
ExpansionConstants expansion_constants(const OffspringLaw& off, const ResistanceLaw& res);

} // namespace gwel
