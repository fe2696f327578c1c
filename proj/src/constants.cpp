#include "gwel/constants.hpp"

#include <cmath>

#include "gwel/errors.hpp"

namespace gwel {

double w_second_moment(const OffspringLaw& off) {
    const double m = off.mean();
    return (off.second_moment() - m) / (m * (m - 1.0));
}

bool dubuc_condition(const OffspringLaw& off) {
    return off.p1() * off.mean() < 1.0;
}

ExpansionConstants expansion_constants(const OffspringLaw& off, const ResistanceLaw& res) {
    ExpansionConstants k;
    k.b1 = res.mean_xi();
    k.b2 = res.mean_xi2();
    if (!std::isfinite(k.b1) || !std::isfinite(k.b2))
        throw MissingMoment("expansion constants require finite E[xi] and E[xi^2]");

    const double m = off.mean();
    k.a1 = off.factorial_moment(2) / (m * m);
    k.a2 = off.factorial_moment(3) / (m * m * m);
    k.c1 = k.a1 * k.b1 / (1.0 - 1.0 / m);
    k.c2 = (3.0 * k.a1 * k.a1 / (m - 1.0) + k.a2) / (1.0 - 1.0 / (m * m));
    k.c3 = 2.0 * k.a1 * k.c1 / (m - 1.0) - 2.0 * k.b1 * k.c2 / m;
    k.c4 = k.b1 / (1.0 - 1.0 / m) * (k.c3 / k.c1 + k.a1) - k.b2 * k.c2 / k.c1;
    return k;
}

} // namespace gwel
