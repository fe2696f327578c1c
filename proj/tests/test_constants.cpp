#include <doctest.h>

#include <cmath>
#include <optional>

#include "gwel/constants.hpp"
#include "gwel/errors.hpp"
#include "gwel/rng.hpp"

using namespace gwel;

namespace {

OffspringLaw half12() { return OffspringLaw::create({1, 2}, {0.5, 0.5}); }

} // namespace

TEST_SUITE("constants") {

TEST_CASE("E[W^2] from the pmf") {
    CHECK(w_second_moment(OffspringLaw::deterministic(2)) == doctest::Approx(1.0));
    CHECK(w_second_moment(OffspringLaw::deterministic(3)) == doctest::Approx(1.0));
    // (2.5 - 1.5) / (1.5 * 0.5)
    CHECK(w_second_moment(half12()) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    // (5 - 2) / (2 * 1)
    CHECK(w_second_moment(OffspringLaw::create({1, 3}, {0.5, 0.5})) ==
          doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("Dubuc condition p1*m < 1") {
    CHECK(dubuc_condition(OffspringLaw::deterministic(2)));
    CHECK(dubuc_condition(half12())); // 0.75
    CHECK_FALSE(dubuc_condition(OffspringLaw::create({1, 5}, {0.8, 0.2}))); // 1.44
}

TEST_CASE("deterministic binary with unit resistance") {
    const auto k = expansion_constants(OffspringLaw::deterministic(2),
                                       ResistanceLaw::point_mass(1.0));
    CHECK(k.a1 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(k.c1 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(k.c4 == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("deterministic binary with uniform resistance") {
    const auto k = expansion_constants(OffspringLaw::deterministic(2),
                                       ResistanceLaw::uniform(0.5, 1.5));
    CHECK(k.c1 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(k.c2 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(k.c3 == doctest::Approx(0.0).epsilon(1e-14));
    // -Var[xi]/E[xi] with uniform variance 1/12
    CHECK(k.c4 == doctest::Approx(-1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("mixed offspring with unit resistance") {
    // Hand-computed from the defining formulas, cross-checked against
    // c1 = E[xi] E[W^2]:
    //   m = 3/2, a1 = 4/9, a2 = 0, c1 = 4/3, c2 = 32/15,
    //   c3 = 64/27 - 128/45 = -64/135, c4 = -4/3.
    const auto k = expansion_constants(half12(), ResistanceLaw::point_mass(1.0));
    CHECK(k.a1 == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
    CHECK(k.a2 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(k.c1 == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(k.c2 == doctest::Approx(32.0 / 15.0).epsilon(1e-14));
    CHECK(k.c3 == doctest::Approx(-64.0 / 135.0).epsilon(1e-12));
    CHECK(k.c3 == doctest::Approx(-0.4741).epsilon(1e-4));
    CHECK(k.c4 == doctest::Approx(-4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("identity c1 = E[xi] * E[W^2] across random law pairs") {
    rng::Xoshiro256pp gen(7);
    for (int trial = 0; trial < 200; ++trial) {
        // random pmf on a random support
        const int size = 2 + static_cast<int>(gen.uniform01() * 3);
        std::vector<int> support;
        std::vector<double> probs;
        double total = 0.0;
        for (int i = 0; i < size; ++i) {
            support.push_back(1 + static_cast<int>(gen.uniform01() * 6));
            probs.push_back(0.05 + gen.uniform01());
            total += probs.back();
        }
        for (auto& p : probs) p /= total;
        // exact renormalization to defeat the 1e-12 sum check
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) sum += probs[i];
        probs.back() = 1.0 - sum;

        std::optional<OffspringLaw> off;
        try {
            off = OffspringLaw::create(support, probs);
        } catch (const SubcriticalOrCritical&) {
            continue;
        }
        const double a = 0.1 + gen.uniform01();
        const auto res = ResistanceLaw::uniform(a, a + 0.5 + gen.uniform01());
        const auto k = expansion_constants(*off, res);
        const double rhs = res.mean_xi() * w_second_moment(*off);
        CHECK(std::abs(k.c1 - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("deterministic specialization holds for every det law") {
    rng::Xoshiro256pp gen(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 2 + static_cast<int>(gen.uniform01() * 5);
        const double v1 = 0.2 + gen.uniform01();
        const auto res = (trial % 2 == 0)
                             ? ResistanceLaw::uniform(v1, v1 + 1.0)
                             : ResistanceLaw::two_point(v1, 0.3, v1 + 2.0);
        const auto k = expansion_constants(OffspringLaw::deterministic(m), res);
        CHECK(std::abs(k.c2 - 1.0) <= 1e-12);
        CHECK(std::abs(k.c3) <= 1e-12);
        CHECK(std::abs(k.c4 - (k.b1 - k.b2 / k.b1)) <= 1e-12);
        CHECK(std::abs(k.c1 - k.b1) <= 1e-12);
    }
}

TEST_CASE("constants invariant under pmf representation changes") {
    const auto a = OffspringLaw::create({2, 3}, {0.5, 0.5});
    const auto b = OffspringLaw::create({3, 2, 2}, {0.5, 0.25, 0.25});
    const auto res = ResistanceLaw::uniform(0.5, 1.5);
    const auto ka = expansion_constants(a, res);
    const auto kb = expansion_constants(b, res);
    CHECK(ka.c1 == kb.c1);
    CHECK(ka.c2 == kb.c2);
    CHECK(ka.c3 == kb.c3);
    CHECK(ka.c4 == kb.c4);
}

} // TEST_SUITE
