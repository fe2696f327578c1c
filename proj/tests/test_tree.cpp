#include <doctest.h>

#include <cmath>
#include <cstring>
#include <map>

#include "gwel/constants.hpp"
#include "gwel/errors.hpp"
#include "gwel/rng.hpp"
#include "gwel/tree.hpp"

using namespace gwel;

namespace {

const auto kDet2 = OffspringLaw::deterministic(2);
const auto kUnitXi = ResistanceLaw::point_mass(1.0);

} // namespace

TEST_SUITE("tree") {

TEST_CASE("symmetric case: C_n = 1/n exactly") {
    for (int m : {2, 3}) {
        const auto off = OffspringLaw::deterministic(m);
        for (int n : {1, 2, 5, 10}) {
            const auto obs = sample_tree_observables(off, kUnitXi, n, TreeOptions{}, 99);
            CHECK(std::abs(obs.c_n - 1.0 / n) < 1e-12);
            CHECK(obs.w_hat == 1.0);
        }
    }
}

TEST_CASE("symmetric case: both bounds equal R_n") {
    const auto obs = sample_tree_observables(kDet2, kUnitXi, 3, TreeOptions{}, 1);
    CHECK(obs.thomson_upper == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(obs.nash_williams_lower == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("depth-1 Thomson bound is exactly R_1") {
    const auto obs = sample_tree_observables(kDet2, kUnitXi, 1, TreeOptions{}, 7);
    // C_1 = 1, Theta = 1/2 on both edges: sum m xi Theta^2 = 2*2*(1/4) = 1
    CHECK(obs.c_n == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(obs.thomson_upper == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("bound sandwich holds on every sampled realization") {
    const auto off = OffspringLaw::create({1, 2, 3}, {0.3, 0.4, 0.3});
    const auto res = ResistanceLaw::two_point(0.5, 0.5, 1.5);
    for (int t = 0; t < 500; ++t) {
        const auto obs =
            sample_tree_observables(off, res, 6, TreeOptions{}, rng::derive_seed(123, t));
        const double r = 1.0 / obs.c_n;
        CHECK(obs.nash_williams_lower <= r * (1.0 + 1e-12));
        CHECK(obs.thomson_upper >= r * (1.0 - 1e-12));
        CHECK(obs.c_n > 0.0);
        CHECK(obs.w_hat > 0.0);
        // population between (min support)^n and (max support)^n
        CHECK(obs.pop_n >= 1);
        CHECK(obs.pop_n <= static_cast<std::uint64_t>(std::pow(3.0, 6)) );
    }
}

TEST_CASE("nested mode: per-level conductances are monotone") {
    const auto off = OffspringLaw::create({1, 3}, {0.5, 0.5});
    const auto res = ResistanceLaw::uniform(0.5, 1.5);
    TreeOptions opts;
    opts.nested = true;
    for (int t = 0; t < 50; ++t) {
        const auto obs = sample_tree_observables(off, res, 10, opts, rng::derive_seed(77, t));
        REQUIRE(obs.c_levels.size() == 10);
        for (std::size_t k = 1; k < obs.c_levels.size(); ++k)
            CHECK(obs.c_levels[k] <= obs.c_levels[k - 1] * (1.0 + 1e-12));
        CHECK(obs.c_n == obs.c_levels.back());
    }
}

TEST_CASE("nested and single modes agree bitwise on c_n") {
    const auto off = OffspringLaw::create({1, 2}, {0.5, 0.5});
    const auto res = ResistanceLaw::uniform(0.5, 1.5);
    TreeOptions nested;
    nested.nested = true;
    for (int t = 0; t < 20; ++t) {
        const std::uint64_t seed = rng::derive_seed(4242, t);
        const auto a = sample_tree_observables(off, res, 8, TreeOptions{}, seed);
        const auto b = sample_tree_observables(off, res, 8, nested, seed);
        CHECK(a.c_n == b.c_n);
        CHECK(a.pop_n == b.pop_n);
        CHECK(a.thomson_upper == b.thomson_upper);
        CHECK(a.nash_williams_lower == b.nash_williams_lower);
    }
}

TEST_CASE("determinism: identical inputs give identical observables") {
    const auto off = OffspringLaw::create({1, 2, 3}, {0.25, 0.5, 0.25});
    const auto res = ResistanceLaw::lognormal(0.0, 0.3);
    const auto a = sample_tree_observables(off, res, 9, TreeOptions{}, 555);
    const auto b = sample_tree_observables(off, res, 9, TreeOptions{}, 555);
    CHECK(a.c_n == b.c_n);
    CHECK(a.w_hat == b.w_hat);
    CHECK(a.pop_n == b.pop_n);
    CHECK(a.thomson_upper == b.thomson_upper);
    CHECK(a.nash_williams_lower == b.nash_williams_lower);
    const auto c = sample_tree_observables(off, res, 9, TreeOptions{}, 556);
    CHECK(a.c_n != c.c_n);
}

TEST_CASE("export matches the streamed realization") {
    const auto off = OffspringLaw::create({1, 2}, {0.5, 0.5});
    const auto res = ResistanceLaw::uniform(0.5, 1.5);
    for (int t = 0; t < 30; ++t) {
        const std::uint64_t seed = rng::derive_seed(31, t);
        const auto obs = sample_tree_observables(off, res, 5, TreeOptions{}, seed);
        const auto net = export_explicit_tree(off, res, 5, seed);
        CHECK(net.sinks.size() == obs.pop_n);
        CHECK(net.edges.size() + 1 == static_cast<std::size_t>(net.vertex_count));
    }
}

TEST_CASE("fluctuation series: degenerate case is identically zero") {
    TreeOptions opts;
    opts.fluct_L = 3;
    opts.c1 = 1.0;
    const auto obs = sample_tree_observables(kDet2, kUnitXi, 8, opts, 12);
    REQUIRE(obs.has_fluct);
    CHECK(obs.fluct_series == 0.0);
}

TEST_CASE("fluctuation series: L=1 matches the closed formula") {
    const auto off = kDet2;
    const auto res = ResistanceLaw::uniform(0.5, 1.5);
    const auto consts = expansion_constants(off, res);
    const int n = 6;
    TreeOptions opts;
    opts.fluct_L = 1;
    opts.c1 = consts.c1;

    for (int t = 0; t < 10; ++t) {
        const std::uint64_t seed = rng::derive_seed(606, t);
        const auto obs = sample_tree_observables(off, res, n, opts, seed);
        const auto net = export_explicit_tree(off, res, n, seed);

        // Reconstruct per-child sink counts and edge xi from the explicit
        // network. Depth-1 edges have resistance m * xi.
        std::map<int, int> parent;
        std::map<int, std::vector<int>> children;
        std::map<int, double> edge_r;
        for (const auto& e : net.edges) {
            parent[e.v] = e.u;
            children[e.u].push_back(e.v);
            edge_r[e.v] = e.r;
        }
        const double m = off.mean();
        double series = 0.0;
        for (int child : children[0]) {
            // count sinks below this child
            std::uint64_t count = 0;
            for (int s : net.sinks) {
                int v = s;
                while (parent.count(v) && parent[v] != 0) v = parent[v];
                if (v == child) ++count;
            }
            const double w = static_cast<double>(count) * std::pow(m, 1 - n);
            const double xi = edge_r[child] / m;
            series += w * (1.0 - xi * w / consts.c1);
        }
        series /= m;
        CHECK(obs.fluct_series == doctest::Approx(series).epsilon(1e-12));
    }
}

TEST_CASE("option validation") {
    TreeOptions opts;
    opts.fluct_L = 8;
    opts.c1 = 1.0;
    CHECK_THROWS_AS(sample_tree_observables(kDet2, kUnitXi, 8, opts, 1), TruncationTooDeep);
    opts.fluct_L = 2;
    opts.c1 = 0.0;
    CHECK_THROWS_AS(sample_tree_observables(kDet2, kUnitXi, 8, opts, 1), InvalidOption);
    CHECK_THROWS_AS(sample_tree_observables(kDet2, kUnitXi, 0, TreeOptions{}, 1),
                    InvalidOption);
}

TEST_CASE("node budget: projected and realized overflow") {
    TreeOptions opts;
    opts.node_budget = 1000;
    // projected: 2^11 > 1000
    CHECK_THROWS_AS(sample_tree_observables(kDet2, kUnitXi, 11, opts, 1), DepthOverflow);
    // realized: mean^n fits but a heavy realization can cross the budget
    const auto off = OffspringLaw::create({1, 6}, {0.9, 0.1});
    TreeOptions tight;
    tight.node_budget = 40; // mean^6 ~ 11.4, heavy tail can exceed 40 sinks
    bool tripped = false;
    for (int t = 0; t < 200 && !tripped; ++t) {
        try {
            sample_tree_observables(off, kUnitXi, 6, tight, rng::derive_seed(3, t));
        } catch (const DepthOverflow&) {
            tripped = true;
        }
    }
    CHECK(tripped);
}

TEST_CASE("w_hat is the normalized sink population") {
    const auto off = OffspringLaw::create({1, 2}, {0.5, 0.5});
    const auto obs = sample_tree_observables(off, kUnitXi, 12, TreeOptions{}, 2026);
    CHECK(obs.w_hat ==
          doctest::Approx(static_cast<double>(obs.pop_n) / std::pow(1.5, 12)).epsilon(1e-15));
}

} // TEST_SUITE
