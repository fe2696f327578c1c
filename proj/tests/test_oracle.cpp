#include <doctest.h>

#include <cmath>

#include "gwel/errors.hpp"
#include "gwel/oracle.hpp"
#include "gwel/rng.hpp"
#include "gwel/tree.hpp"

using namespace gwel;

namespace {

ExplicitNetwork series_path() {
    // 0 --1--> 1 --2--> 2
    ExplicitNetwork net;
    net.vertex_count = 3;
    net.source = 0;
    net.sinks = {2};
    net.edges = {{0, 1, 1.0}, {1, 2, 2.0}};
    return net;
}

OffspringLaw mixed_offspring(int which) {
    switch (which % 3) {
        case 0: return OffspringLaw::create({1, 2}, {0.5, 0.5});
        case 1: return OffspringLaw::create({1, 3}, {0.5, 0.5});
        default: return OffspringLaw::create({1, 2, 3}, {0.3, 0.4, 0.3});
    }
}

ResistanceLaw mixed_resistance(int which) {
    switch (which % 3) {
        case 0: return ResistanceLaw::uniform(0.5, 1.5);
        case 1: return ResistanceLaw::two_point(0.5, 0.5, 1.5);
        default: return ResistanceLaw::lognormal(0.0, 0.4);
    }
}

} // namespace

TEST_SUITE("oracle") {

TEST_CASE("series and parallel laws") {
    CHECK(effective_resistance_laplacian(series_path()) == doctest::Approx(3.0).epsilon(1e-14));

    ExplicitNetwork parallel;
    parallel.vertex_count = 2;
    parallel.source = 0;
    parallel.sinks = {1};
    parallel.edges = {{0, 1, 2.0}, {0, 1, 2.0}};
    CHECK(effective_resistance_laplacian(parallel) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("depth-1 binary star matches C_1 = 1") {
    // two edges of resistance m*xi = 2, in parallel: R = 1
    ExplicitNetwork star;
    star.vertex_count = 3;
    star.source = 0;
    star.sinks = {1, 2};
    star.edges = {{0, 1, 2.0}, {0, 2, 2.0}};
    CHECK(effective_resistance_laplacian(star) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(series_parallel_reduce(star) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("series-parallel reduction: trivial shapes") {
    CHECK(series_parallel_reduce(series_path()) == doctest::Approx(3.0).epsilon(1e-14));

    ExplicitNetwork fork;
    fork.vertex_count = 3;
    fork.source = 0;
    fork.sinks = {1, 2};
    fork.edges = {{0, 1, 3.0}, {0, 2, 6.0}};
    CHECK(series_parallel_reduce(fork) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("validation errors") {
    ExplicitNetwork disconnected;
    disconnected.vertex_count = 4;
    disconnected.source = 0;
    disconnected.sinks = {1};
    disconnected.edges = {{0, 1, 1.0}, {2, 3, 1.0}};
    CHECK_THROWS_AS(effective_resistance_laplacian(disconnected), Disconnected);

    ExplicitNetwork cycle;
    cycle.vertex_count = 3;
    cycle.source = 0;
    cycle.sinks = {2};
    cycle.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}};
    CHECK_THROWS_AS(series_parallel_reduce(cycle), NotATree);

    ExplicitNetwork mixed_leaves;
    mixed_leaves.vertex_count = 4;
    mixed_leaves.source = 0;
    mixed_leaves.sinks = {3};
    mixed_leaves.edges = {{0, 1, 1.0}, {0, 2, 1.0}, {2, 3, 1.0}};
    CHECK_THROWS_AS(series_parallel_reduce(mixed_leaves), LeavesAtMixedDepth);

    ExplicitNetwork bad_source;
    bad_source.vertex_count = 2;
    bad_source.source = 0;
    bad_source.sinks = {0, 1};
    bad_source.edges = {{0, 1, 1.0}};
    CHECK_THROWS_AS(effective_resistance_laplacian(bad_source), InvalidConfig);
}

TEST_CASE("text format parses and solves") {
    const auto net = parse_network("0 1 1.0\n1 2 2.0 # tail\n\n", 0, {2});
    CHECK(net.vertex_count == 3);
    CHECK(net.edges.size() == 2);
    CHECK(effective_resistance_laplacian(net) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK_THROWS_AS(parse_network("0 1\n", 0, {1}), InvalidConfig);
}

TEST_CASE("triple agreement on random GW trees") {
    // engine recursion vs Kirchhoff solve vs series-parallel reduction
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto off = mixed_offspring(trial);
        const auto res = mixed_resistance(trial / 3);
        const int depth = 1 + trial % 5;
        const std::uint64_t seed = rng::derive_seed(999, trial);

        const auto net = export_explicit_tree(off, res, depth, seed);
        const TreeObservables obs =
            sample_tree_observables(off, res, depth, TreeOptions{}, seed);

        const double r_lap = effective_resistance_laplacian(net);
        const double r_red = series_parallel_reduce(net);
        CHECK(std::abs(r_lap - r_red) <= 1e-12 * r_lap);
        CHECK(std::abs(obs.c_n - 1.0 / r_lap) <= 1e-10 * obs.c_n);
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("random walk: deterministic binary depth 2") {
    const auto off = OffspringLaw::deterministic(2);
    const auto res = ResistanceLaw::point_mass(1.0);
    const auto net = export_explicit_tree(off, res, 2, 5);
    const auto walk = random_walk_conductance(net, 100000, 17);
    // true C_2 = 1/2
    CHECK(std::abs(walk.conductance - 0.5) <= 3.0 * walk.se);
}

TEST_CASE("random walk: single-edge escape probability is 1") {
    ExplicitNetwork single;
    single.vertex_count = 2;
    single.source = 0;
    single.sinks = {1};
    single.edges = {{0, 1, 4.0}};
    const auto walk = random_walk_conductance(single, 1000, 3);
    CHECK(walk.escapes == walk.trials);
    CHECK(walk.conductance == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(walk.se == 0.0);
}

TEST_CASE("random walk agrees with the engine on sampled trees") {
    for (int trial = 0; trial < 4; ++trial) {
        const auto off = mixed_offspring(trial);
        const auto res = mixed_resistance(trial);
        const std::uint64_t seed = rng::derive_seed(31337, trial);
        const auto net = export_explicit_tree(off, res, 4, seed);
        const auto obs = sample_tree_observables(off, res, 4, TreeOptions{}, seed);
        const auto walk = random_walk_conductance(net, 100000, rng::derive_seed(seed, 1));
        CHECK(std::abs(walk.conductance - obs.c_n) <= 3.0 * walk.se + 1e-12);
    }
}

TEST_CASE("Rayleigh monotonicity under single-edge increases") {
    rng::Xoshiro256pp gen(2024);
    for (int trial = 0; trial < 25; ++trial) {
        const auto off = mixed_offspring(trial);
        const auto res = mixed_resistance(trial + 1);
        auto net = export_explicit_tree(off, res, 3, rng::derive_seed(5, trial));
        const double base = 1.0 / effective_resistance_laplacian(net);
        const std::size_t edge = static_cast<std::size_t>(gen.uniform01() * net.edges.size());
        net.edges[edge].r *= 1.0 + 2.0 * gen.uniform01();
        const double bumped = 1.0 / effective_resistance_laplacian(net);
        CHECK(bumped <= base * (1.0 + 1e-12));
    }
}

TEST_CASE("resistance scales linearly") {
    const auto off = OffspringLaw::create({1, 2}, {0.5, 0.5});
    const auto res = ResistanceLaw::uniform(0.5, 1.5);
    for (int trial = 0; trial < 10; ++trial) {
        auto net = export_explicit_tree(off, res, 4, rng::derive_seed(8, trial));
        const double base = effective_resistance_laplacian(net);
        const double s = 3.25;
        for (auto& e : net.edges) e.r *= s;
        const double scaled = effective_resistance_laplacian(net);
        CHECK(std::abs(scaled - s * base) <= 1e-12 * scaled);
    }
}

} // TEST_SUITE
