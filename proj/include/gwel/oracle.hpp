#pragma once

// Ground-truth computations on small explicit networks. These are kept
// simple and independent of the streaming tree engine so they can arbitrate
// it: a dense Kirchhoff solve, a leaf-up series-parallel reduction, and a
// hitting-probability random walk.

#include <cstdint>
#include <string>
#include <vector>

namespace gwel {

struct ExplicitNetwork {
    struct Edge {
        int u = 0;
        int v = 0;
        double r = 0.0;
    };

    int vertex_count = 0;
    int source = 0;
    std::vector<int> sinks;
    std::vector<Edge> edges;
};

// Parses the one-edge-per-line text format "u v r". Vertices are 0-based;
// source/sinks are supplied by the caller.
ExplicitNetwork parse_network(const std::string& text, int source, std::vector<int> sinks);

// Effective resistance between source and the (merged) sink set via a dense
// Gaussian-elimination solve of the Kirchhoff system with unit current
// injection. Throws Disconnected or SingularSystem.
double effective_resistance_laplacian(const ExplicitNetwork& net);

// Leaf-up reduction R(x) = (sum_children 1/(r_edge + R(child)))^-1 for a
// rooted tree whose leaves all lie at one depth. Throws NotATree or
// LeavesAtMixedDepth.
double series_parallel_reduce(const ExplicitNetwork& net);

struct WalkEstimate {
    double conductance = 0.0; // pi(source) * escape frequency
    double se = 0.0;          // binomial standard error, same units
    std::uint64_t escapes = 0;
    std::uint64_t trials = 0;
};

// Conductance-weighted walk from the source; a trial succeeds when the walk
// reaches the sink set before returning to the source.
WalkEstimate random_walk_conductance(const ExplicitNetwork& net, std::uint64_t trials,
                                     std::uint64_t seed);

} // namespace gwel
