#pragma once

// Streaming Galton-Watson tree sampler.
//
// One iterative depth-first traversal of a depth-n realization computes, in
// a single pass and without materializing the tree:
//
//   * c_n      — the conductance between root and level n of the network
//                whose depth-d edges carry resistance m^d * xi. Computed
//                through the normalized bottom-up recursion
//                    g(x) = (1/m) sum_children g(y) / (1 + xi_y g(y)),
//                base value 1/xi at the sink level, which keeps every
//                intermediate quantity O(1) instead of O(m^n).
//   * w_hat    — m^-n * #T_n, the normalized sink-level population.
//   * bounds   — a flow upper bound on the resistance (unit flow
//                proportional to sink-level descendant counts) and the
//                cutset lower bound from per-level conductance sums.
//   * fluct    — optionally, the truncated fluctuation series
//                sum_{l<=L} m^-l sum_{|x|=l} w(x) (1 - xi_x w(x)/c1)
//                with w(x) = m^(|x|-n) #T_n[x].
//
// Live memory is O(n) frames (O(n^2) doubles in nested mode).

#include <cstdint>
#include <vector>

#include "gwel/laws.hpp"
#include "gwel/oracle.hpp"

namespace gwel {

struct TreeOptions {
    // Report the conductance at every level k <= n of the same realization
    // (c_levels). Default reports only depth n.
    bool nested = false;

    // Truncated fluctuation series: enabled when fluct_L >= 1; requires
    // fluct_L < n and c1 > 0.
    int fluct_L = 0;
    double c1 = 0.0;

    // Maximum admissible sink-level population. The expected value m^n is
    // checked up front, the realized count during the traversal; exceeding
    // either is an error, never a silent truncation.
    std::uint64_t node_budget = std::uint64_t(1) << 32;
};

struct TreeObservables {
    int depth = 0;
    std::uint64_t seed = 0;

    double c_n = 0.0;
    double w_hat = 0.0;
    std::uint64_t pop_n = 0;

    double thomson_upper = 0.0;       // >= 1/c_n
    double nash_williams_lower = 0.0; // <= 1/c_n

    bool has_fluct = false;
    double fluct_series = 0.0;

    std::vector<double> c_levels; // nested mode: c_levels[k-1] = C_k
};

// Pure function of (laws, n, opts, seed); safe to call concurrently.
TreeObservables sample_tree_observables(const OffspringLaw& off, const ResistanceLaw& res,
                                        int n, const TreeOptions& opts, std::uint64_t seed);

// The same realization as sample_tree_observables(off, res, n, ., seed),
// materialized as an explicit network with raw resistances m^d * xi. Root is
// vertex 0, sinks are the depth-n vertices. Intended for oracle-sized trees;
// node_cap guards against larger requests.
ExplicitNetwork export_explicit_tree(const OffspringLaw& off, const ResistanceLaw& res, int n,
                                     std::uint64_t seed, std::uint64_t node_cap = 200000);

} // namespace gwel
