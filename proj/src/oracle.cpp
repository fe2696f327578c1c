#include "gwel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <sstream>

#include "gwel/errors.hpp"
#include "gwel/parallel.hpp"
#include "gwel/rng.hpp"

namespace gwel {

namespace {

constexpr int kMaxDenseVertices = 20000;

struct Adjacency {
    // CSR-style neighbor lists with edge conductances.
    std::vector<int> offsets;
    std::vector<int> neighbor;
    std::vector<double> conductance;
};

Adjacency build_adjacency(const ExplicitNetwork& net) {
    Adjacency adj;
    adj.offsets.assign(net.vertex_count + 1, 0);
    for (const auto& e : net.edges) {
        if (e.u < 0 || e.u >= net.vertex_count || e.v < 0 || e.v >= net.vertex_count)
            throw InvalidConfig("network edge references vertex out of range");
        if (!(e.r > 0.0) || !std::isfinite(e.r))
            throw InvalidConfig("network edge resistance must be positive and finite");
        ++adj.offsets[e.u + 1];
        ++adj.offsets[e.v + 1];
    }
    for (int v = 0; v < net.vertex_count; ++v) adj.offsets[v + 1] += adj.offsets[v];
    adj.neighbor.resize(adj.offsets.back());
    adj.conductance.resize(adj.offsets.back());
    std::vector<int> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& e : net.edges) {
        const double c = 1.0 / e.r;
        adj.neighbor[cursor[e.u]] = e.v;
        adj.conductance[cursor[e.u]++] = c;
        adj.neighbor[cursor[e.v]] = e.u;
        adj.conductance[cursor[e.v]++] = c;
    }
    return adj;
}

void check_connected(const ExplicitNetwork& net, const Adjacency& adj) {
    std::vector<char> seen(net.vertex_count, 0);
    std::queue<int> frontier;
    frontier.push(net.source);
    seen[net.source] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        for (int i = adj.offsets[v]; i < adj.offsets[v + 1]; ++i) {
            const int w = adj.neighbor[i];
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                frontier.push(w);
            }
        }
    }
    if (reached != net.vertex_count)
        throw Disconnected("network is not connected (" + std::to_string(reached) + " of " +
                           std::to_string(net.vertex_count) + " vertices reachable)");
}

void validate(const ExplicitNetwork& net) {
    if (net.vertex_count < 2) throw InvalidConfig("network needs at least two vertices");
    if (net.sinks.empty()) throw InvalidConfig("network needs a non-empty sink set");
    for (int z : net.sinks)
        if (z == net.source) throw InvalidConfig("source must not belong to the sink set");
}

} // namespace

ExplicitNetwork parse_network(const std::string& text, int source, std::vector<int> sinks) {
    ExplicitNetwork net;
    net.source = source;
    net.sinks = std::move(sinks);
    std::istringstream in(text);
    std::string line;
    int max_vertex = source;
    for (int z : net.sinks) max_vertex = std::max(max_vertex, z);
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        int u, v;
        double r;
        if (!(fields >> u)) continue; // blank or comment-only line
        if (!(fields >> v >> r))
            throw InvalidConfig("network line " + std::to_string(line_no) +
                                ": expected 'u v r'");
        net.edges.push_back({u, v, r});
        max_vertex = std::max({max_vertex, u, v});
    }
    net.vertex_count = max_vertex + 1;
    return net;
}

double effective_resistance_laplacian(const ExplicitNetwork& net) {
    validate(net);
    if (net.vertex_count > kMaxDenseVertices)
        throw InvalidConfig("network too large for the dense solve (" +
                            std::to_string(net.vertex_count) + " vertices)");
    const Adjacency adj = build_adjacency(net);
    check_connected(net, adj);

    // Merge the sink set into one grounded node, then solve L v = e_source
    // for the reduced system (ground row/column removed). The potential at
    // the source is the effective resistance for unit injected current.
    std::vector<int> remap(net.vertex_count, -1);
    std::vector<char> is_sink(net.vertex_count, 0);
    for (int z : net.sinks) is_sink[z] = 1;
    int n_int = 0; // interior vertices, source included
    for (int v = 0; v < net.vertex_count; ++v)
        if (!is_sink[v]) remap[v] = n_int++;

    const int dim = n_int;
    std::vector<double> matrix(static_cast<std::size_t>(dim) * dim, 0.0);
    auto at = [&](int i, int j) -> double& {
        return matrix[static_cast<std::size_t>(i) * dim + j];
    };
    for (const auto& e : net.edges) {
        const double c = 1.0 / e.r;
        const int iu = is_sink[e.u] ? -1 : remap[e.u];
        const int iv = is_sink[e.v] ? -1 : remap[e.v];
        if (iu >= 0) at(iu, iu) += c;
        if (iv >= 0) at(iv, iv) += c;
        if (iu >= 0 && iv >= 0) {
            at(iu, iv) -= c;
            at(iv, iu) -= c;
        }
    }

    std::vector<double> rhs(dim, 0.0);
    rhs[remap[net.source]] = 1.0;

    // Gaussian elimination with partial pivoting.
    std::vector<int> perm(dim);
    for (int i = 0; i < dim; ++i) perm[i] = i;
    for (int col = 0; col < dim; ++col) {
        int pivot = col;
        double best = std::abs(at(col, col));
        for (int row = col + 1; row < dim; ++row) {
            const double cand = std::abs(at(row, col));
            if (cand > best) {
                best = cand;
                pivot = row;
            }
        }
        if (best < 1e-300)
            throw SingularSystem("Kirchhoff system is singular at column " +
                                 std::to_string(col));
        if (pivot != col) {
            for (int j = 0; j < dim; ++j) std::swap(at(pivot, j), at(col, j));
            std::swap(rhs[pivot], rhs[col]);
        }
        const double inv_piv = 1.0 / at(col, col);
        for (int row = col + 1; row < dim; ++row) {
            const double factor = at(row, col) * inv_piv;
            if (factor == 0.0) continue;
            at(row, col) = 0.0;
            for (int j = col + 1; j < dim; ++j) at(row, j) -= factor * at(col, j);
            rhs[row] -= factor * rhs[col];
        }
    }
    std::vector<double> solution(dim, 0.0);
    for (int row = dim - 1; row >= 0; --row) {
        double acc = rhs[row];
        for (int j = row + 1; j < dim; ++j) acc -= at(row, j) * solution[j];
        solution[row] = acc / at(row, row);
    }
    return solution[remap[net.source]];
}

double series_parallel_reduce(const ExplicitNetwork& net) {
    validate(net);
    if (static_cast<int>(net.edges.size()) != net.vertex_count - 1)
        throw NotATree("series-parallel reduction needs |E| = |V| - 1, got " +
                       std::to_string(net.edges.size()) + " edges");
    const Adjacency adj = build_adjacency(net);
    check_connected(net, adj); // connected + |E| = |V|-1 => tree

    // BFS from the root to orient edges and find depths.
    const int root = net.source;
    std::vector<int> parent(net.vertex_count, -1);
    std::vector<double> parent_r(net.vertex_count, 0.0);
    std::vector<int> depth(net.vertex_count, -1);
    std::vector<int> order;
    order.reserve(net.vertex_count);
    depth[root] = 0;
    order.push_back(root);
    for (std::size_t head = 0; head < order.size(); ++head) {
        const int v = order[head];
        for (int i = adj.offsets[v]; i < adj.offsets[v + 1]; ++i) {
            const int w = adj.neighbor[i];
            if (depth[w] < 0) {
                depth[w] = depth[v] + 1;
                parent[w] = v;
                parent_r[w] = 1.0 / adj.conductance[i];
                order.push_back(w);
            }
        }
    }

    int leaf_depth = -1;
    for (int v = 0; v < net.vertex_count; ++v) {
        const int degree = adj.offsets[v + 1] - adj.offsets[v];
        const bool leaf = (v != root) && degree == 1;
        if (!leaf) continue;
        if (leaf_depth < 0) leaf_depth = depth[v];
        if (depth[v] != leaf_depth)
            throw LeavesAtMixedDepth("tree leaves at depths " + std::to_string(leaf_depth) +
                                     " and " + std::to_string(depth[v]));
    }

    // Reduce children-first: R(v) = (sum_c 1/(r_edge(c) + R(c)))^-1, leaves 0.
    std::vector<double> subtree_r(net.vertex_count, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        double cond = 0.0;
        bool has_child = false;
        for (int i = adj.offsets[v]; i < adj.offsets[v + 1]; ++i) {
            const int w = adj.neighbor[i];
            if (parent[w] != v) continue;
            has_child = true;
            cond += 1.0 / (parent_r[w] + subtree_r[w]);
        }
        subtree_r[v] = has_child ? 1.0 / cond : 0.0;
    }
    return subtree_r[root];
}

WalkEstimate random_walk_conductance(const ExplicitNetwork& net, std::uint64_t trials,
                                     std::uint64_t seed) {
    validate(net);
    const Adjacency adj = build_adjacency(net);
    check_connected(net, adj);

    std::vector<char> is_sink(net.vertex_count, 0);
    for (int z : net.sinks) is_sink[z] = 1;

    // Per-vertex cumulative transition weights.
    std::vector<double> cum(adj.conductance.size());
    std::vector<double> pi(net.vertex_count, 0.0);
    for (int v = 0; v < net.vertex_count; ++v) {
        double acc = 0.0;
        for (int i = adj.offsets[v]; i < adj.offsets[v + 1]; ++i) {
            acc += adj.conductance[i];
            cum[i] = acc;
        }
        pi[v] = acc;
    }

    const int source = net.source;
    auto run_block = [&](std::uint64_t begin, std::uint64_t end) -> std::uint64_t {
        std::uint64_t hits = 0;
        for (std::uint64_t t = begin; t < end; ++t) {
            rng::Xoshiro256pp gen(rng::derive_seed(seed, t));
            int pos = source;
            for (;;) {
                const double target = gen.uniform01() * pi[pos];
                int lo = adj.offsets[pos];
                const int hi = adj.offsets[pos + 1];
                while (lo + 1 < hi && cum[lo] <= target) ++lo;
                pos = adj.neighbor[lo];
                if (is_sink[pos]) {
                    ++hits;
                    break;
                }
                if (pos == source) break;
            }
        }
        return hits;
    };

    // Integer escape counts fold exactly, so block results can be summed in
    // any order without breaking determinism.
    constexpr std::uint64_t kBlock = 4096;
    const std::uint64_t blocks = (trials + kBlock - 1) / kBlock;
    std::vector<std::uint64_t> block_hits(blocks, 0);
    parallel_for_blocks(trials, kBlock, [&](std::uint64_t b, std::uint64_t e) {
        block_hits[b / kBlock] = run_block(b, e);
    });
    std::uint64_t escapes = 0;
    for (std::uint64_t h : block_hits) escapes += h;

    WalkEstimate est;
    est.trials = trials;
    est.escapes = escapes;
    const double p = trials > 0 ? static_cast<double>(escapes) / static_cast<double>(trials) : 0.0;
    est.conductance = pi[source] * p;
    est.se = pi[source] * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    return est;
}

} // namespace gwel
