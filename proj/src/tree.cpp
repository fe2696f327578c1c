#include "gwel/tree.hpp"

#include <cmath>
#include <cstring>

#include "gwel/errors.hpp"
#include "gwel/rng.hpp"

namespace gwel {

namespace {

// Draw discipline, shared with export_explicit_tree: entering a vertex of
// depth d < n draws its offspring count; each child edge then draws its xi
// immediately before the child is entered. Changing this order changes every
// realization, and the oracle cross-checks would fail loudly.

struct GeneralNu {
    const OffspringLaw& law;
    int operator()(rng::Xoshiro256pp& gen) const { return law.sample_u01(gen.uniform01()); }
};

struct FixedNu {
    int value;
    int operator()(rng::Xoshiro256pp&) const { return value; }
};

struct XiEta {
    double xi;
    double eta;
};

struct GeneralXi {
    const ResistanceLaw& law;
    XiEta operator()(rng::Xoshiro256pp& gen) const {
        const double xi = law.sample_u01(gen.uniform01());
        return {xi, 1.0 / xi};
    }
};

struct FixedXi {
    double xi;
    double eta;
    XiEta operator()(rng::Xoshiro256pp&) const { return {xi, eta}; }
};

struct Frame {
    double acc = 0.0;      // single mode: sum of child contributions
    double xi_in = 0.0;    // xi on the edge into this vertex
    double eta_in = 0.0;   // 1 / xi_in
    std::uint64_t sink_descendants = 0;
    int remaining = 0;     // children not yet expanded
};

template <bool Nested, class NuFn, class XiFn>
TreeObservables traverse(NuFn draw_nu, XiFn draw_xi, double m, int n, const TreeOptions& opts,
                         std::uint64_t seed) {
    rng::Xoshiro256pp gen(seed);

    const double inv_m = 1.0 / m;
    const int fluct_L = opts.fluct_L;
    const double inv_c1 = fluct_L >= 1 ? 1.0 / opts.c1 : 0.0;

    std::vector<double> pow_m(n + 1);
    pow_m[0] = 1.0;
    for (int k = 1; k <= n; ++k) pow_m[k] = pow_m[k - 1] * m;
    std::vector<double> w_scale(n + 1, 0.0); // m^(d-n)
    for (int d = 0; d <= n; ++d) w_scale[d] = pow_m[d] / pow_m[n];

    std::vector<Frame> frames(n + 1);
    // Nested mode: frame at depth d owns slots k = d+1..n of its slab row.
    const int stride = Nested ? (n + 1) : 0;
    std::vector<double> slab(Nested ? static_cast<std::size_t>(n + 1) * (n + 1) : 0, 0.0);

    std::vector<double> nw_eta(n + 1, 0.0);      // per level: sum of 1/xi
    std::vector<double> thomson_acc(n + 1, 0.0); // per level: sum of xi * count^2
    std::vector<double> fluct_acc(fluct_L >= 1 ? fluct_L + 1 : 0, 0.0);

    std::uint64_t sink_count = 0;
    const std::uint64_t budget = opts.node_budget;

    frames[0].remaining = draw_nu(gen);
    if constexpr (Nested)
        std::memset(slab.data() + 1, 0, static_cast<std::size_t>(n) * sizeof(double));

    int depth = 0;
    TreeObservables out;
    for (;;) {
        Frame& f = frames[depth];
        if (f.remaining == 0) {
            if (depth == 0) break;
            Frame& parent = frames[depth - 1];
            if constexpr (Nested) {
                double* own = slab.data() + static_cast<std::size_t>(depth) * stride;
                double* up = slab.data() + static_cast<std::size_t>(depth - 1) * stride;
                up[depth] += f.eta_in;
                const double xi = f.xi_in;
                for (int k = depth + 1; k <= n; ++k) {
                    const double g = own[k] * inv_m;
                    up[k] += g / (1.0 + xi * g);
                }
            } else {
                const double g = f.acc * inv_m;
                parent.acc += g / (1.0 + f.xi_in * g);
            }
            parent.sink_descendants += f.sink_descendants;
            thomson_acc[depth] +=
                f.xi_in * static_cast<double>(f.sink_descendants) *
                static_cast<double>(f.sink_descendants);
            if (fluct_L >= 1 && depth <= fluct_L) {
                const double w = static_cast<double>(f.sink_descendants) * w_scale[depth];
                fluct_acc[depth] += w * (1.0 - f.xi_in * w * inv_c1);
            }
            --depth;
            continue;
        }

        if (depth + 1 == n) {
            // Children are sink-level vertices: drain them in one batch.
            const int kids = f.remaining;
            f.remaining = 0;
            double eta_sum = 0.0;
            double xi_sum = 0.0;
            for (int i = 0; i < kids; ++i) {
                const XiEta draw = draw_xi(gen);
                eta_sum += draw.eta;
                xi_sum += draw.xi;
            }
            nw_eta[n] += eta_sum;
            thomson_acc[n] += xi_sum;
            if constexpr (Nested)
                slab[static_cast<std::size_t>(depth) * stride + n] += eta_sum;
            else
                f.acc += eta_sum;
            f.sink_descendants += static_cast<std::uint64_t>(kids);
            sink_count += static_cast<std::uint64_t>(kids);
            if (sink_count > budget)
                throw DepthOverflow("sink-level population exceeded the node budget of " +
                                    std::to_string(budget));
            continue;
        }

        --f.remaining;
        const XiEta draw = draw_xi(gen);
        nw_eta[depth + 1] += draw.eta;
        ++depth;
        Frame& child = frames[depth];
        child.xi_in = draw.xi;
        child.eta_in = draw.eta;
        child.sink_descendants = 0;
        child.remaining = draw_nu(gen);
        if constexpr (Nested) {
            double* own = slab.data() + static_cast<std::size_t>(depth) * stride;
            for (int k = depth + 1; k <= n; ++k) own[k] = 0.0;
        } else {
            child.acc = 0.0;
        }
    }

    out.depth = n;
    out.seed = seed;
    out.pop_n = frames[0].sink_descendants;
    out.w_hat = static_cast<double>(out.pop_n) / pow_m[n];
    if constexpr (Nested) {
        out.c_levels.resize(n);
        for (int k = 1; k <= n; ++k) out.c_levels[k - 1] = slab[k] * inv_m;
        out.c_n = out.c_levels[n - 1];
    } else {
        out.c_n = frames[0].acc * inv_m;
    }

    const double pop = static_cast<double>(out.pop_n);
    double thomson = 0.0;
    double nash = 0.0;
    for (int k = 1; k <= n; ++k) {
        thomson += pow_m[k] * thomson_acc[k];
        nash += pow_m[k] / nw_eta[k];
    }
    out.thomson_upper = thomson / (pop * pop);
    out.nash_williams_lower = nash;

    if (fluct_L >= 1) {
        double series = 0.0;
        for (int l = 1; l <= fluct_L; ++l) series += fluct_acc[l] / pow_m[l];
        out.fluct_series = series;
        out.has_fluct = true;
    }
    return out;
}

void validate_options(double m, int n, const TreeOptions& opts) {
    if (n < 1) throw InvalidOption("tree depth must be >= 1, got " + std::to_string(n));
    if (opts.fluct_L < 0)
        throw InvalidOption("fluctuation truncation must be >= 1 when requested");
    if (opts.fluct_L >= 1) {
        if (opts.fluct_L >= n)
            throw TruncationTooDeep("fluctuation truncation " + std::to_string(opts.fluct_L) +
                                    " must be smaller than the depth " + std::to_string(n));
        if (!(opts.c1 > 0.0))
            throw InvalidOption("fluctuation series requires c1 > 0");
    }
    const double projected = std::pow(m, n);
    if (projected > static_cast<double>(opts.node_budget))
        throw DepthOverflow("expected sink-level population " + std::to_string(projected) +
                            " exceeds the node budget of " + std::to_string(opts.node_budget));
}

template <bool Nested>
TreeObservables dispatch(const OffspringLaw& off, const ResistanceLaw& res, int n,
                         const TreeOptions& opts, std::uint64_t seed) {
    const double m = off.mean();
    if (off.is_deterministic()) {
        FixedNu nu{off.support()[0]};
        if (res.is_point_mass()) {
            FixedXi xi{res.param(0), 1.0 / res.param(0)};
            return traverse<Nested>(nu, xi, m, n, opts, seed);
        }
        GeneralXi xi{res};
        return traverse<Nested>(nu, xi, m, n, opts, seed);
    }
    GeneralNu nu{off};
    if (res.is_point_mass()) {
        FixedXi xi{res.param(0), 1.0 / res.param(0)};
        return traverse<Nested>(nu, xi, m, n, opts, seed);
    }
    GeneralXi xi{res};
    return traverse<Nested>(nu, xi, m, n, opts, seed);
}

} // namespace

TreeObservables sample_tree_observables(const OffspringLaw& off, const ResistanceLaw& res,
                                        int n, const TreeOptions& opts, std::uint64_t seed) {
    validate_options(off.mean(), n, opts);
    if (opts.nested) return dispatch<true>(off, res, n, opts, seed);
    return dispatch<false>(off, res, n, opts, seed);
}

ExplicitNetwork export_explicit_tree(const OffspringLaw& off, const ResistanceLaw& res, int n,
                                     std::uint64_t seed, std::uint64_t node_cap) {
    TreeOptions guard;
    guard.node_budget = node_cap;
    validate_options(off.mean(), n, guard);

    rng::Xoshiro256pp gen(seed);
    const double m = off.mean();
    std::vector<double> pow_m(n + 1);
    pow_m[0] = 1.0;
    for (int k = 1; k <= n; ++k) pow_m[k] = pow_m[k - 1] * m;

    ExplicitNetwork net;
    net.source = 0;

    struct Level {
        int vertex = 0;
        int remaining = 0;
    };
    std::vector<Level> stack(n + 1);
    stack[0] = {0, off.sample(gen)};
    int next_vertex = 1;
    int depth = 0;
    std::uint64_t total = 1;
    for (;;) {
        Level& top = stack[depth];
        if (top.remaining == 0) {
            if (depth == 0) break;
            --depth;
            continue;
        }
        --top.remaining;
        const double xi = res.sample(gen);
        const int child = next_vertex++;
        if (++total > node_cap)
            throw DepthOverflow("explicit tree export exceeded the node cap of " +
                                std::to_string(node_cap));
        net.edges.push_back({top.vertex, child, pow_m[depth + 1] * xi});
        if (depth + 1 == n) {
            net.sinks.push_back(child);
        } else {
            ++depth;
            stack[depth] = {child, off.sample(gen)};
        }
    }
    net.vertex_count = next_vertex;
    return net;
}

} // namespace gwel
