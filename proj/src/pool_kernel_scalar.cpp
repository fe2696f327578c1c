// Scalar reference kernel for the pool step. Built with -ffp-contract=off;
// the AVX2 variant must match it bit for bit.

#include "gwel/pool_kernel.hpp"

#include <algorithm>
#include <vector>

#include "gwel/errors.hpp"

namespace gwel::pool {

namespace {

// Chunked two-pass layout: pass 1 generates all counters for a chunk and
// prefetches the gathered pool slots, pass 2 runs the arithmetic once the
// lines are (mostly) resident. Large pools gather from DRAM, so this is
// where the step spends its time.
constexpr std::uint32_t kChunk = 512;

} // namespace

LawTables make_law_tables(const OffspringLaw& off, const ResistanceLaw& res) {
    if (static_cast<int>(off.support().size()) > kMaxSupport)
        throw InvalidOption("pool kernels support offspring laws with at most " +
                            std::to_string(kMaxSupport) + " support points");
    LawTables t;
    t.support_count = static_cast<int>(off.support().size());
    for (int i = 0; i < t.support_count; ++i) {
        t.support[i] = off.support()[i];
        t.cum[i] = off.cum()[i];
    }
    t.family = res.family();
    switch (res.family()) {
        case ResistanceFamily::PointMass:
            t.pa = res.param(0);
            break;
        case ResistanceFamily::Uniform:
            t.pa = res.param(0);
            t.pb = res.param(1);
            break;
        case ResistanceFamily::TwoPoint:
            t.pa = res.param(0);
            t.pb = res.param(1);
            t.pc = res.param(2);
            break;
        case ResistanceFamily::LogNormal:
            t.pa = res.param(0);
            t.pb = res.param(1);
            break;
    }
    return t;
}

void step_scalar(const StepContext& ctx, std::uint32_t begin, std::uint32_t end, double* out) {
    const LawTables& laws = ctx.laws;
    const bool init = ctx.old_particles == nullptr;
    const int max_nu = laws.support[laws.support_count - 1];
    const double n_pool = static_cast<double>(ctx.pool_size);

    std::uint8_t nu[kChunk];
    std::uint32_t idx[kChunk * 8];
    double uxi[kChunk * 8];
    std::vector<std::uint32_t> idx_big;
    std::vector<double> uxi_big;
    std::uint32_t* idx_p = idx;
    double* uxi_p = uxi;
    if (max_nu > 8) {
        idx_big.resize(static_cast<std::size_t>(kChunk) * max_nu);
        uxi_big.resize(static_cast<std::size_t>(kChunk) * max_nu);
        idx_p = idx_big.data();
        uxi_p = uxi_big.data();
    }

    for (std::uint32_t base = begin; base < end; base += kChunk) {
        const std::uint32_t len = std::min<std::uint32_t>(kChunk, end - base);

        for (std::uint32_t i = 0; i < len; ++i) {
            const std::uint32_t p = base + i;
            const auto head = rng::philox4x32(ctx.key, p, ctx.step, 0, kCounterTag);
            const int k = offspring_from_u01(laws, rng::Xoshiro256pp::to_unit(head.lo));
            nu[i] = static_cast<std::uint8_t>(k);
            std::uint32_t* row_idx = idx_p + static_cast<std::size_t>(i) * max_nu;
            double* row_uxi = uxi_p + static_cast<std::size_t>(i) * max_nu;
            for (int j = 0; j < k; ++j) {
                const auto blk =
                    rng::philox4x32(ctx.key, p, ctx.step, static_cast<std::uint32_t>(1 + j),
                                    kCounterTag);
                row_uxi[j] = rng::Xoshiro256pp::to_unit(blk.hi);
                if (!init) {
                    const double u = rng::Xoshiro256pp::to_unit(blk.lo);
                    std::uint32_t id = static_cast<std::uint32_t>(u * n_pool);
                    if (id >= ctx.pool_size) id = ctx.pool_size - 1;
                    row_idx[j] = id;
                    __builtin_prefetch(ctx.old_particles + id, 0, 1);
                }
            }
        }

        for (std::uint32_t i = 0; i < len; ++i) {
            const std::uint32_t* row_idx = idx_p + static_cast<std::size_t>(i) * max_nu;
            const double* row_uxi = uxi_p + static_cast<std::size_t>(i) * max_nu;
            const int k = nu[i];
            double acc = 0.0;
            if (init) {
                for (int j = 0; j < k; ++j) acc += 1.0 / xi_from_u01(laws, row_uxi[j]);
            } else {
                for (int j = 0; j < k; ++j) {
                    const double c = ctx.old_particles[row_idx[j]];
                    const double xi = xi_from_u01(laws, row_uxi[j]);
                    acc += c / (1.0 + xi * c);
                }
            }
            out[base + i] = acc * ctx.inv_lambda;
        }
    }
}

bool avx2_available(const LawTables& laws) {
#if defined(GWEL_HAVE_AVX2)
    if (!__builtin_cpu_supports("avx2")) return false;
    if (laws.support_count > 8) return false;
    switch (laws.family) {
        case ResistanceFamily::PointMass:
        case ResistanceFamily::Uniform:
        case ResistanceFamily::TwoPoint:
            return true;
        case ResistanceFamily::LogNormal:
            return false; // transcendental sampler stays on the scalar path
    }
#endif
    (void)laws;
    return false;
}

StepKernelFn select_kernel([[maybe_unused]] const LawTables& laws, KernelChoice choice) {
    switch (choice) {
        case KernelChoice::Scalar:
            return &step_scalar;
        case KernelChoice::Avx2:
#if defined(GWEL_HAVE_AVX2)
            if (avx2_available(laws)) return &step_avx2;
#endif
            throw InvalidOption("AVX2 pool kernel unavailable for this law/machine");
        case KernelChoice::Auto:
#if defined(GWEL_HAVE_AVX2)
            if (avx2_available(laws)) return &step_avx2;
#endif
            return &step_scalar;
    }
    return &step_scalar;
}

} // namespace gwel::pool
