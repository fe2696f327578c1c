#pragma once

// Pool step kernels.
//
// One step of the particle recursion builds each new particle from
//
//   C_new = (1/lambda) * sum_{i=1..nu} C_i / (1 + xi_i C_i),
//
// with nu from the offspring law, xi_i fresh resistance draws and C_i drawn
// uniformly with replacement from the previous pool (the init step instead
// sums 1/xi_i). Every random quantity is addressed by (particle, step, slot)
// through Philox, so the kernels are embarrassingly parallel and the scalar
// reference and the AVX2 variant produce bit-identical pools; the
// equivalence suite pins that. Files implementing these kernels are built
// with -ffp-contract=off so both paths round identically.
//
// Draw addressing per particle p of step s:
//   slot 0      : lo u64 -> offspring count
//   slot 1 + j  : lo u64 -> pool index of child j, hi u64 -> xi of child j

#include <cmath>
#include <cstdint>

#include "gwel/laws.hpp"
#include "gwel/rng.hpp"

namespace gwel::pool {

inline constexpr int kMaxSupport = 32;
inline constexpr std::uint32_t kCounterTag = 0x706F6F6CU; // "pool"

struct LawTables {
    int support_count = 0;
    std::int32_t support[kMaxSupport] = {};
    double cum[kMaxSupport] = {};

    ResistanceFamily family = ResistanceFamily::PointMass;
    double pa = 0.0; // point value | uniform a | two-point v1 | lognormal mu
    double pb = 0.0; // uniform b | two-point q | lognormal sigma
    double pc = 0.0; // two-point v2
};

LawTables make_law_tables(const OffspringLaw& off, const ResistanceLaw& res);

struct StepContext {
    const double* old_particles = nullptr; // null for the init step
    std::uint32_t pool_size = 0;
    double inv_lambda = 0.0;
    rng::PhiloxKey key{};
    std::uint32_t step = 0;
    LawTables laws;
};

using StepKernelFn = void (*)(const StepContext&, std::uint32_t begin, std::uint32_t end,
                              double* out);

enum class KernelChoice { Auto, Scalar, Avx2 };

void step_scalar(const StepContext& ctx, std::uint32_t begin, std::uint32_t end, double* out);

#if defined(GWEL_HAVE_AVX2)
void step_avx2(const StepContext& ctx, std::uint32_t begin, std::uint32_t end, double* out);
#endif

// True when an AVX2 kernel exists for these laws on this machine
// (families point mass / uniform / two-point, support count <= 8).
bool avx2_available(const LawTables& laws);

// Resolves Auto to AVX2 when available, otherwise scalar. Throws
// InvalidOption when Avx2 is forced but unavailable.
StepKernelFn select_kernel(const LawTables& laws, KernelChoice choice);

// Shared by both kernels and by tests.
inline int offspring_from_u01(const LawTables& t, double u) {
    int i = 0;
    while (i + 1 < t.support_count && u >= t.cum[i]) ++i;
    return t.support[i];
}

inline double xi_from_u01(const LawTables& t, double u) {
    switch (t.family) {
        case ResistanceFamily::PointMass: return t.pa;
        case ResistanceFamily::Uniform: return t.pa + u * (t.pb - t.pa);
        case ResistanceFamily::TwoPoint: return u < t.pb ? t.pa : t.pc;
        case ResistanceFamily::LogNormal: {
            const double clamped = u < 0x1.0p-53 ? 0x1.0p-53 : (u > 1.0 - 0x1.0p-53 ? 1.0 - 0x1.0p-53 : u);
            return std::exp(t.pa + t.pb * inverse_normal_cdf(clamped));
        }
    }
    return t.pa;
}

} // namespace gwel::pool
