// AVX2 pool step kernel: 8 particles per sweep, Philox counters in SoA form
// across 32-bit lanes. Bit-identical to step_scalar — same draw addressing,
// same uniform mapping, same operation order per particle (masked lanes add
// +0.0, which leaves the accumulation unchanged). Built with -mavx2 and
// -ffp-contract=off.

#include "gwel/pool_kernel.hpp"

#if defined(GWEL_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>

namespace gwel::pool {

namespace {

struct Philox8 {
    __m256i c0, c1, c2, c3; // 8 independent blocks, one per 32-bit lane
};

inline Philox8 philox8(rng::PhiloxKey key, __m256i p, std::uint32_t step, std::uint32_t slot) {
    const __m256i mul_a = _mm256_set1_epi32(static_cast<int>(0xD2511F53u));
    const __m256i mul_b = _mm256_set1_epi32(static_cast<int>(0xCD9E8D57u));
    __m256i k0 = _mm256_set1_epi32(static_cast<int>(key.k0));
    __m256i k1 = _mm256_set1_epi32(static_cast<int>(key.k1));
    const __m256i weyl_a = _mm256_set1_epi32(static_cast<int>(0x9E3779B9u));
    const __m256i weyl_b = _mm256_set1_epi32(static_cast<int>(0xBB67AE85u));

    __m256i c0 = p;
    __m256i c1 = _mm256_set1_epi32(static_cast<int>(step));
    __m256i c2 = _mm256_set1_epi32(static_cast<int>(slot));
    __m256i c3 = _mm256_set1_epi32(static_cast<int>(kCounterTag));

    for (int round = 0; round < 10; ++round) {
        // 32x32 -> 64 products for even and odd lanes, then recombine so
        // lo/hi words sit in their source lane positions.
        const __m256i ae = _mm256_mul_epu32(c0, mul_a);
        const __m256i ao = _mm256_mul_epu32(_mm256_srli_epi64(c0, 32), mul_a);
        const __m256i be = _mm256_mul_epu32(c2, mul_b);
        const __m256i bo = _mm256_mul_epu32(_mm256_srli_epi64(c2, 32), mul_b);
        const __m256i lo_a = _mm256_blend_epi32(ae, _mm256_slli_epi64(ao, 32), 0xAA);
        const __m256i hi_a = _mm256_blend_epi32(_mm256_srli_epi64(ae, 32), ao, 0xAA);
        const __m256i lo_b = _mm256_blend_epi32(be, _mm256_slli_epi64(bo, 32), 0xAA);
        const __m256i hi_b = _mm256_blend_epi32(_mm256_srli_epi64(be, 32), bo, 0xAA);

        const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(hi_b, c1), k0);
        const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(hi_a, c3), k1);
        c0 = n0;
        c1 = lo_b;
        c2 = n2;
        c3 = lo_a;
        k0 = _mm256_add_epi32(k0, weyl_a);
        k1 = _mm256_add_epi32(k1, weyl_b);
    }
    return {c0, c1, c2, c3};
}

// Exact u32 -> double for 4 lanes.
inline __m256d f64_from_u32(__m128i v) {
    const __m256i wide = _mm256_cvtepu32_epi64(v);
    const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);
    const __m256d biased = _mm256_castsi256_pd(_mm256_or_si256(wide, magic));
    return _mm256_sub_pd(biased, _mm256_set1_pd(0x1.0p52));
}

// Uniform in [0,1) from (hi32, lo32) word pairs: exactly
// double((hi<<32 | lo) >> 12) * 2^-52, as in Xoshiro256pp::to_unit.
inline __m256d u01_from_words(__m128i hi32, __m128i lo32) {
    const __m256d hi = f64_from_u32(hi32);
    const __m256d lo = f64_from_u32(_mm_srli_epi32(lo32, 12));
    const __m256d combined =
        _mm256_add_pd(_mm256_mul_pd(hi, _mm256_set1_pd(0x1.0p20)), lo);
    return _mm256_mul_pd(combined, _mm256_set1_pd(0x1.0p-52));
}

inline __m128i low_half(__m256i v) { return _mm256_castsi256_si128(v); }
inline __m128i high_half(__m256i v) { return _mm256_extracti128_si256(v, 1); }

inline __m256d xi_vec(const LawTables& laws, __m256d u) {
    switch (laws.family) {
        case ResistanceFamily::PointMass:
            return _mm256_set1_pd(laws.pa);
        case ResistanceFamily::Uniform: {
            const __m256d span = _mm256_set1_pd(laws.pb - laws.pa);
            return _mm256_add_pd(_mm256_set1_pd(laws.pa), _mm256_mul_pd(u, span));
        }
        case ResistanceFamily::TwoPoint: {
            const __m256d lt = _mm256_cmp_pd(u, _mm256_set1_pd(laws.pb), _CMP_LT_OQ);
            return _mm256_blendv_pd(_mm256_set1_pd(laws.pc), _mm256_set1_pd(laws.pa), lt);
        }
        case ResistanceFamily::LogNormal:
            break; // dispatcher never routes lognormal here
    }
    return _mm256_set1_pd(laws.pa);
}

} // namespace

void step_avx2(const StepContext& ctx, std::uint32_t begin, std::uint32_t end, double* out) {
    const LawTables& laws = ctx.laws;
    const bool init = ctx.old_particles == nullptr;
    const std::uint32_t groups_end = begin + ((end - begin) / 8) * 8;
    const __m256d n_pool = _mm256_set1_pd(static_cast<double>(ctx.pool_size));
    const __m128i max_idx = _mm_set1_epi32(static_cast<int>(ctx.pool_size) - 1);

    alignas(32) double u_lane[8];
    alignas(32) double uxi_col[8][8]; // [j][lane]
    alignas(16) std::int32_t idx_col[8][4 * 2];
    int nu[8];

    for (std::uint32_t base = begin; base < groups_end; base += 8) {
        const __m256i lanes = _mm256_setr_epi32(
            static_cast<int>(base + 0), static_cast<int>(base + 1), static_cast<int>(base + 2),
            static_cast<int>(base + 3), static_cast<int>(base + 4), static_cast<int>(base + 5),
            static_cast<int>(base + 6), static_cast<int>(base + 7));

        // slot 0: offspring counts
        {
            const Philox8 head = philox8(ctx.key, lanes, ctx.step, 0);
            _mm256_store_pd(u_lane, u01_from_words(low_half(head.c1), low_half(head.c0)));
            _mm256_store_pd(u_lane + 4, u01_from_words(high_half(head.c1), high_half(head.c0)));
            for (int lane = 0; lane < 8; ++lane) nu[lane] = offspring_from_u01(laws, u_lane[lane]);
        }
        int max_nu = 0;
        for (int lane = 0; lane < 8; ++lane) max_nu = std::max(max_nu, nu[lane]);

        // slots 1..max_nu: pool indices and xi uniforms
        for (int j = 0; j < max_nu; ++j) {
            const Philox8 blk = philox8(ctx.key, lanes, ctx.step, static_cast<std::uint32_t>(1 + j));
            _mm256_store_pd(uxi_col[j], u01_from_words(low_half(blk.c3), low_half(blk.c2)));
            _mm256_store_pd(uxi_col[j] + 4,
                            u01_from_words(high_half(blk.c3), high_half(blk.c2)));
            if (!init) {
                const __m256d u_lo = u01_from_words(low_half(blk.c1), low_half(blk.c0));
                const __m256d u_hi = u01_from_words(high_half(blk.c1), high_half(blk.c0));
                __m128i idx_lo = _mm256_cvttpd_epi32(_mm256_mul_pd(u_lo, n_pool));
                __m128i idx_hi = _mm256_cvttpd_epi32(_mm256_mul_pd(u_hi, n_pool));
                idx_lo = _mm_min_epi32(idx_lo, max_idx);
                idx_hi = _mm_min_epi32(idx_hi, max_idx);
                _mm_store_si128(reinterpret_cast<__m128i*>(idx_col[j]), idx_lo);
                _mm_store_si128(reinterpret_cast<__m128i*>(idx_col[j] + 4), idx_hi);
                for (int lane = 0; lane < 8; ++lane)
                    __builtin_prefetch(ctx.old_particles + idx_col[j][lane], 0, 1);
            }
        }

        __m256d acc_lo = _mm256_setzero_pd();
        __m256d acc_hi = _mm256_setzero_pd();
        for (int j = 0; j < max_nu; ++j) {
            // j < nu masks; masked lanes contribute +0.0.
            const __m128i jv = _mm_set1_epi32(j);
            const __m128i m_lo32 =
                _mm_cmplt_epi32(jv, _mm_setr_epi32(nu[0], nu[1], nu[2], nu[3]));
            const __m128i m_hi32 =
                _mm_cmplt_epi32(jv, _mm_setr_epi32(nu[4], nu[5], nu[6], nu[7]));
            const __m256d mask_lo = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(m_lo32));
            const __m256d mask_hi = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(m_hi32));

            const __m256d xi_lo = xi_vec(laws, _mm256_load_pd(uxi_col[j]));
            const __m256d xi_hi = xi_vec(laws, _mm256_load_pd(uxi_col[j] + 4));

            __m256d contrib_lo, contrib_hi;
            if (init) {
                contrib_lo = _mm256_div_pd(_mm256_set1_pd(1.0), xi_lo);
                contrib_hi = _mm256_div_pd(_mm256_set1_pd(1.0), xi_hi);
            } else {
                const __m128i idx_lo = _mm_load_si128(reinterpret_cast<__m128i*>(idx_col[j]));
                const __m128i idx_hi =
                    _mm_load_si128(reinterpret_cast<__m128i*>(idx_col[j] + 4));
                const __m256d c_lo = _mm256_i32gather_pd(ctx.old_particles, idx_lo, 8);
                const __m256d c_hi = _mm256_i32gather_pd(ctx.old_particles, idx_hi, 8);
                const __m256d one = _mm256_set1_pd(1.0);
                contrib_lo =
                    _mm256_div_pd(c_lo, _mm256_add_pd(one, _mm256_mul_pd(xi_lo, c_lo)));
                contrib_hi =
                    _mm256_div_pd(c_hi, _mm256_add_pd(one, _mm256_mul_pd(xi_hi, c_hi)));
            }
            acc_lo = _mm256_add_pd(acc_lo, _mm256_and_pd(contrib_lo, mask_lo));
            acc_hi = _mm256_add_pd(acc_hi, _mm256_and_pd(contrib_hi, mask_hi));
        }

        const __m256d scale = _mm256_set1_pd(ctx.inv_lambda);
        _mm256_storeu_pd(out + base, _mm256_mul_pd(acc_lo, scale));
        _mm256_storeu_pd(out + base + 4, _mm256_mul_pd(acc_hi, scale));
    }

    if (groups_end < end) step_scalar(ctx, groups_end, end, out);
}

} // namespace gwel::pool

#endif // GWEL_HAVE_AVX2
