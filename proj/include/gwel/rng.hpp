#pragma once

// Random number generation.
//
// Two generators serve two access patterns:
//
//  * Xoshiro256pp — a fast sequential stream. One stream per sampled tree;
//    the traversal order is deterministic, so the realization is a pure
//    function of the seed.
//
//  * Philox4x32 (10 rounds, Salmon et al., SC 2011) — a counter-based block
//    cipher. Pool particles address their draws by (particle, step, slot),
//    so a pool step can be generated in any order, by any number of threads,
//    or by the SIMD kernel, and still produce bit-identical results.

#include <array>
#include <cstdint>

namespace gwel::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stable seed derivation: hash(seed, a[, b]) used for per-tree and
// per-replicate streams. Pure integer ops, identical on every platform.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
    std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
    std::uint64_t h = splitmix64(s);
    s ^= a;
    return h ^ splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 52 random bits. The same mapping is used by the
    // counter-based path so scalar and SIMD kernels agree bitwise.
    double uniform01() { return to_unit(next()); }

    static double to_unit(std::uint64_t x) {
        return static_cast<double>(x >> 12) * 0x1.0p-52;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

// Map a uniform u64 to an index in [0, n). Done through the double mapping
// (rather than modulo) because AVX2 has no 64-bit integer multiply-high;
// both kernels compute exactly this expression.
inline std::uint32_t bounded_index(std::uint64_t x, std::uint32_t n) {
    const double u = Xoshiro256pp::to_unit(x);
    auto idx = static_cast<std::uint32_t>(u * static_cast<double>(n));
    return idx < n ? idx : n - 1;
}

struct PhiloxKey {
    std::uint32_t k0;
    std::uint32_t k1;
};

inline PhiloxKey make_philox_key(std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t h = derive_seed(seed, stream);
    return PhiloxKey{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

struct PhiloxBlock {
    std::uint64_t lo;
    std::uint64_t hi;
};

// Philox4x32-10. Returns the 128-bit block for one counter value as two u64.
inline PhiloxBlock philox4x32(PhiloxKey key, std::uint32_t c0, std::uint32_t c1,
                              std::uint32_t c2, std::uint32_t c3) {
    constexpr std::uint32_t kMulA = 0xD2511F53u;
    constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    constexpr std::uint32_t kWeylB = 0xBB67AE85u;

    std::uint32_t k0 = key.k0;
    std::uint32_t k1 = key.k1;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t productA = static_cast<std::uint64_t>(kMulA) * c0;
        const std::uint64_t productB = static_cast<std::uint64_t>(kMulB) * c2;
        const std::uint32_t loA = static_cast<std::uint32_t>(productA);
        const std::uint32_t hiA = static_cast<std::uint32_t>(productA >> 32);
        const std::uint32_t loB = static_cast<std::uint32_t>(productB);
        const std::uint32_t hiB = static_cast<std::uint32_t>(productB >> 32);
        const std::uint32_t n0 = hiB ^ c1 ^ k0;
        const std::uint32_t n1 = loB;
        const std::uint32_t n2 = hiA ^ c3 ^ k1;
        const std::uint32_t n3 = loA;
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
        k0 += kWeylA;
        k1 += kWeylB;
    }
    return PhiloxBlock{
        (static_cast<std::uint64_t>(c1) << 32) | c0,
        (static_cast<std::uint64_t>(c3) << 32) | c2,
    };
}

} // namespace gwel::rng
