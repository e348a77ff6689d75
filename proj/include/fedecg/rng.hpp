#pragma once

#include <cstdint>
#include <string_view>

namespace fedecg {

// Deterministic 64-bit PRNG used for every random draw in the project.
//
// The generator is normative so that independent reimplementations reproduce
// identical initializations, shuffles and synthetic datasets bit for bit:
//
//   state seeding   splitmix64 (Steele/Lea/Flood 2014):
//                     z = (x += 0x9E3779B97F4A7C15)
//                     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//                     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                     return z ^ (z >> 31)
//                   four successive outputs fill s[0..3].
//   stream          xoshiro256++ (Blackman/Vigna 2019):
//                     result = rotl(s0 + s3, 23) + s0
//                     t = s1 << 17; s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3;
//                     s2 ^= t; s3 = rotl(s3, 45)
//   uniform [0,1)   (next() >> 11) * 2^-53, computed in double.
//
// Draws destined for f32 tensors are produced in double first and then
// narrowed, so f32 and f64 paths consume the same underlying stream.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
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

    // Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi). Never reaches hi.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased integer in [0, n) via rejection sampling. n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // One splitmix64 step; advances x and returns the output word.
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t seed_ = 0;
    std::uint64_t state_[4] = {};
};

// Child-seed derivation. All randomness in an experiment flows from one root
// seed through this function, keyed by a purpose tag and up to two indices
// (e.g. derive_seed(root, "shuffle", node, round)). Normative:
//
//   h  = FNV-1a 64 of the tag bytes (offset 0xcbf29ce484222325, prime 0x100000001b3)
//   s1 = splitmix64_output(root ^ h)
//   s2 = splitmix64_output(s1 ^ a)
//   child = splitmix64_output(s2 ^ b)
//
// where splitmix64_output(z) is one splitmix64 step applied to state z.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t x = root ^ h;
    std::uint64_t s = SeededRng::splitmix64(x);
    x = s ^ a;
    s = SeededRng::splitmix64(x);
    x = s ^ b;
    return SeededRng::splitmix64(x);
}

}  // namespace fedecg
