#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace umae {

// PCG32 (pcg32_oneseq / XSH-RR output permutation, O'Neill 2014).
// The generator is the project-wide seeded RNG: 64-bit LCG state advanced by
// state * 6364136223846793005 + inc, output = 32-bit xorshift-high + random
// rotation of the old state. Fully portable; documented in the README so
// sampled sequences reproduce across implementations.
class Pcg32 {
public:
    explicit Pcg32(uint64_t seed, uint64_t seq = kDefaultStream) {
        state_ = 0;
        inc_ = (seq << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform double in [0, 1) with 53 random mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased uniform integer in [0, bound) via rejection below the
    // wrap-around threshold.
    uint32_t next_below(uint32_t bound) {
        if (bound <= 1) {
            return 0;
        }
        uint32_t threshold = (0u - bound) % bound;
        for (;;) {
            uint32_t r = next_u32();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

private:
    static constexpr uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

    uint64_t state_;
    uint64_t inc_;
};

// SplitMix64 finalizer, used to spread user seeds and derive substreams.
inline uint64_t splitmix64(uint64_t x) {
    uint64_t z = x + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// FNV-1a over bytes, for hashing instance ids into stream selectors.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Per-sequence stream seed: decoding instance `tag` under global seed `seed`
// uses Pcg32(derive_seed(seed, tag)), so output is independent of scheduling.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
    return splitmix64(seed ^ fnv1a64(tag));
}

// Fisher-Yates with the project RNG; deterministic for a fixed generator state.
template <typename T>
void shuffle(std::vector<T>& items, Pcg32& rng) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = rng.next_below(static_cast<uint32_t>(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace umae
