#pragma once

#include <cstdint>
#include <limits>

namespace admitlab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for replication `index` under `master`. Distinct indices give
// statistically independent streams; the mapping is fixed across platforms.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

// xoshiro256** with splitmix64 seeding. Hand-rolled so that generated
// streams are bit-identical across standard library implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s += 0x9E3779B97F4A7C15ULL;
            w = splitmix64(s);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
};

}  // namespace admitlab
