#pragma once

#include <cstdint>
#include <random>

namespace consensus {

// SplitMix64 finalizer. A bijection on 64-bit integers (each stage --
// add-constant, xor-shift, multiply-by-odd -- is invertible), so distinct
// inputs always map to distinct outputs.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// A deterministic stream of uniform draws. Streams for different trials of
// the same ensemble are derived from (master_seed, trial_index) by
//
//     seed = splitmix64(master_seed + GAMMA * (trial_index + 1)),
//
// where GAMMA is odd. For a fixed master seed the map trial -> seed is
// injective (multiplication by an odd constant and addition are bijections
// mod 2^64, and splitmix64 is a bijection), so trial streams never collide
// and the derivation is independent of how trials are distributed over
// worker threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    static RngStream for_trial(std::uint64_t master_seed, std::uint64_t trial_index) {
        constexpr std::uint64_t gamma = 0x9E3779B97F4A7C15ULL;
        return RngStream(splitmix64(master_seed + gamma * (trial_index + 1)));
    }

    // Uniform double in [0, 1) built from the top 53 bits of one engine step.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace consensus
