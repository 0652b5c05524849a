#pragma once

#include <cstdint>

namespace sparsedit {

// Purpose tag for a deterministic RNG stream. Streams are keyed by
// (seed, purpose, step, worker) so that every random draw in a run is
// reproducible and independent of evaluation order elsewhere.
enum class RngUse : std::uint64_t {
    init = 1,          // parameter initialization
    data = 2,          // synthetic dataset generation
    noise = 3,         // training noise eps
    timestep = 4,      // timestep piece + within-piece draws
    label_drop = 5,    // classifier-free-guidance label dropout
    sample_init = 6,   // sampler initial noise
    sample_noise = 7,  // sampler per-step noise
    test = 8,          // test-only streams
};

// Counter-keyed generator: splitmix64 over the key tuple, then xoshiro256**.
// Self-contained so committed values survive standard-library changes.
class Rng {
public:
    explicit Rng(std::uint64_t key);
    Rng(std::uint64_t seed, RngUse use, std::uint64_t step = 0, std::uint64_t worker = 0);

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    // Standard normal via Box-Muller.
    double normal();

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace sparsedit
