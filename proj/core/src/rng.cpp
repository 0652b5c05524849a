#include "sparsedit/rng.hpp"

#include <cmath>

namespace sparsedit {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

}  // namespace

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t x = seed;
    std::uint64_t k = splitmix64(x);
    x ^= a * 0x9e3779b97f4a7c15ull;
    k ^= splitmix64(x);
    x ^= b * 0xc2b2ae3d27d4eb4full;
    k ^= splitmix64(x);
    x ^= c * 0x165667b19e3779f9ull;
    k ^= splitmix64(x);
    return k;
}

Rng::Rng(std::uint64_t key) {
    for (auto& s : s_) s = splitmix64(key);
}

Rng::Rng(std::uint64_t seed, RngUse use, std::uint64_t step, std::uint64_t worker)
    : Rng(mix_key(seed, static_cast<std::uint64_t>(use), step, worker)) {}

std::uint64_t Rng::next_u64() {
    // xoshiro256**
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % span);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
}

}  // namespace sparsedit
