// Seedable pseudorandom engine with hashed substreams.
//
// All stochastic code in this project draws from Xoshiro256** seeded through
// the splitmix64 finalizer. Substreams are derived by hashing
// (seed, purpose, index), so any block of work can be simulated independently
// of execution order and the result is reproducible bit-for-bit for a given
// master seed. Distribution samplers are implemented here rather than taken
// from <random> because the standard leaves distribution algorithms
// unspecified and we promise identical streams across runs.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace spdclab {

// splitmix64 finalizer (Vigna 2015): bijective avalanche mix of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive an independent substream seed from (seed, purpose, index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose,
                                    std::uint64_t index = 0) noexcept {
    return mix64(mix64(mix64(seed) ^ purpose) ^ index);
}

// Stream purposes used by the simulator; kept in one place so substreams
// never collide.
namespace stream {
inline constexpr std::uint64_t pulse_physics = 0x70687973ull;  // per block
inline constexpr std::uint64_t dark_counts = 0x6461726bull;    // per channel
inline constexpr std::uint64_t jitter = 0x6a697474ull;         // per channel
inline constexpr std::uint64_t sweep_point = 0x73777065ull;    // per plan point
inline constexpr std::uint64_t measurement_noise = 0x6e6f6973ull;
}  // namespace stream

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0x853c49e6748fea9bull) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = mix64(s++);
    }

    static Rng substream(std::uint64_t seed, std::uint64_t purpose,
                         std::uint64_t index = 0) {
        return Rng(derive_seed(seed, purpose, index));
    }

    std::uint64_t next_u64() noexcept {
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

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos() noexcept { return 1.0 - uniform(); }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    // Box-Muller without caching: every call consumes exactly two uniforms,
    // which keeps draw counts independent of call history.
    double normal(double mean = 0.0, double sigma = 1.0) noexcept {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    double exponential(double rate) noexcept {
        return -std::log(uniform_pos()) / rate;
    }

    // Number of failures before the first success, success probability q.
    // Returns at most `cap`.
    std::uint64_t geometric(double log_one_minus_q, std::uint64_t cap) noexcept {
        if (log_one_minus_q >= 0.0) return cap;  // q == 0: never succeeds
        const double g = std::floor(std::log(uniform_pos()) / log_one_minus_q);
        if (!(g < static_cast<double>(cap))) return cap;
        return static_cast<std::uint64_t>(g);
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Count of events of a homogeneous Poisson process of `rate_per_unit` over
// `span` units, sampled by inversion of the exponential-gap representation.
// Intended for small expected counts; larger ones are handled by callers
// walking the gaps directly.
inline std::uint64_t poisson_knuth(Rng& rng, double mean) noexcept {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::uint64_t n = 0;
    double prod = rng.uniform_pos();
    while (prod > limit) {
        ++n;
        prod *= rng.uniform_pos();
    }
    return n;
}

}  // namespace spdclab
