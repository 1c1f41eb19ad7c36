#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pcfgo {

/// splitmix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for the substream identified by (seed, tags...).
inline std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::int64_t> tags) {
    std::uint64_t h = mix64(seed);
    for (std::int64_t t : tags) h = mix64(h ^ static_cast<std::uint64_t>(t));
    return h;
}

/// Seeded generator with the handful of draws the library needs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::initializer_list<std::int64_t> tags)
        : engine_(substream_seed(seed, tags)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double sigma) {
        if (sigma == 0.0) return 0.0;
        return std::normal_distribution<double>(0.0, sigma)(engine_);
    }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Stream tags for the simulator and estimator substreams.
enum StreamTag : std::int64_t {
    kStreamConstellation = 1,
    kStreamSatClock,
    kStreamReceiverClock,
    kStreamPseudorange,
    kStreamDoppler,
    kStreamMultipath,
    kStreamUwbNoise,
    kStreamUwbDrop,
    kStreamAtmosphere,
    kStreamPlaneSelect,
    kStreamRansac,
};

}  // namespace pcfgo
