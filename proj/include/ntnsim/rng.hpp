#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ntnsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent draw stream derived from (master seed, stream id). Entities
/// own their streams, so adding a node never perturbs another node's draws
/// and A/B protocol comparisons stay paired. All variate transforms are
/// explicit so sequences are fully determined by the engine state.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : gen_(splitmix64(splitmix64(master_seed) ^ splitmix64(stream_id ^ 0xA5A5A5A5DEADBEEFULL))) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    double normal(double mean, double sigma) {
        double u1 = 1.0 - uniform();  // (0,1]
        double u2 = uniform();
        return mean + sigma * std::sqrt(-2.0 * std::log(u1)) *
                          std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        auto n = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<int>(static_cast<std::uint64_t>(
                        (static_cast<unsigned __int128>(next_u64()) * n) >> 64));
    }

private:
    std::mt19937_64 gen_;
};

/// Purposes for deriving per-entity stream ids from the master seed.
enum class StreamPurpose : std::uint64_t {
    traffic = 1,   // per-node packet arrivals
    mac = 2,       // per-node CAD draws and backoff jitter
    gateway = 3,   // preamble-detection delay draws
    deploy = 4,    // node placement
};

inline std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t entity) {
    return (static_cast<std::uint64_t>(purpose) << 32) | entity;
}

/// Order-independent N(0,1) draw keyed by (seed, a, b); used for shadowing
/// epochs so the value never depends on event processing order.
inline double normal_from_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h1 = splitmix64(splitmix64(seed ^ 0x5851F42D4C957F2DULL) + a);
    std::uint64_t h2 = splitmix64(h1 ^ splitmix64(b + 0x14057B7EF767814FULL));
    double u1 = 1.0 - static_cast<double>(h1 >> 11) * 0x1.0p-53;
    double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace ntnsim
