#ifndef WDM_RNG_HPP
#define WDM_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace wdm {

// Deterministic random source. All randomness in the toolkit flows through
// this class so that a (seed, stream) pair fully determines every draw,
// independent of the platform's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Derives an independent child stream from (seed, stream_id). Streams
    // with different ids never share state; this is how the task and
    // watermark branches of training keep separate draw sequences.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller (pairs cached).
    double normal();
    double normal(double mean, double stddev);

    // Uniform integer in [lo, hi], inclusive, bias-free.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    std::vector<double> normal_vec(std::size_t n);
    std::vector<double> uniform_vec(std::size_t n, double lo, double hi);

private:
    std::mt19937_64 gen_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// SplitMix64 step; used for seed derivation and key folding.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace wdm

#endif
