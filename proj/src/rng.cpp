#include "wdm/rng.hpp"

#include <cmath>

#include "wdm/errors.hpp"

namespace wdm {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : gen_(seed) {}

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= stream_id * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL;
    std::uint64_t b = splitmix64(s);
    return Rng(a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
}

std::uint64_t Rng::next_u64() {
    return gen_();
}

double Rng::uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    if (!(hi > lo)) throw ParameterError("uniform: hi must exceed lo");
    return lo + uniform() * (hi - lo);
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // u1 in (0,1]: avoids log(0).
    double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

double Rng::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw ParameterError("uniform_int: hi < lo");
    std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(gen_());  // full 64-bit span
    // Rejection sampling for an exactly uniform result.
    std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % range;
    std::uint64_t v;
    do {
        v = gen_();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % range);
}

std::vector<double> Rng::normal_vec(std::size_t n) {
    std::vector<double> out(n);
    for (auto& x : out) x = normal();
    return out;
}

std::vector<double> Rng::uniform_vec(std::size_t n, double lo, double hi) {
    std::vector<double> out(n);
    for (auto& x : out) x = uniform(lo, hi);
    return out;
}

}  // namespace wdm
