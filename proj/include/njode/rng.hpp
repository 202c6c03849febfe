#pragma once

#include <cstdint>
#include <random>

namespace njode {

namespace detail {
// splitmix64, used only to decorrelate stream keys before seeding the engine.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Derives an independent stream key from a base seed and up to three ids
/// (e.g. role, epoch, path index). Equal inputs give equal keys on every run.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                                std::uint64_t c = 0) {
    std::uint64_t k = detail::mix64(seed);
    k = detail::mix64(k ^ detail::mix64(a ^ 0x8000000000000001ULL));
    k = detail::mix64(k ^ detail::mix64(b ^ 0x4000000000000002ULL));
    k = detail::mix64(k ^ detail::mix64(c ^ 0x2000000000000003ULL));
    return k;
}

/// Per-call RNG stream. One instance per path/particle set/epoch keeps all
/// sampling independent of scheduling order.
class Rng {
public:
    explicit Rng(std::uint64_t key) : engine_(key) {}
    Rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0)
        : engine_(stream_key(seed, a, b, c)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double gaussian() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    double gaussian(double mean, double std) {
        return std::normal_distribution<double>(mean, std)(engine_);
    }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }
    std::uint64_t integer() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace njode
