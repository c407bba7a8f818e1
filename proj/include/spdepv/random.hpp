#pragma once

// Counter-based seeding. Every random stream is addressed by
// (master seed, stream ids...), so results never depend on which thread
// produced them or in which order.

#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace spdepv {

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a) noexcept {
    return mix64(mix64(master) ^ mix64(a + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b) noexcept {
    return derive_seed(derive_seed(master, a), b);
}

/// Small-state uniform bit generator; cheap to construct per stream.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Standard normal sampler (ziggurat) over a SplitMix64 stream.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double operator()() { return dist_(engine_); }

private:
    SplitMix64 engine_;
    boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace spdepv
