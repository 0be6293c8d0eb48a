#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace fas {

// What a random stream is used for. Part of the key so that different
// samplers fed the same seed never share variates.
enum class Stream : std::uint64_t {
    exact = 1,
    stage1 = 2,
    reference = 3,
    ghat = 4,
    gtilde = 5,
    stage1_mc = 6,
    synthetic = 7,
};

// Counter-based generator: SplitMix64 over a key derived from
// (seed, stream, index). Constructing one per draw index makes every draw
// reproducible on its own, so work can be chunked freely.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

private:
    std::uint64_t state_;
};

// Zero-mean normal with variance 1/2 per real component, the latent law used
// by every sampler. One instance per draw index.
class LatentNormal {
public:
    LatentNormal(std::uint64_t seed, Stream stream, std::uint64_t index)
        : rng_(seed, stream, index), dist_(0.0, std::numbers::sqrt2 / 2.0) {}

    double operator()() { return dist_(rng_); }

private:
    CounterRng rng_;
    std::normal_distribution<double> dist_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace fas
