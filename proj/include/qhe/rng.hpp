#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace qhe {

// All randomness in the project flows from one base seed through the stream
// derivation below. Stream s of base seed b is seeded with
// splitmix64(b ^ (0x9E3779B97F4A7C15 * (s + 1))) and drives an independent
// std::mt19937_64. Gaussian variates come from Box-Muller on 53-bit uniforms,
// never from std::normal_distribution, so a (seed, stream) pair fully
// determines the variate sequence for a given binary.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::uint64_t stream) {
    return splitmix64(base_seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
}

class RandomStream {
public:
    RandomStream(std::uint64_t base_seed, std::uint64_t stream)
        : engine_(derive_stream_seed(base_seed, stream)) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; pairs are cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Index into a discrete distribution given by cumulative weights.
    int categorical(const std::vector<double>& cumulative) {
        double u = uniform();
        for (std::size_t i = 0; i < cumulative.size(); ++i) {
            if (u < cumulative[i]) return static_cast<int>(i);
        }
        return static_cast<int>(cumulative.size()) - 1;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace qhe
