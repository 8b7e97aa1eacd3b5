#pragma once

#include <cmath>
#include <cstdint>

namespace vti::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer. Stateless, so hashing a counter gives a
// counter-based generator: value i of stream s is a pure function of (s, i).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
    return splitmix64(splitmix64(seed) ^ (counter * kGolden));
}

// Derives an independent substream seed from a root seed. Fixed stream ids
// keep every subsystem (sampler, init, noise, ...) on its own sequence.
inline std::uint64_t derive(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(root ^ splitmix64(stream ^ 0xA3EC4E9FD1B7C28DULL));
}

inline double to_unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double uniform_at(std::uint64_t seed, std::uint64_t index) {
    return to_unit(mix(seed, index));
}

// Standard normal via Box-Muller on indices (2i, 2i+1); u1 shifted into (0,1]
// so the log is finite.
inline double gaussian_at(std::uint64_t seed, std::uint64_t index) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = (static_cast<double>(mix(seed, 2 * index) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = to_unit(mix(seed, 2 * index + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Sequential view over a counter-based stream.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits() { return mix(seed_, n_++); }
    double uniform() { return to_unit(bits()); }                      // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(bits() % span);
    }

    double gaussian() {
        constexpr double two_pi = 6.283185307179586476925286766559;
        const double u1 = (static_cast<double>(mix(seed_, n_) >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = to_unit(mix(seed_, n_ + 1));
        n_ += 2;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    std::uint64_t seed_;
    std::uint64_t n_ = 0;
};

// Stream ids for the subsystems hanging off one root seed.
enum StreamId : std::uint64_t {
    kSceneStream = 1,
    kSamplerStream = 2,
    kInitStream = 3,
    kNoiseStream = 4,
    kShuffleStream = 5,
};

}  // namespace vti::rng
