#pragma once

#include <cstdint>
#include <random>

namespace bmlr {

/// SplitMix64 finalizer (Steele/Lea/Flood mixing constants). Stateless hash
/// used to derive child seeds; bit-stable across platforms.
uint64_t mix64(uint64_t z);

/// Child seed for an independent stream: mix64 chain over
/// (master, stream tag, index). Identical inputs give identical seeds.
uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index = 0);

// Stream tags used across the library.
inline constexpr uint64_t kStreamParamA = 0x41;
inline constexpr uint64_t kStreamParamB = 0x42;
inline constexpr uint64_t kStreamDesign = 0x58;
inline constexpr uint64_t kStreamNoise = 0x45;
inline constexpr uint64_t kStreamData = 0x44;
inline constexpr uint64_t kStreamImage = 0x49;

/// Seeded double-precision stream. Engine is std::mt19937_64 (bit-exact per
/// the C++ standard); uniforms take the top 53 bits; gaussians are Box-Muller
/// pairs of those uniforms, so the whole stream is platform-stable.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the sine partner is cached.
    double gaussian();

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bmlr
