#pragma once

#include <cstdint>

namespace chspect {

/// splitmix64 finalizer, used here as a keyed mixing function.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Draw slots per emitted pair, consumed in this fixed order.
enum class DrawSlot : std::uint64_t {
    Channel = 0,
    Outcome = 1,
    JitterA = 2,
    JitterB = 3,
};

/// Counter-based draw: a pure function of (seed, run, pair index, slot).
/// Every batch split and execution order yields bit-identical streams.
inline constexpr std::uint64_t draw_bits(std::uint64_t seed, std::uint64_t run,
                                         std::uint64_t pair_index, DrawSlot slot) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ run);
    h = mix64(h ^ pair_index);
    h = mix64(h ^ static_cast<std::uint64_t>(slot));
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline constexpr double to_unit_interval(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline constexpr double uniform_draw(std::uint64_t seed, std::uint64_t run,
                                     std::uint64_t pair_index, DrawSlot slot) {
    return to_unit_interval(draw_bits(seed, run, pair_index, slot));
}

}  // namespace chspect
