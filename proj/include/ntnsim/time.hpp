#pragma once

#include <cmath>
#include <cstdint>

namespace ntnsim {

/// Simulation time and durations in integer microseconds. All LoRa timing
/// quantities used here (multiples of quarter symbols at 125/250/500 kHz)
/// are exact at this resolution, so schedule identities hold bit-exact.
using TimeUs = std::int64_t;

constexpr double us_to_s(TimeUs t) { return static_cast<double>(t) * 1e-6; }

inline TimeUs s_to_us(double seconds) {
    return static_cast<TimeUs>(std::llround(seconds * 1e6));
}

} // namespace ntnsim
