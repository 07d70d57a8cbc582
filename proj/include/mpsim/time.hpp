#pragma once

#include <cstdint>

namespace mpsim {

using TimeNs = std::int64_t;

constexpr TimeNs kNsPerUs = 1000;
constexpr TimeNs kNsPerMs = 1000 * kNsPerUs;
constexpr TimeNs kNsPerSec = 1000 * kNsPerMs;

constexpr TimeNs microseconds(std::int64_t v) { return v * kNsPerUs; }
constexpr TimeNs milliseconds(std::int64_t v) { return v * kNsPerMs; }
constexpr TimeNs seconds(std::int64_t v) { return v * kNsPerSec; }

constexpr double toSeconds(TimeNs t) { return static_cast<double>(t) / 1e9; }
constexpr TimeNs fromSeconds(double s) { return static_cast<TimeNs>(s * 1e9 + (s >= 0 ? 0.5 : -0.5)); }

}  // namespace mpsim
