#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace pipesim {

/// Simulation time with microsecond resolution.
///
/// Integer ticks keep sums of durations exact, so a pipeline's duration is
/// bit-for-bit the sum of its operations even after a trace round-trip.
class SimTime {
public:
  constexpr SimTime() = default;

  static constexpr SimTime from_micros(std::int64_t us) { return SimTime{us}; }

  /// Rounds to the nearest microsecond; negative and NaN inputs map to zero.
  static SimTime from_seconds(double s) {
    if (!(s > 0.0)) return SimTime{0};
    if (s >= static_cast<double>(max().us_) / 1e6) return max();
    return SimTime{std::llround(s * 1e6)};
  }

  static constexpr SimTime max() { return SimTime{std::numeric_limits<std::int64_t>::max() / 4}; }

  constexpr std::int64_t micros() const { return us_; }
  constexpr double seconds() const { return static_cast<double>(us_) / 1e6; }

  constexpr SimTime& operator+=(SimTime o) { us_ += o.us_; return *this; }
  constexpr SimTime& operator-=(SimTime o) { us_ -= o.us_; return *this; }
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.us_ + b.us_}; }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.us_ - b.us_}; }
  friend constexpr auto operator<=>(SimTime, SimTime) = default;

private:
  constexpr explicit SimTime(std::int64_t us) : us_{us} {}
  std::int64_t us_ = 0;
};

inline SimTime seconds(double s) { return SimTime::from_seconds(s); }

} // namespace pipesim
