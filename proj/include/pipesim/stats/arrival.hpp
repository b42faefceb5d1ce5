#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"
#include "pipesim/stats/fit_dist.hpp"

namespace pipesim::stats {

inline constexpr int kWeekdays = 7;
inline constexpr int kHours = 24;
inline constexpr int kCells = kWeekdays * kHours;

/// Weekday (0 = Monday) and hour of day of a local timestamp.
struct CalendarSlot {
  int weekday = 0;
  int hour = 0;

  int index() const { return weekday * kHours + hour; }
};

inline CalendarSlot calendar_slot(double epoch_s, double tz_offset_s = 0.0) {
  const double local = epoch_s + tz_offset_s;
  const auto day = static_cast<std::int64_t>(std::floor(local / 86400.0));
  const double in_day = local - static_cast<double>(day) * 86400.0;
  // 1970-01-01 was a Thursday.
  const auto wd = static_cast<int>(((day + 3) % 7 + 7) % 7);
  const int hour = std::clamp(static_cast<int>(in_day / 3600.0), 0, kHours - 1);
  return {wd, hour};
}

/// 7 x 24 grid of interarrival distributions indexed by local weekday/hour.
struct ArrivalProfile {
  std::array<FittedDist, kCells> clusters{};
  /// Whether a cell fell back to the global fit for lack of observations.
  std::array<bool, kCells> inherited{};
  FittedDist global;
  double rate_factor = 1.0;
  double tz_offset_s = 0.0;

  const FittedDist& cell(int weekday, int hour) const {
    return clusters[static_cast<std::size_t>(weekday * kHours + hour)];
  }
  FittedDist& cell(int weekday, int hour) { return clusters[static_cast<std::size_t>(weekday * kHours + hour)]; }

  /// Expected interarrival in a cell, after the rate factor.
  double cell_mean(int weekday, int hour) const { return cell(weekday, hour).dist.mean() / rate_factor; }

  void validate() const {
    if (!(rate_factor > 0) || !std::isfinite(rate_factor)) throw InvalidArgument("rate_factor must be positive");
    for (const auto& c : clusters) {
      c.dist.validate();
      if (c.dist.family == Family::normal || c.dist.family == Family::uniform)
        throw InvalidArgument("interarrival cells need a positive-support family");
    }
  }

  friend bool operator==(const ArrivalProfile&, const ArrivalProfile&) = default;
};

/// Uniform profile with the same distribution in every cell.
inline ArrivalProfile uniform_profile(const Distribution& d) {
  ArrivalProfile p;
  p.global = FittedDist{d, 0.0, 0};
  p.clusters.fill(p.global);
  return p;
}

struct ArrivalFitReport {
  std::size_t interarrivals = 0;
  std::size_t dropped_nonpositive = 0;
  std::array<std::size_t, kCells> cell_counts{};
};

/// Clusters interarrivals by the weekday/hour of the earlier timestamp and
/// fits each cluster with fit_best_distribution. Clusters with fewer than 50
/// observations, or whose fit diverges, inherit the global fit.
inline ArrivalProfile fit_arrival_profile(std::span<const double> timestamps, double tz_offset_s = 0.0,
                                          ArrivalFitReport* report = nullptr) {
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (timestamps[i] < timestamps[i - 1]) throw InvalidArgument("timestamps must be sorted ascending");

  std::array<std::vector<double>, kCells> buckets;
  std::vector<double> all;
  ArrivalFitReport rep;
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    const double delta = timestamps[i] - timestamps[i - 1];
    if (!(delta > 0)) {
      ++rep.dropped_nonpositive;
      continue;
    }
    const auto slot = calendar_slot(timestamps[i - 1], tz_offset_s);
    buckets[static_cast<std::size_t>(slot.index())].push_back(delta);
    all.push_back(delta);
  }
  rep.interarrivals = all.size();
  if (all.size() < kMinFitSamples)
    throw InsufficientData("arrival profile needs at least " + std::to_string(kMinFitSamples) +
                           " positive interarrivals, got " + std::to_string(all.size()));

  ArrivalProfile profile;
  profile.tz_offset_s = tz_offset_s;
  profile.global = fit_best_distribution(all);
  for (std::size_t c = 0; c < kCells; ++c) {
    rep.cell_counts[c] = buckets[c].size();
    profile.clusters[c] = profile.global;
    profile.inherited[c] = true;
    if (buckets[c].size() < kMinFitSamples) continue;
    try {
      profile.clusters[c] = fit_best_distribution(buckets[c]);
      profile.inherited[c] = false;
    } catch (const FitDiverged&) {
    }
  }
  if (report) *report = rep;
  return profile;
}

/// Draws an interarrival (seconds, strictly positive) from the cluster that
/// contains the wall-clock instant `wallclock_epoch_s`.
inline double sample_interarrival(const ArrivalProfile& profile, double wallclock_epoch_s, Rng& rng) {
  const auto slot = calendar_slot(wallclock_epoch_s, profile.tz_offset_s);
  const double v = profile.cell(slot.weekday, slot.hour).dist.sample(rng) / profile.rate_factor;
  return v > 1e-6 ? v : 1e-6;
}

} // namespace pipesim::stats
