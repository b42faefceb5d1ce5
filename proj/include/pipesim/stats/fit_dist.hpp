#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pipesim/error.hpp"
#include "pipesim/stats/distribution.hpp"
#include "pipesim/stats/optimize.hpp"
#include "pipesim/stats/quantile.hpp"

namespace pipesim::stats {

/// Result of distribution selection.
struct FittedDist {
  Distribution dist;
  double sse = 0.0;  ///< histogram-vs-density squared error of the fit
  std::size_t n = 0; ///< samples used

  friend bool operator==(const FittedDist&, const FittedDist&) = default;
};

inline constexpr std::size_t kMinFitSamples = 50;
inline constexpr int kSseBins = 100;
/// A later family must beat the current best SSE by this relative margin;
/// smaller gaps count as ties and go to the earlier family.
inline constexpr double kSseTieMargin = 0.10;

namespace detail {

struct LogMoments {
  double mean = 0.0;
  double sd = 0.0;
};

inline LogMoments log_moments(std::span<const double> x) {
  LogMoments m;
  for (double v : x) m.mean += std::log(v);
  m.mean /= static_cast<double>(x.size());
  for (double v : x) {
    const double d = std::log(v) - m.mean;
    m.sd += d * d;
  }
  m.sd = std::sqrt(m.sd / static_cast<double>(x.size()));
  return m;
}

inline bool degenerate(const LogMoments& m) { return !(m.sd > 1e-12 * std::max(1.0, std::abs(m.mean))); }

inline double mean_log_likelihood(const Distribution& d, std::span<const double> x) {
  double ll = 0.0;
  for (double v : x) ll += d.log_pdf(v);
  return ll / static_cast<double>(x.size());
}

inline Distribution fit_exp_weibull(std::span<const double> x, const LogMoments& lm) {
  // Weibull start point from log-moments: sd(ln X) = pi / (c sqrt 6).
  const double c0 = std::clamp(1.2825 / lm.sd, 0.05, 50.0);
  const double s0 = std::exp(lm.mean + 0.5772 / c0);
  auto objective = [&](const std::vector<double>& p) {
    const double a = std::exp(p[0]), c = std::exp(p[1]), s = std::exp(p[2]);
    if (!std::isfinite(a) || !std::isfinite(c) || !std::isfinite(s) || a > 1e4 || c > 1e3) return HUGE_VAL;
    return -mean_log_likelihood(Distribution{Family::exp_weibull, {a, c, s}}, x);
  };
  auto best = nelder_mead(objective, {0.0, std::log(c0), std::log(s0)});
  // Restart from the optimum; simplex methods can stall on a ridge.
  for (int restart = 0; restart < 2; ++restart) {
    auto again = nelder_mead(objective, best.x, 0.2);
    if (!(again.value < best.value - 1e-12)) break;
    best = std::move(again);
  }
  if (!std::isfinite(best.value)) throw FitDiverged("exp-weibull likelihood is not finite");
  Distribution d{Family::exp_weibull, {std::exp(best.x[0]), std::exp(best.x[1]), std::exp(best.x[2])}};
  if (!d.is_valid()) throw FitDiverged("exp-weibull parameters left the legal domain");
  return d;
}

} // namespace detail

/// Maximum likelihood fit of one family. Throws FitDiverged when the sample
/// gives no usable estimate (for example zero log-variance).
inline Distribution fit_mle(Family family, std::span<const double> x) {
  if (x.size() < 2) throw FitDiverged("need at least two samples");
  for (double v : x)
    if (!(v > 0) || !std::isfinite(v)) throw FitDiverged("samples must be finite and positive");
  const auto lm = detail::log_moments(x);
  if (detail::degenerate(lm)) throw FitDiverged(std::string(family_name(family)) + ": samples have no spread");
  switch (family) {
  case Family::lognormal: return Distribution::lognormal(lm.mean, lm.sd);
  case Family::pareto: {
    const double xm = *std::min_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) s += std::log(v / xm);
    if (!(s > 0)) throw FitDiverged("pareto: all samples at the minimum");
    return Distribution::pareto(static_cast<double>(x.size()) / s, xm);
  }
  case Family::exp_weibull: return detail::fit_exp_weibull(x, lm);
  default: throw InvalidArgument(std::string(family_name(family)) + " is not a fit candidate");
  }
}

/// Density histogram of ln(samples): kSseBins equal-width bins over
/// [min, 99th percentile], normalized by the total sample count.
struct LogHistogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<double> density;

  static LogHistogram build(std::span<const double> x) {
    std::vector<double> logs(x.size());
    std::transform(x.begin(), x.end(), logs.begin(), [](double v) { return std::log(v); });
    std::sort(logs.begin(), logs.end());
    LogHistogram h;
    h.lo = logs.front();
    const double hi = quantile_sorted(logs, 0.99);
    h.width = (hi - h.lo) / kSseBins;
    if (!(h.width > 0)) throw FitDiverged("histogram range is empty");
    h.density.assign(kSseBins, 0.0);
    for (double v : logs) {
      if (v > hi) break;
      auto b = static_cast<int>((v - h.lo) / h.width);
      b = std::clamp(b, 0, kSseBins - 1);
      h.density[static_cast<std::size_t>(b)] += 1.0;
    }
    const double norm = static_cast<double>(x.size()) * h.width;
    for (auto& d : h.density) d /= norm;
    return h;
  }

  /// SSE against the density of ln X implied by `dist`.
  double sse(const Distribution& dist) const {
    double s = 0.0;
    for (int i = 0; i < kSseBins; ++i) {
      const double y = lo + (i + 0.5) * width;
      const double f = std::exp(dist.log_pdf(std::exp(y)) + y);
      const double diff = density[static_cast<std::size_t>(i)] - (std::isfinite(f) ? f : 0.0);
      s += diff * diff;
    }
    return s;
  }
};

/// Fits every candidate family by maximum likelihood and returns the one
/// whose density best matches the sample histogram. Ties (within
/// kSseTieMargin) go to the earlier family in lognormal < exp-weibull <
/// pareto order, whatever the order of `candidates`.
inline FittedDist fit_best_distribution(std::span<const double> samples,
                                        std::span<const Family> candidates = fit_candidates) {
  if (samples.size() < kMinFitSamples)
    throw TooFewSamples("distribution fit needs at least " + std::to_string(kMinFitSamples) +
                        " samples, got " + std::to_string(samples.size()));
  for (double v : samples)
    if (!(v > 0) || !std::isfinite(v)) throw InvalidArgument("distribution fit needs finite positive samples");

  std::optional<LogHistogram> hist;
  try {
    hist = LogHistogram::build(samples);
  } catch (const FitDiverged&) {
    throw FitDiverged("every candidate family diverged (degenerate sample)");
  }

  std::optional<FittedDist> best;
  std::string failures;
  for (Family f : fit_candidates) {
    if (std::find(candidates.begin(), candidates.end(), f) == candidates.end()) continue;
    try {
      const auto d = fit_mle(f, samples);
      const double sse = hist->sse(d);
      if (!std::isfinite(sse)) throw FitDiverged("non-finite SSE");
      if (!best || sse < best->sse * (1.0 - kSseTieMargin)) best = FittedDist{d, sse, samples.size()};
    } catch (const FitDiverged& e) {
      failures += std::string(" ") + e.what();
    }
  }
  if (!best) throw FitDiverged("every candidate family diverged:" + failures);
  return *best;
}

} // namespace pipesim::stats
