#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"
#include "pipesim/stats/optimize.hpp"

namespace pipesim::stats {

/// What f(x) predicts, given x = ln(rows * cols).
enum class CurveSpace {
  log_seconds, ///< f(x) = ln(seconds), time = exp(f(x)) * noise
  seconds,     ///< f(x) = seconds, time = f(x) * noise
};

inline std::string_view curve_space_name(CurveSpace s) {
  return s == CurveSpace::log_seconds ? "log-seconds" : "seconds";
}

/// f(x) = a * b^x + c with a multiplicative lognormal noise factor.
struct ExpCurve {
  double a = 0.0;
  double b = 2.0;
  double c = 0.0;
  double noise_mu = 0.0;    ///< log-scale of the noise factor
  double noise_sigma = 0.0; ///< shape of the noise factor
  CurveSpace space = CurveSpace::log_seconds;

  double operator()(double x) const { return a * std::pow(b, x) + c; }

  void validate() const {
    if (!(b > 1) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
      throw InvalidArgument("curve needs finite a, c and b > 1");
    if (!std::isfinite(noise_mu) || !(noise_sigma >= 0) || !std::isfinite(noise_sigma))
      throw InvalidArgument("curve noise needs finite mu and sigma >= 0");
  }

  /// Noise-free duration in seconds for an asset with `cells` = rows * cols.
  double deterministic_seconds(double cells) const {
    const double f = (*this)(std::log(cells));
    return space == CurveSpace::log_seconds ? std::exp(f) : f;
  }

  double noise_factor(Rng& rng) const {
    if (noise_sigma == 0.0) return std::exp(noise_mu);
    return std::exp(noise_mu + noise_sigma * std::normal_distribution<double>{0.0, 1.0}(rng));
  }

  friend bool operator==(const ExpCurve&, const ExpCurve&) = default;
};

struct CurveFit {
  ExpCurve curve;
  double initial_sse = 0.0;
  double sse = 0.0;
  int iterations = 0;
};

/// Nonlinear least-squares fit of y = a * b^x + c (Levenberg-Marquardt over
/// (a, ln(b - 1), c), so b stays above 1). The noise parameters are the mean
/// and standard deviation of the log-space residuals.
inline CurveFit fit_exp_curve_detailed(std::span<const double> xs, std::span<const double> ys,
                                      CurveSpace space = CurveSpace::log_seconds) {
  if (xs.size() != ys.size()) throw InvalidArgument("x and y differ in length");
  if (xs.size() < 10) throw TooFewSamples("curve fit needs at least 10 points, got " + std::to_string(xs.size()));
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return xs[i] < xs[j]; });
  std::vector<double> x, y;
  for (auto i : idx) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw InvalidArgument("curve data must be finite");
    x.push_back(xs[i]);
    y.push_back(ys[i]);
  }
  std::vector<double> distinct = x;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw InvalidArgument("curve fit needs at least three distinct x values");

  const int m = static_cast<int>(x.size());
  auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const double b = 1.0 + std::exp(p(1));
    for (int i = 0; i < m; ++i) r(i) = p(0) * std::pow(b, x[static_cast<std::size_t>(i)]) + p(2) - y[static_cast<std::size_t>(i)];
  };
  auto jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
    const double eb = std::exp(p(1));
    const double b = 1.0 + eb;
    for (int i = 0; i < m; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      const double bx = std::pow(b, xi);
      J(i, 0) = bx;
      J(i, 1) = p(0) * xi * std::pow(b, xi - 1.0) * eb;
      J(i, 2) = 1.0;
    }
  };

  // Start points: log-linear regression of (y - c0) on x for several c0 below min(y).
  const double ymin = *std::min_element(y.begin(), y.end());
  const double ymax = *std::max_element(y.begin(), y.end());
  const double range = ymax - ymin > 0 ? ymax - ymin : std::max(std::abs(ymax), 1.0) * 1e-3;
  Eigen::VectorXd best_start(3);
  double best_cost = HUGE_VAL;
  Eigen::VectorXd r(m);
  for (double delta : {1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0}) {
    const double c0 = ymin - delta * range;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      const double li = std::log(y[static_cast<std::size_t>(i)] - c0);
      sx += xi; sy += li; sxx += xi * xi; sxy += xi * li;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icept = (sy - slope * sx) / m;
    const double b0 = std::max(std::exp(slope), 1.01);
    Eigen::VectorXd p(3);
    p << std::exp(icept), std::log(b0 - 1.0), c0;
    residuals(p, r);
    const double cost = r.squaredNorm();
    if (std::isfinite(cost) && cost < best_cost) {
      best_cost = cost;
      best_start = p;
    }
  }
  if (!std::isfinite(best_cost)) throw NoConvergence("no finite start point for the curve fit");

  const auto lm = levenberg_marquardt(residuals, jacobian, best_start, m, 2000);
  if (!lm.converged || !std::isfinite(lm.cost)) throw NoConvergence("Levenberg-Marquardt did not converge");

  CurveFit out;
  out.curve.a = lm.params(0);
  out.curve.b = 1.0 + std::exp(lm.params(1));
  out.curve.c = lm.params(2);
  out.curve.space = space;
  out.initial_sse = lm.initial_cost;
  out.sse = lm.cost;
  out.iterations = lm.iterations;

  std::vector<double> log_res;
  for (int i = 0; i < m; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const double f = out.curve(x[iu]);
    if (space == CurveSpace::log_seconds) log_res.push_back(y[iu] - f);
    else if (f > 0 && y[iu] > 0) log_res.push_back(std::log(y[iu] / f));
  }
  if (!log_res.empty()) {
    double mu = 0;
    for (double v : log_res) mu += v;
    mu /= static_cast<double>(log_res.size());
    double var = 0;
    for (double v : log_res) var += (v - mu) * (v - mu);
    out.curve.noise_mu = mu;
    out.curve.noise_sigma = std::sqrt(var / static_cast<double>(log_res.size()));
  }
  return out;
}

inline ExpCurve fit_exp_curve(std::span<const double> x, std::span<const double> y) {
  return fit_exp_curve_detailed(x, y).curve;
}

} // namespace pipesim::stats
