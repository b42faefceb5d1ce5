#pragma once

#include <array>
#include <cmath>
#include <string>

#include "pipesim/domain.hpp"
#include "pipesim/engine/models.hpp"
#include "pipesim/stats/arrival.hpp"
#include "pipesim/stats/curve.hpp"
#include "pipesim/stats/gmm.hpp"
#include "pipesim/stats/model_file.hpp"

namespace pipesim::defaults {

// Synthetic stand-ins for the platform-fitted models. Every value here is a
// placeholder shaped to give plausible magnitudes; refit with `pipesim fit`
// against real traces before drawing conclusions from a run.

inline constexpr double kMeanInterarrival = 44.0;
inline constexpr int kPeakHour = 16;

inline stats::GmmModel log_seconds_mixture(std::initializer_list<std::array<double, 3>> comps, std::string tag) {
  // Each component is {weight, median seconds, sd of ln seconds}.
  stats::GmmModel g;
  for (const auto& c : comps) {
    g.weights.push_back(c[0]);
    g.means.push_back(Eigen::VectorXd::Constant(1, std::log(c[1])));
    g.covariances.push_back(Eigen::MatrixXd::Constant(1, 1, c[2] * c[2]));
  }
  g.lower = {std::log(0.5)};
  g.upper = {std::log(14.0 * 86400.0)};
  g.tag = std::move(tag);
  return g;
}

/// Mixture over (ln rows, ln cols, ln bytes).
inline stats::GmmModel asset_mixture() {
  struct C {
    double w, rows, cols, bytes_per_cell;
    double s_rows, s_cols, s_bpc;
  };
  const C comps[] = {{0.30, 2e3, 12, 8, 0.9, 0.5, 0.3},
                     {0.25, 3e4, 25, 10, 1.0, 0.5, 0.4},
                     {0.20, 2e5, 40, 12, 0.8, 0.6, 0.4},
                     {0.15, 8e3, 150, 6, 0.9, 0.5, 0.3},
                     {0.10, 1e6, 20, 16, 0.7, 0.4, 0.5}};
  stats::GmmModel g;
  for (const auto& c : comps) {
    g.weights.push_back(c.w);
    const double lr = std::log(c.rows), lc = std::log(c.cols);
    g.means.push_back(Eigen::Vector3d{lr, lc, lr + lc + std::log(c.bytes_per_cell)});
    // ln bytes = ln rows + ln cols + ln(bytes per cell), independent terms.
    Eigen::Matrix3d cov;
    const double vr = c.s_rows * c.s_rows, vc = c.s_cols * c.s_cols, vb = c.s_bpc * c.s_bpc;
    cov << vr, 0, vr, 0, vc, vc, vr, vc, vr + vc + vb;
    g.covariances.push_back(cov);
  }
  g.lower = {std::log(1e2), std::log(2.0), std::log(1e3)};
  g.upper = {std::log(2e6), std::log(1e3), std::log(1e11)};
  g.tag = "synthetic-default";
  return g;
}

inline stats::ExpCurve preprocess_curve() {
  return {0.018, 1.330, 2.156, -1.0, 0.15, stats::CurveSpace::log_seconds};
}

/// Relative arrival rate by local weekday (0 = Monday) and hour.
inline double relative_rate(int weekday, int hour) {
  static constexpr std::array<double, 24> day = {0.35, 0.30, 0.30, 0.30, 0.30, 0.35, 0.45, 0.65, 0.90, 1.10, 1.20, 1.25,
                                                 1.10, 1.20, 1.30, 1.50, 2.20, 1.50, 1.00, 0.80, 0.65, 0.55, 0.45, 0.40};
  const double r = day[static_cast<std::size_t>(hour)];
  return weekday >= 5 ? 0.45 * r : r;
}

/// Clustered profile whose busiest cells sit at 16:00 on weekdays and whose
/// long-run arrival rate is 1 / kMeanInterarrival.
inline stats::ArrivalProfile arrival_profile() {
  constexpr double shape_a = 1.3, shape_c = 0.9;
  const double unit_mean = stats::Distribution::exp_weibull(shape_a, shape_c, 1.0).mean();
  double mean_rate = 0;
  for (int wd = 0; wd < stats::kWeekdays; ++wd)
    for (int h = 0; h < stats::kHours; ++h) mean_rate += relative_rate(wd, h);
  mean_rate /= stats::kCells;
  const double base = kMeanInterarrival * mean_rate; // interarrival mean at relative rate 1

  stats::ArrivalProfile p;
  p.global = {stats::Distribution::exp_weibull(shape_a, shape_c, kMeanInterarrival / unit_mean), 0.0, 0};
  for (int wd = 0; wd < stats::kWeekdays; ++wd)
    for (int h = 0; h < stats::kHours; ++h) {
      const double target = base / relative_rate(wd, h);
      p.cell(wd, h) = {stats::Distribution::exp_weibull(shape_a, shape_c, target / unit_mean), 0.0, 0};
    }
  return p;
}

inline stats::ModelSet model_set() {
  stats::ModelSet m;
  m.gmms["assets"] = asset_mixture();
  m.curves["preprocess"] = preprocess_curve();
  m.gmms[engine::train_model_name(Framework::SparkML)] = log_seconds_mixture({{0.7, 10, 0.6}, {0.3, 60, 0.8}}, "synthetic-default");
  m.gmms[engine::train_model_name(Framework::TensorFlow)] =
      log_seconds_mixture({{0.6, 180, 0.7}, {0.4, 1200, 0.8}}, "synthetic-default");
  m.gmms[engine::train_model_name(Framework::PyTorch)] = log_seconds_mixture({{0.5, 240, 0.7}, {0.5, 1500, 0.8}}, "synthetic-default");
  m.gmms[engine::train_model_name(Framework::Caffe)] = log_seconds_mixture({{1.0, 600, 0.8}}, "synthetic-default");
  m.gmms[engine::train_model_name(Framework::Other)] = log_seconds_mixture({{1.0, 30, 1.0}}, "synthetic-default");
  m.gmms["evaluate"] = log_seconds_mixture({{0.7, 5, 0.5}, {0.3, 30, 0.7}}, "synthetic-default");
  m.profiles["default"] = arrival_profile();
  m.dists["interarrival"] = {stats::Distribution::exponential(1.0 / kMeanInterarrival), 0.0, 0};
  return m;
}

} // namespace pipesim::defaults
