#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace pipesim::stats {

struct MinimizeResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimizer (Nelder-Mead with the standard
/// reflection/expansion/contraction/shrink coefficients). Non-finite
/// objective values are treated as +inf, which keeps the simplex inside the
/// parameter domain.
inline MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> start, double step = 0.5,
                                  int max_iter = 4000, double ftol = 1e-12) {
  const std::size_t n = start.size();
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  MinimizeResult result;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const auto best = order.front(), worst = order.back(), second = order[n - 1];
    result.iterations = iter;

    const double spread = std::abs(values[worst] - values[best]);
    if (std::isfinite(values[worst]) &&
        spread <= ftol * (std::abs(values[best]) + std::abs(values[worst])) + 1e-300) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);

    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
      return x;
    };

    auto reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      auto expanded = along(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        values[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = std::move(reflected);
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    auto contracted = along(outside ? -0.5 : 0.5);
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = std::move(contracted);
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j)
        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  return result;
}

struct LeastSquaresResult {
  Eigen::VectorXd params;
  double initial_cost = 0.0; ///< sum of squared residuals at the start point
  double cost = 0.0;         ///< sum of squared residuals at the solution
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt for small dense problems.
///
/// `residuals(p, r)` fills r (size m); `jacobian(p, J)` fills the m x n
/// Jacobian of r. Steps are only accepted when they lower the cost, so the
/// returned cost never exceeds the initial cost.
inline LeastSquaresResult levenberg_marquardt(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residuals,
    const std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)>& jacobian,
    Eigen::VectorXd start, int m, int max_iter = 500, double tol = 1e-15) {
  LeastSquaresResult out;
  const auto n = start.size();
  Eigen::VectorXd r(m), r_trial(m);
  Eigen::MatrixXd J(m, n);

  residuals(start, r);
  double cost = r.squaredNorm();
  out.initial_cost = cost;
  double lambda = 1e-3;
  Eigen::VectorXd p = std::move(start);

  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    jacobian(p, J);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, cost)) {
      out.converged = true;
      break;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 40 && !improved; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += lambda * (JtJ.diagonal().array().max(1e-12));
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd trial = p + step;
      residuals(trial, r_trial);
      const double trial_cost = r_trial.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        const double step_rel = step.norm() / (p.norm() + 1e-12);
        p = trial;
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (rel < tol || step_rel < 1e-14) out.converged = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!improved) {
      // No descent direction left at machine precision: a stationary point.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }
  out.params = p;
  out.cost = cost;
  return out;
}

} // namespace pipesim::stats
