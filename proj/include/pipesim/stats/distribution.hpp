#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"
#include "pipesim/text.hpp"

namespace pipesim::stats {

/// Parametric families. The first three are the candidates of
/// fit_best_distribution, in tie-break order; the rest are only built from
/// configuration (point masses, fixed-rate arrivals, metric models).
enum class Family { lognormal, exp_weibull, pareto, exponential, constant, beta, normal, uniform };

inline constexpr std::array<Family, 3> fit_candidates{Family::lognormal, Family::exp_weibull,
                                                      Family::pareto};

inline std::string_view family_name(Family f) {
  switch (f) {
  case Family::lognormal: return "lognormal";
  case Family::exp_weibull: return "exp-weibull";
  case Family::pareto: return "pareto";
  case Family::exponential: return "exponential";
  case Family::constant: return "constant";
  case Family::beta: return "beta";
  case Family::normal: return "normal";
  case Family::uniform: return "uniform";
  }
  return "?";
}

inline int family_arity(Family f) {
  switch (f) {
  case Family::exp_weibull: return 3;
  case Family::exponential:
  case Family::constant: return 1;
  default: return 2;
  }
}

inline std::optional<Family> parse_family(std::string_view s) {
  for (auto f : {Family::lognormal, Family::exp_weibull, Family::pareto, Family::exponential,
                 Family::constant, Family::beta, Family::normal, Family::uniform})
    if (family_name(f) == s) return f;
  return std::nullopt;
}

/// A univariate distribution as a value: family plus up to three parameters.
///
/// Parameter layout:
///   lognormal(mu, sigma)          log-scale and shape
///   exp-weibull(a, c, scale)      exponent, Weibull shape, scale
///   pareto(alpha, xm)             shape and minimum
///   exponential(rate)
///   constant(value)
///   beta(alpha, beta)
///   normal(mu, sigma)
///   uniform(lo, hi)
struct Distribution {
  Family family = Family::constant;
  std::array<double, 3> params{0.0, 0.0, 0.0};

  static Distribution lognormal(double mu, double sigma) { return make(Family::lognormal, {mu, sigma, 0}); }
  static Distribution exp_weibull(double a, double c, double scale) { return make(Family::exp_weibull, {a, c, scale}); }
  static Distribution pareto(double alpha, double xm) { return make(Family::pareto, {alpha, xm, 0}); }
  static Distribution exponential(double rate) { return make(Family::exponential, {rate, 0, 0}); }
  static Distribution constant(double v) { return make(Family::constant, {v, 0, 0}); }
  static Distribution beta(double a, double b) { return make(Family::beta, {a, b, 0}); }
  static Distribution normal(double mu, double sigma) { return make(Family::normal, {mu, sigma, 0}); }
  static Distribution uniform(double lo, double hi) { return make(Family::uniform, {lo, hi, 0}); }

  static Distribution make(Family f, std::array<double, 3> p) {
    Distribution d{f, p};
    d.validate();
    return d;
  }

  bool is_valid() const {
    const auto& p = params;
    for (int i = 0; i < family_arity(family); ++i)
      if (!std::isfinite(p[static_cast<std::size_t>(i)])) return false;
    switch (family) {
    case Family::lognormal: return p[1] >= 0;
    case Family::exp_weibull: return p[0] > 0 && p[1] > 0 && p[2] > 0;
    case Family::pareto: return p[0] > 0 && p[1] > 0;
    case Family::exponential: return p[0] > 0;
    case Family::constant: return true;
    case Family::beta: return p[0] > 0 && p[1] > 0;
    case Family::normal: return p[1] >= 0;
    case Family::uniform: return p[0] <= p[1];
    }
    return false;
  }

  void validate() const {
    if (!is_valid()) throw InvalidArgument("illegal parameters for " + to_string());
  }

  double log_pdf(double x) const {
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    const auto& p = params;
    switch (family) {
    case Family::lognormal: {
      if (x <= 0) return ninf;
      const double z = (std::log(x) - p[0]) / p[1];
      return -std::log(x) - std::log(p[1]) - 0.5 * std::log(2 * std::numbers::pi) - 0.5 * z * z;
    }
    case Family::exp_weibull: {
      if (x <= 0) return ninf;
      const double a = p[0], c = p[1], s = p[2];
      const double z = x / s;
      const double t = std::pow(z, c);
      // log(1 - exp(-t)) without cancellation for small t
      const double log_cdf_w = std::log(-std::expm1(-t));
      return std::log(a) + std::log(c) - std::log(s) + (c - 1) * std::log(z) - t + (a - 1) * log_cdf_w;
    }
    case Family::pareto:
      if (x < p[1]) return ninf;
      return std::log(p[0]) + p[0] * std::log(p[1]) - (p[0] + 1) * std::log(x);
    case Family::exponential:
      if (x < 0) return ninf;
      return std::log(p[0]) - p[0] * x;
    case Family::constant: return x == p[0] ? std::numeric_limits<double>::infinity() : ninf;
    case Family::beta:
      if (x <= 0 || x >= 1) return ninf;
      return (p[0] - 1) * std::log(x) + (p[1] - 1) * std::log1p(-x) + std::lgamma(p[0] + p[1]) -
             std::lgamma(p[0]) - std::lgamma(p[1]);
    case Family::normal: {
      const double z = (x - p[0]) / p[1];
      return -std::log(p[1]) - 0.5 * std::log(2 * std::numbers::pi) - 0.5 * z * z;
    }
    case Family::uniform:
      if (x < p[0] || x > p[1]) return ninf;
      return -std::log(p[1] - p[0]);
    }
    return ninf;
  }

  double pdf(double x) const { return std::exp(log_pdf(x)); }

  double sample(Rng& rng) const {
    const auto& p = params;
    switch (family) {
    case Family::lognormal:
      if (p[1] == 0) return std::exp(p[0]);
      return std::exp(p[0] + p[1] * std::normal_distribution<double>{0.0, 1.0}(rng));
    case Family::exp_weibull: return exp_weibull_quantile(uniform01(rng));
    case Family::pareto: return p[1] * std::pow(1.0 - uniform01(rng), -1.0 / p[0]);
    case Family::exponential: return -std::log1p(-uniform01(rng)) / p[0];
    case Family::constant: return p[0];
    case Family::beta: {
      const double x = std::gamma_distribution<double>{p[0], 1.0}(rng);
      const double y = std::gamma_distribution<double>{p[1], 1.0}(rng);
      return x / (x + y);
    }
    case Family::normal:
      if (p[1] == 0) return p[0];
      return p[0] + p[1] * std::normal_distribution<double>{0.0, 1.0}(rng);
    case Family::uniform: return p[0] + (p[1] - p[0]) * uniform01(rng);
    }
    return 0.0;
  }

  double mean() const { return moment(1); }

  double variance() const {
    const double m = moment(1);
    return moment(2) - m * m;
  }

  /// Raw moment E[X^k] for k in {1, 2}; infinite where it does not exist.
  double moment(int k) const {
    const auto& p = params;
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (family) {
    case Family::lognormal: return std::exp(k * p[0] + 0.5 * k * k * p[1] * p[1]);
    case Family::exp_weibull: return std::pow(p[2], k) * exp_weibull_unit_moment(k);
    case Family::pareto:
      return p[0] > k ? p[0] * std::pow(p[1], k) / (p[0] - k) : inf;
    case Family::exponential: return k == 1 ? 1.0 / p[0] : 2.0 / (p[0] * p[0]);
    case Family::constant: return std::pow(p[0], k);
    case Family::beta: {
      const double m = p[0] / (p[0] + p[1]);
      if (k == 1) return m;
      return m * (p[0] + 1) / (p[0] + p[1] + 1);
    }
    case Family::normal: return k == 1 ? p[0] : p[0] * p[0] + p[1] * p[1];
    case Family::uniform:
      return k == 1 ? 0.5 * (p[0] + p[1]) : (p[0] * p[0] + p[0] * p[1] + p[1] * p[1]) / 3.0;
    }
    return inf;
  }

  /// Same distribution with its support scaled by `factor` (> 0).
  Distribution scaled(double factor) const {
    Distribution d = *this;
    auto& p = d.params;
    switch (family) {
    case Family::lognormal: p[0] += std::log(factor); break;
    case Family::exp_weibull: p[2] *= factor; break;
    case Family::pareto: p[1] *= factor; break;
    case Family::exponential: p[0] /= factor; break;
    case Family::constant: p[0] *= factor; break;
    case Family::normal: p[0] *= factor; p[1] *= factor; break;
    case Family::uniform: p[0] *= factor; p[1] *= factor; break;
    case Family::beta: throw InvalidArgument("beta distribution cannot be rescaled");
    }
    return d;
  }

  std::string to_string() const {
    return std::string(family_name(family)) + "(" +
           text::join_reals(params.data(), static_cast<std::size_t>(family_arity(family))) + ")";
  }

  /// Parses the to_string() form, e.g. "beta(8,2)".
  static Distribution parse(std::string_view s) {
    s = text::trim(s);
    const auto open = s.find('(');
    if (open == std::string_view::npos || s.back() != ')')
      throw InvalidArgument("distribution must look like family(p1,...): '" + std::string(s) + "'");
    const auto fam = parse_family(text::trim(s.substr(0, open)));
    if (!fam) throw InvalidArgument("unknown distribution family in '" + std::string(s) + "'");
    const auto values = text::parse_reals(s.substr(open + 1, s.size() - open - 2));
    if (!values || static_cast<int>(values->size()) != family_arity(*fam))
      throw InvalidArgument("wrong parameter list in '" + std::string(s) + "'");
    std::array<double, 3> p{0, 0, 0};
    for (std::size_t i = 0; i < values->size(); ++i) p[i] = (*values)[i];
    return make(*fam, p);
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;

private:
  double exp_weibull_quantile(double u) const {
    const double a = params[0], c = params[1], s = params[2];
    // F(x) = (1 - exp(-(x/s)^c))^a
    const double w = std::pow(u, 1.0 / a);
    return s * std::pow(-std::log1p(-w), 1.0 / c);
  }

  // E[(X/scale)^k] = a * int_0^inf t^(k/c) (1-e^-t)^(a-1) e^-t dt, integrated
  // over s = ln t with the trapezoid rule (the integrand decays doubly
  // exponentially at both ends).
  double exp_weibull_unit_moment(int k) const {
    const double a = params[0], c = params[1];
    const double lo = -60.0, hi = 7.0;
    const int n = 6000;
    const double h = (hi - lo) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double sv = lo + i * h;
      const double t = std::exp(sv);
      const double log_term = (k / c + 1.0) * sv + (a - 1.0) * std::log(-std::expm1(-t)) - t;
      const double g = std::exp(log_term);
      sum += (i == 0 || i == n) ? 0.5 * g : g;
    }
    return a * sum * h;
  }
};

} // namespace pipesim::stats
