#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "pipesim/error.hpp"
#include "pipesim/rng.hpp"

namespace pipesim::stats {

/// Gaussian mixture with full covariances.
struct GmmModel {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  /// Per-dimension rejection box for sampling; both empty or both size d.
  std::vector<double> lower;
  std::vector<double> upper;
  /// Free-form provenance label, e.g. "synthetic-default".
  std::string tag;

  std::size_t k() const { return weights.size(); }
  std::size_t dim() const { return means.empty() ? 0 : static_cast<std::size_t>(means.front().size()); }
  bool bounded() const { return !lower.empty(); }

  /// Throws InvalidArgument unless weights form a simplex and every
  /// covariance is symmetric positive-definite.
  void validate() const {
    if (weights.empty()) throw InvalidArgument("mixture has no components");
    if (means.size() != k() || covariances.size() != k()) throw InvalidArgument("mixture component arrays differ in length");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0) || !std::isfinite(w)) throw InvalidArgument("mixture weight outside [0, inf)");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("mixture weights sum to " + std::to_string(sum));
    const auto d = static_cast<Eigen::Index>(dim());
    for (std::size_t j = 0; j < k(); ++j) {
      const auto& c = covariances[j];
      if (means[j].size() != d || c.rows() != d || c.cols() != d) throw InvalidArgument("mixture dimension mismatch");
      if (!c.isApprox(c.transpose(), 1e-12)) throw InvalidArgument("covariance is not symmetric");
      Eigen::LLT<Eigen::MatrixXd> llt(c);
      if (llt.info() != Eigen::Success) throw InvalidArgument("covariance is not positive definite");
    }
    if (lower.size() != upper.size() || (!lower.empty() && lower.size() != dim()))
      throw InvalidArgument("mixture bounds have the wrong dimension");
  }

  Eigen::VectorXd mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
    for (std::size_t j = 0; j < k(); ++j) m += weights[j] * means[j];
    return m;
  }

  /// Covariance of the mixture (ignores rejection bounds).
  Eigen::MatrixXd covariance() const {
    const auto m = mean();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m.size(), m.size());
    for (std::size_t j = 0; j < k(); ++j) {
      const Eigen::VectorXd dm = means[j] - m;
      c += weights[j] * (covariances[j] + dm * dm.transpose());
    }
    return c;
  }
};

struct GmmFitOptions {
  int max_iterations = 300;
  double tolerance = 1e-6;      ///< relative change of the mean log-likelihood
  double regularization = 1e-6; ///< added to every covariance diagonal
  int kmeans_iterations = 20;
};

struct GmmFit {
  GmmModel model;
  /// Mean per-sample log-likelihood after every E-step.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Per-component Cholesky factor plus the log normalizing constant.
struct GaussianFactor {
  Eigen::MatrixXd lower;
  double log_norm = 0.0;
};

inline std::optional<GaussianFactor> factorize(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return std::nullopt;
  GaussianFactor f;
  f.lower = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    const double di = f.lower(i, i);
    if (!(di > 0) || !std::isfinite(di)) return std::nullopt;
    log_det += 2.0 * std::log(di);
  }
  f.log_norm = -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) + log_det);
  return f;
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

/// k-means++ seeding followed by a few Lloyd iterations; returns a hard
/// assignment per row.
inline std::vector<int> kmeans_init(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int iterations) {
  const auto n = x.rows();
  Rng rng{splitmix64(seed)};
  Eigen::MatrixXd centers(k, x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double u = uniform01(rng) * total;
      for (pick = 0; pick < n - 1; ++pick) {
        u -= d2(pick);
        if (u < 0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> label(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (label[static_cast<std::size_t>(i)] != best) {
        label[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(label[static_cast<std::size_t>(i)]) += x.row(i);
      counts(label[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
    if (!changed && it > 0) break;
  }
  return label;
}

} // namespace detail

/// EM fit of a k-component full-covariance mixture to the rows of `data`.
///
/// Initialized from k-means++ hard assignments. When a covariance loses
/// positive-definiteness the diagonal regularization is raised tenfold, up
/// to 1.0, before SingularComponent is thrown. Bounds are set to the
/// per-dimension data range.
inline GmmFit fit_gmm_detailed(const Eigen::MatrixXd& data, int k, std::uint64_t seed,
                               const GmmFitOptions& opt = {}) {
  if (k < 1) throw InvalidArgument("component count must be at least 1");
  if (data.cols() < 1) throw InvalidArgument("data must have at least one column");
  const auto n = data.rows();
  const auto d = data.cols();
  if (n < 10 * static_cast<Eigen::Index>(k))
    throw TooFewSamples("mixture with " + std::to_string(k) + " components needs at least " +
                        std::to_string(10 * k) + " rows, got " + std::to_string(n));
  if (!data.allFinite()) throw InvalidArgument("data contains non-finite values");

  const auto labels = detail::kmeans_init(data, k, seed, opt.kmeans_iterations);
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) resp(i, labels[static_cast<std::size_t>(i)]) = 1.0;

  GmmModel model;
  model.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  model.means.assign(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(d));
  model.covariances.assign(static_cast<std::size_t>(k), Eigen::MatrixXd::Identity(d, d));

  // Global covariance, used for components that start out empty.
  const Eigen::RowVectorXd global_mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - global_mean;
  const Eigen::MatrixXd global_cov = centered.transpose() * centered / static_cast<double>(n);

  double reg = opt.regularization;
  std::vector<detail::GaussianFactor> factors(static_cast<std::size_t>(k));

  auto m_step = [&]() {
    for (int j = 0; j < k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const double nk = resp.col(j).sum();
      model.weights[ju] = nk / static_cast<double>(n);
      if (nk < 1e-10) {
        // Starved component: keep its previous location and shape.
        if (model.means[ju].isZero() && model.covariances[ju].isIdentity())
          model.covariances[ju] = global_cov;
        continue;
      }
      const Eigen::VectorXd mu = (data.transpose() * resp.col(j)) / nk;
      const Eigen::MatrixXd diff = data.rowwise() - mu.transpose();
      Eigen::MatrixXd cov = (diff.array().colwise() * resp.col(j).array()).matrix().transpose() * diff / nk;
      cov = 0.5 * (cov + cov.transpose());
      model.means[ju] = mu;
      model.covariances[ju] = cov;
    }
    double wsum = 0.0;
    for (double w : model.weights) wsum += w;
    for (double& w : model.weights) w /= wsum;
  };

  auto factorize_all = [&]() {
    while (true) {
      bool ok = true;
      for (int j = 0; j < k && ok; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        auto f = detail::factorize(model.covariances[ju] + reg * Eigen::MatrixXd::Identity(d, d));
        if (!f) ok = false;
        else factors[ju] = std::move(*f);
      }
      if (ok) return;
      reg *= 10.0;
      if (reg > 1.0) throw SingularComponent("covariance regularization exhausted");
    }
  };

  // E-step: fills resp, returns mean log-likelihood.
  Eigen::VectorXd logp(k);
  auto e_step = [&]() {
    double total = 0.0;
    std::vector<double> log_w(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      const double w = model.weights[static_cast<std::size_t>(j)];
      log_w[static_cast<std::size_t>(j)] = w > 0 ? std::log(w) : -std::numeric_limits<double>::infinity();
    }
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        z = data.row(i).transpose() - model.means[ju];
        factors[ju].lower.triangularView<Eigen::Lower>().solveInPlace(z);
        logp(j) = log_w[ju] + factors[ju].log_norm - 0.5 * z.squaredNorm();
      }
      const double lse = detail::log_sum_exp(logp);
      total += lse;
      resp.row(i) = (logp.array() - lse).exp().transpose();
    }
    return total / static_cast<double>(n);
  };

  GmmFit fit;
  m_step();
  factorize_all();
  double prev = e_step();
  fit.log_likelihood.push_back(prev);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    m_step();
    factorize_all();
    const double ll = e_step();
    fit.log_likelihood.push_back(ll);
    fit.iterations = it;
    if (std::abs(ll - prev) <= opt.tolerance * std::abs(prev)) {
      fit.converged = true;
      break;
    }
    prev = ll;
  }

  // Parameters are those used by the last E-step.
  for (int j = 0; j < k; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    model.covariances[ju] += reg * Eigen::MatrixXd::Identity(d, d);
  }
  model.lower.resize(static_cast<std::size_t>(d));
  model.upper.resize(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) {
    model.lower[static_cast<std::size_t>(c)] = data.col(c).minCoeff();
    model.upper[static_cast<std::size_t>(c)] = data.col(c).maxCoeff();
  }
  fit.model = std::move(model);
  return fit;
}

inline GmmModel fit_gmm(const Eigen::MatrixXd& data, int k, std::uint64_t seed) {
  return fit_gmm_detailed(data, k, seed).model;
}

/// Mean per-row log-likelihood of `data` under `model`.
inline double gmm_log_likelihood(const GmmModel& model, const Eigen::MatrixXd& data) {
  std::vector<detail::GaussianFactor> factors;
  for (const auto& c : model.covariances) {
    auto f = detail::factorize(c);
    if (!f) throw InvalidArgument("covariance is not positive definite");
    factors.push_back(std::move(*f));
  }
  const auto k = static_cast<Eigen::Index>(model.k());
  Eigen::VectorXd logp(k);
  Eigen::VectorXd z(data.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      z = data.row(i).transpose() - model.means[ju];
      factors[ju].lower.triangularView<Eigen::Lower>().solveInPlace(z);
      logp(j) = std::log(model.weights[ju]) + factors[ju].log_norm - 0.5 * z.squaredNorm();
    }
    total += detail::log_sum_exp(logp);
  }
  return total / static_cast<double>(data.rows());
}

inline constexpr int kMaxRejectionAttempts = 1000;

/// Sampler with cached Cholesky factors and cumulative weights.
class GmmSampler {
public:
  explicit GmmSampler(GmmModel model) : model_{std::move(model)} {
    model_.validate();
    double acc = 0.0;
    for (std::size_t j = 0; j < model_.k(); ++j) {
      acc += model_.weights[j];
      cumulative_.push_back(acc);
      Eigen::LLT<Eigen::MatrixXd> llt(model_.covariances[j]);
      factors_.push_back(llt.matrixL());
    }
    cumulative_.back() = 1.0;
  }

  const GmmModel& model() const { return model_; }

  /// Draws one point; with bounds set, rejection-resamples up to
  /// kMaxRejectionAttempts times before throwing RejectionExhausted.
  Eigen::VectorXd sample(Rng& rng) const {
    for (int attempt = 0; attempt < kMaxRejectionAttempts; ++attempt) {
      auto x = sample_unbounded(rng);
      if (inside(x)) return x;
    }
    throw RejectionExhausted("no mixture draw fell inside the bounds after " +
                             std::to_string(kMaxRejectionAttempts) + " attempts");
  }

  Eigen::VectorXd sample_unbounded(Rng& rng) const {
    const double u = uniform01(rng);
    const auto j = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
                                            cumulative_.begin());
    const auto comp = std::min(j, model_.k() - 1);
    Eigen::VectorXd z(static_cast<Eigen::Index>(model_.dim()));
    std::normal_distribution<double> normal{0.0, 1.0};
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return model_.means[comp] + factors_[comp] * z;
  }

  bool inside(const Eigen::VectorXd& x) const {
    if (!model_.bounded()) return true;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (x(i) < model_.lower[iu] || x(i) > model_.upper[iu]) return false;
    }
    return true;
  }

private:
  GmmModel model_;
  std::vector<double> cumulative_;
  std::vector<Eigen::MatrixXd> factors_;
};

inline Eigen::VectorXd sample_gmm(const GmmModel& model, Rng& rng) { return GmmSampler{model}.sample(rng); }

} // namespace pipesim::stats
