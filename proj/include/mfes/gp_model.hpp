#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

#include "mfes/domain.hpp"
#include "mfes/kernel.hpp"

namespace mfes {

struct Observation {
  ExtendedPoint at;
  double value = 0.0;
};

/// Gaussian-process posterior over the two-source cost model.
///
/// The model is immutable: add_observation returns a new model with the
/// factorization rebuilt (n stays in the tens here, so a full rebuild is
/// cheaper to reason about than incremental updates).
///
/// K_n carries k(a_i, a_j) plus the per-source noise variance on the
/// diagonal. A relative jitter of 1e-10 * (sigma^2_sim + sigma^2_err) is
/// always added before the Cholesky factorization and escalated by factors
/// of 10 up to 1e-4 relative; beyond that a ConditioningError reports the
/// last jitter tried. Posterior variances are clamped at zero from below.
class GpModel {
 public:
  GpModel(CompositeKernel kernel, MeanModel mean, NoiseModel noise,
          std::vector<Observation> observations = {});

  [[nodiscard]] GpModel add_observation(const ExtendedPoint& at, double value) const;

  /// Posterior mean vector and full joint covariance at the query points.
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> posterior(
      std::span<const ExtendedPoint> query) const;

  /// Posterior means and per-point (marginal) variances.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> posterior_marginals(
      std::span<const ExtendedPoint> query) const;

  /// Mean/variance at a single point.
  std::pair<double, double> posterior_at(const ExtendedPoint& query) const;

  /// Posterior mean only (no variance solve).
  double posterior_mean_at(const ExtendedPoint& query) const;

  const CompositeKernel& kernel() const { return kernel_; }
  const MeanModel& mean() const { return mean_; }
  const NoiseModel& noise() const { return noise_; }
  const std::vector<Observation>& observations() const { return observations_; }
  int size() const { return static_cast<int>(observations_.size()); }

  /// Diagonal jitter actually added to K_n by the last factorization.
  double jitter_used() const { return jitter_; }

 private:
  CompositeKernel kernel_;
  MeanModel mean_;
  NoiseModel noise_;
  std::vector<Observation> observations_;

  Eigen::MatrixXd chol_lower_;   // L with L L^T = K_n + jitter I
  Eigen::VectorXd weights_;      // (K_n + jitter I)^{-1} (y - m)
  double jitter_ = 0.0;

  void factorize();
  Eigen::VectorXd cross_covariance(const ExtendedPoint& q) const;
};

/// Cholesky factor of a symmetric PSD matrix, adding escalating relative
/// diagonal jitter (1e-10..1e-4 of `scale`) until the factorization
/// succeeds. Throws ConditioningError with the last jitter tried.
Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd matrix, double scale,
                                     double* jitter_used = nullptr);

}  // namespace mfes
