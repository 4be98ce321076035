#pragma once

#include <Eigen/Dense>

#include "mfes/domain.hpp"

namespace mfes {

enum class KernelVariant {
  rational_quadratic,
  squared_exponential,
};

/// Stationary covariance component with per-axis length scales.
///
/// rational_quadratic:  sigma^2 * (1 + r^2 / (2 alpha))^(-alpha)
/// squared_exponential: sigma^2 * exp(-r^2 / 2)
/// with r^2 = sum_i ((x_i - y_i) / l_i)^2.
struct KernelSpec {
  KernelVariant variant = KernelVariant::rational_quadratic;
  double output_variance = 1.0;
  Eigen::VectorXd length_scales;
  double alpha = 0.25;  // shape of the rational quadratic; unused otherwise

  void validate() const;

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
};

/// Two-source kernel over extended points (theta, delta):
///
///   k(a, a') = k_sim(theta, theta') + delta * delta' * k_err(theta, theta')
///
/// The error component contributes only when both points are physical, so
/// simulations can never explain away the uncertainty carried by k_err.
struct CompositeKernel {
  KernelSpec sim;
  KernelSpec err;

  void validate() const;

  int dim() const { return static_cast<int>(sim.length_scales.size()); }

  /// Total variance at zero lag for a physical point.
  double total_output_variance() const { return sim.output_variance + err.output_variance; }

  double operator()(const ExtendedPoint& a, const ExtendedPoint& b) const;
};

inline double kernel_eval(const CompositeKernel& k, const ExtendedPoint& a,
                          const ExtendedPoint& b) {
  return k(a, b);
}

/// Observation noise standard deviations per source.
struct NoiseModel {
  double eta_sim = 0.0;
  double eta_exp = 0.0;

  void validate() const;

  double std_for(Fidelity f) const { return f == Fidelity::simulation ? eta_sim : eta_exp; }
  double var_for(Fidelity f) const {
    const double s = std_for(f);
    return s * s;
  }
};

/// Constant prior means: m_sim for simulations, m_sim + m_err for physical runs.
struct MeanModel {
  double m_sim = 0.0;
  double m_err = 0.0;

  double value_at(Fidelity f) const {
    return f == Fidelity::physical ? m_sim + m_err : m_sim;
  }
  double value_at(const ExtendedPoint& a) const { return value_at(a.delta); }
};

}  // namespace mfes
