#pragma once

#include <Eigen/Dense>

#include <random>

#include "mfes/gp_model.hpp"

namespace mfes::testing {

/// Kernel/mean/noise wired with the cart-pole study's constants, 1-D with
/// unit length scales unless overridden.
inline CompositeKernel study_kernel(int dim = 1, double length_scale = 1.0) {
  KernelSpec sim;
  sim.variant = KernelVariant::rational_quadratic;
  sim.output_variance = 1.6e-5;
  sim.length_scales = Eigen::VectorXd::Constant(dim, length_scale);
  sim.alpha = 0.25;
  KernelSpec err = sim;
  err.output_variance = 3.84e-4;
  return CompositeKernel{sim, err};
}

inline MeanModel study_mean() { return MeanModel{0.04, 0.02}; }

inline NoiseModel study_noise() { return NoiseModel{1e-5, 2.08e-4}; }

inline GpModel study_model(int dim = 1, double length_scale = 1.0) {
  return GpModel(study_kernel(dim, length_scale), study_mean(), study_noise());
}

inline Eigen::VectorXd theta1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

inline Eigen::VectorXd theta2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

}  // namespace mfes::testing
