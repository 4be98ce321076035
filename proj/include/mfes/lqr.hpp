#pragma once

#include <Eigen/Dense>

#include <utility>

#include "mfes/cartpole.hpp"

namespace mfes {

/// Discrete-time linearization x_{k+1} = A x_k + B u_k of the cart-pole
/// about the upright equilibrium.
struct LinearModel {
  Eigen::Matrix4d A;
  Eigen::Vector4d B;
  double dt = 0.0;
};

/// diag(10^theta1, 1, 1, 0.1) state weight and 10^-theta2 input weight.
struct LqrWeights {
  Eigen::Matrix4d Wx;
  double Wu = 1.0;
};

/// Continuous-time Jacobians (A_c, B_c) of the cart-pole vector field at the
/// upright zero state with zero input.
std::pair<Eigen::Matrix4d, Eigen::Vector4d> continuous_jacobians(const CartPoleParams& params);

/// Exact zero-order-hold discretization of the continuous Jacobians via the
/// matrix exponential of the augmented [A B; 0 0] block.
LinearModel linearize(const CartPoleParams& params);

/// Fixed-point Riccati iteration P <- A'PA - A'PB (B'PB + Wu)^-1 B'PA + Wx
/// from P0 = Wx, symmetrized each iterate, until the max-norm update drops
/// below tol. Throws NotStabilizableError (naming the weights) if max_iter
/// is exhausted or the converged residual exceeds 1e-9.
Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Wx, double Wu, double tol = 1e-12,
                           int max_iter = 100000);

/// Max-norm of P - (A'PA - A'PB (B'PB + Wu)^-1 B'PA + Wx).
double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Wx, double Wu, const Eigen::MatrixXd& P);

LqrWeights weights_from_theta(const Eigen::Vector2d& theta);

/// Feedback gain for u_k = F x_k: F = -(B'PB + Wu)^-1 B'PA with P from the
/// Riccati solve under weights_from_theta(theta).
Eigen::RowVector4d gain_from_theta(const Eigen::Vector2d& theta, const LinearModel& model,
                                   double tol = 1e-12, int max_iter = 100000);

double spectral_radius(const Eigen::MatrixXd& m);

}  // namespace mfes
