#include "mfes/lqr.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mfes/errors.hpp"

namespace mfes {

std::pair<Eigen::Matrix4d, Eigen::Vector4d> continuous_jacobians(const CartPoleParams& p) {
  p.validate();
  const double M = p.cart_mass;
  const double m = p.pole_mass;
  const double l = p.pole_length;
  const double g = p.gravity;
  const double b = p.cart_friction;
  const double c = p.pole_damping;

  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  A(0, 2) = 1.0;
  A(1, 3) = 1.0;
  A(2, 1) = -m * g / M;
  A(2, 2) = -b / M;
  A(2, 3) = c / (M * l);
  A(3, 1) = g * (M + m) / (M * l);
  A(3, 2) = b / (M * l);
  A(3, 3) = -c * (M + m) / (M * m * l * l);

  Eigen::Vector4d B = Eigen::Vector4d::Zero();
  B[2] = p.motor_gain / M;
  B[3] = -p.motor_gain / (M * l);
  return {A, B};
}

LinearModel linearize(const CartPoleParams& params) {
  const auto [A, B] = continuous_jacobians(params);
  Eigen::Matrix<double, 5, 5> aug = Eigen::Matrix<double, 5, 5>::Zero();
  aug.topLeftCorner<4, 4>() = A * params.dt;
  aug.topRightCorner<4, 1>() = B * params.dt;
  const Eigen::Matrix<double, 5, 5> expm = aug.exp();
  LinearModel model;
  model.A = expm.topLeftCorner<4, 4>();
  model.B = expm.topRightCorner<4, 1>();
  model.dt = params.dt;
  return model;
}

double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Wx, double Wu, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd BtPB = B.transpose() * P * B;
  const Eigen::MatrixXd BtPA = B.transpose() * P * A;
  const Eigen::MatrixXd rhs =
      A.transpose() * P * A -
      (A.transpose() * P * B) * (BtPB.array() + Wu).matrix().inverse() * BtPA + Wx;
  return (P - rhs).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Wx, double Wu, double tol, int max_iter) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || B.cols() != 1) {
    throw std::invalid_argument("solve_dare: A must be square, B a matching column");
  }
  if (!(Wu > 0.0)) throw std::invalid_argument("solve_dare: Wu must be > 0");

  Eigen::MatrixXd P = Wx;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd PB = P * B;
    const double denom = (B.transpose() * PB)(0, 0) + Wu;
    const Eigen::RowVectorXd BtPA = B.transpose() * P * A;
    Eigen::MatrixXd next =
        A.transpose() * P * A - (A.transpose() * PB) * (BtPA / denom) + Wx;
    next = 0.5 * (next + next.transpose()).eval();
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change < tol) {
      if (dare_residual(A, B, Wx, Wu, P) >= 1e-9) break;  // fall through to the error
      return P;
    }
  }
  std::ostringstream msg;
  msg << "solve_dare: no stabilizing solution within " << max_iter
      << " iterations for Wx diag [" << Wx.diagonal().transpose() << "], Wu " << Wu;
  throw NotStabilizableError(msg.str());
}

LqrWeights weights_from_theta(const Eigen::Vector2d& theta) {
  LqrWeights w;
  w.Wx = Eigen::Vector4d(std::pow(10.0, theta[0]), 1.0, 1.0, 0.1).asDiagonal();
  w.Wu = std::pow(10.0, -theta[1]);
  return w;
}

Eigen::RowVector4d gain_from_theta(const Eigen::Vector2d& theta, const LinearModel& model,
                                   double tol, int max_iter) {
  const LqrWeights w = weights_from_theta(theta);
  const Eigen::MatrixXd P = solve_dare(model.A, model.B, w.Wx, w.Wu, tol, max_iter);
  const double denom = (model.B.transpose() * P * model.B)(0, 0) + w.Wu;
  return -(model.B.transpose() * P * model.A) / denom;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace mfes
