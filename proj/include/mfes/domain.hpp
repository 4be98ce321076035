#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mfes {

/// Which information source produced (or would produce) an evaluation.
/// Simulation runs are cheap but only partially informative about the
/// physical cost; physical runs observe the true objective directly.
enum class Fidelity : int {
  simulation = 0,
  physical = 1,
};

inline int fidelity_flag(Fidelity f) { return static_cast<int>(f); }

/// A tuning-parameter vector together with its information source.
struct ExtendedPoint {
  Eigen::VectorXd theta;
  Fidelity delta = Fidelity::physical;
};

inline bool same_point(const ExtendedPoint& a, const ExtendedPoint& b) {
  return a.delta == b.delta && a.theta.size() == b.theta.size() && a.theta == b.theta;
}

/// Axis-aligned box of admissible tuning parameters.
struct BoxDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxDomain() = default;
  BoxDomain(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) {
      throw std::invalid_argument("BoxDomain: lower/upper dimension mismatch");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!(lower[i] < upper[i])) {
        throw std::invalid_argument("BoxDomain: each lower bound must be below its upper bound");
      }
    }
  }

  int dim() const { return static_cast<int>(lower.size()); }

  double width(int axis) const { return upper[axis] - lower[axis]; }

  Eigen::VectorXd widths() const { return upper - lower; }

  bool contains(const Eigen::VectorXd& theta, double tol = 0.0) const {
    if (theta.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      if (theta[i] < lower[i] - tol || theta[i] > upper[i] + tol) return false;
    }
    return true;
  }

  Eigen::VectorXd clamp(Eigen::VectorXd theta) const {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      theta[i] = std::min(std::max(theta[i], lower[i]), upper[i]);
    }
    return theta;
  }
};

}  // namespace mfes
