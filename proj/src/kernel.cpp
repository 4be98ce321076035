#include "mfes/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace mfes {

void KernelSpec::validate() const {
  if (!(output_variance > 0.0) || !std::isfinite(output_variance)) {
    throw std::invalid_argument("KernelSpec: output_variance must be finite and > 0");
  }
  if (length_scales.size() == 0) {
    throw std::invalid_argument("KernelSpec: length_scales must be non-empty");
  }
  for (Eigen::Index i = 0; i < length_scales.size(); ++i) {
    if (!(length_scales[i] > 0.0) || !std::isfinite(length_scales[i])) {
      throw std::invalid_argument("KernelSpec: length scales must be finite and > 0");
    }
  }
  if (variant == KernelVariant::rational_quadratic && !(alpha > 0.0)) {
    throw std::invalid_argument("KernelSpec: alpha must be > 0");
  }
}

double KernelSpec::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  if (x.size() != length_scales.size() || y.size() != length_scales.size()) {
    throw std::invalid_argument("KernelSpec: input dimension does not match length scales");
  }
  const double r2 = ((x - y).cwiseQuotient(length_scales)).squaredNorm();
  switch (variant) {
    case KernelVariant::rational_quadratic:
      return output_variance * std::pow(1.0 + r2 / (2.0 * alpha), -alpha);
    case KernelVariant::squared_exponential:
      return output_variance * std::exp(-0.5 * r2);
  }
  return 0.0;  // unreachable
}

void CompositeKernel::validate() const {
  sim.validate();
  err.validate();
  if (sim.length_scales.size() != err.length_scales.size()) {
    throw std::invalid_argument("CompositeKernel: sim/err length-scale dimensions differ");
  }
}

double CompositeKernel::operator()(const ExtendedPoint& a, const ExtendedPoint& b) const {
  double k = sim(a.theta, b.theta);
  if (a.delta == Fidelity::physical && b.delta == Fidelity::physical) {
    k += err(a.theta, b.theta);
  }
  return k;
}

void NoiseModel::validate() const {
  if (eta_sim < 0.0 || eta_exp < 0.0 || !std::isfinite(eta_sim) || !std::isfinite(eta_exp)) {
    throw std::invalid_argument("NoiseModel: noise standard deviations must be finite and >= 0");
  }
}

}  // namespace mfes
