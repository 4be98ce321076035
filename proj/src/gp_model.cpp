#include "mfes/gp_model.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mfes/errors.hpp"

namespace mfes {

namespace {
constexpr double kJitterStart = 1e-10;
constexpr double kJitterCeiling = 1e-4;
}  // namespace

Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd matrix, double scale, double* jitter_used) {
  const Eigen::Index n = matrix.rows();
  double added = 0.0;
  for (double rel = kJitterStart; rel <= kJitterCeiling * 1.0000001; rel *= 10.0) {
    const double jitter = rel * scale;
    matrix.diagonal().array() += jitter - added;  // escalate in place
    added = jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(matrix);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = added;
      return llt.matrixL();
    }
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed for a " << n << "x" << n
      << " covariance even with diagonal jitter " << added;
  throw ConditioningError(msg.str(), added);
}

GpModel::GpModel(CompositeKernel kernel, MeanModel mean, NoiseModel noise,
                 std::vector<Observation> observations)
    : kernel_(std::move(kernel)), mean_(mean), noise_(noise),
      observations_(std::move(observations)) {
  kernel_.validate();
  noise_.validate();
  const auto dim = kernel_.sim.length_scales.size();
  for (const auto& obs : observations_) {
    if (obs.at.theta.size() != dim) {
      throw std::invalid_argument("GpModel: observation dimension does not match kernel");
    }
    if (!std::isfinite(obs.value)) {
      throw std::invalid_argument("GpModel: observation value must be finite");
    }
  }
  factorize();
}

GpModel GpModel::add_observation(const ExtendedPoint& at, double value) const {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("add_observation: value must be finite");
  }
  if (at.theta.size() != kernel_.sim.length_scales.size()) {
    throw std::invalid_argument("add_observation: dimension does not match kernel");
  }
  std::vector<Observation> obs = observations_;
  obs.push_back({at, value});
  return GpModel(kernel_, mean_, noise_, std::move(obs));
}

void GpModel::factorize() {
  const int n = size();
  if (n == 0) {
    chol_lower_.resize(0, 0);
    weights_.resize(0);
    jitter_ = 0.0;
    return;
  }
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      K(i, j) = kernel_(observations_[i].at, observations_[j].at);
      K(j, i) = K(i, j);
    }
    K(i, i) += noise_.var_for(observations_[i].at.delta);
  }
  chol_lower_ = cholesky_with_jitter(std::move(K), kernel_.total_output_variance(), &jitter_);

  Eigen::VectorXd residual(n);
  for (int i = 0; i < n; ++i) {
    residual[i] = observations_[i].value - mean_.value_at(observations_[i].at);
  }
  weights_ = chol_lower_.triangularView<Eigen::Lower>().solve(residual);
  chol_lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(weights_);
}

Eigen::VectorXd GpModel::cross_covariance(const ExtendedPoint& q) const {
  Eigen::VectorXd k(size());
  for (int i = 0; i < size(); ++i) k[i] = kernel_(q, observations_[i].at);
  return k;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> GpModel::posterior(
    std::span<const ExtendedPoint> query) const {
  const int q = static_cast<int>(query.size());
  const int n = size();
  Eigen::VectorXd mu(q);
  Eigen::MatrixXd cov(q, q);
  for (int i = 0; i < q; ++i) {
    mu[i] = mean_.value_at(query[i]);
    for (int j = 0; j <= i; ++j) {
      cov(i, j) = kernel_(query[i], query[j]);
      cov(j, i) = cov(i, j);
    }
  }
  if (n > 0) {
    Eigen::MatrixXd cross(n, q);  // K(X, Q)
    for (int j = 0; j < q; ++j) {
      cross.col(j) = cross_covariance(query[j]);
    }
    mu.noalias() += cross.transpose() * weights_;
    Eigen::MatrixXd w = chol_lower_.triangularView<Eigen::Lower>().solve(cross);
    cov.noalias() -= w.transpose() * w;
    cov = ((cov + cov.transpose()) * 0.5).eval();
  }
  for (int i = 0; i < q; ++i) {
    if (cov(i, i) < 0.0) cov(i, i) = 0.0;  // round-off floor
  }
  return {std::move(mu), std::move(cov)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> GpModel::posterior_marginals(
    std::span<const ExtendedPoint> query) const {
  const int q = static_cast<int>(query.size());
  const int n = size();
  Eigen::VectorXd mu(q), var(q);
  for (int i = 0; i < q; ++i) {
    mu[i] = mean_.value_at(query[i]);
    var[i] = kernel_(query[i], query[i]);
  }
  if (n > 0) {
    for (int i = 0; i < q; ++i) {
      const Eigen::VectorXd k = cross_covariance(query[i]);
      mu[i] += k.dot(weights_);
      const Eigen::VectorXd w = chol_lower_.triangularView<Eigen::Lower>().solve(k);
      var[i] -= w.squaredNorm();
    }
  }
  var = var.cwiseMax(0.0);
  return {std::move(mu), std::move(var)};
}

std::pair<double, double> GpModel::posterior_at(const ExtendedPoint& query) const {
  const ExtendedPoint pts[] = {query};
  auto [mu, var] = posterior_marginals(pts);
  return {mu[0], var[0]};
}

double GpModel::posterior_mean_at(const ExtendedPoint& query) const {
  double mu = mean_.value_at(query);
  if (size() > 0) mu += cross_covariance(query).dot(weights_);
  return mu;
}

}  // namespace mfes
