#include "mfes/cartpole.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <stdexcept>

#include "mfes/io.hpp"
#include "mfes/rng.hpp"

namespace mfes {

void CartPoleParams::validate() const {
  if (!(cart_mass > 0.0) || !(pole_mass > 0.0) || !(pole_length > 0.0) || !(gravity > 0.0) ||
      !(dt > 0.0)) {
    throw std::invalid_argument("CartPoleParams: masses, length, gravity, dt must be > 0");
  }
  if (horizon < 1) throw std::invalid_argument("CartPoleParams: horizon must be >= 1");
  if (cart_friction < 0.0 || pole_damping < 0.0 || motor_gain <= 0.0) {
    throw std::invalid_argument("CartPoleParams: friction/damping >= 0, motor_gain > 0");
  }
}

void SafetyLimits::validate() const {
  if (!(cart_position > 0.0) || !(pole_angle > 0.0) || !(voltage > 0.0)) {
    throw std::invalid_argument("SafetyLimits: all limits must be > 0");
  }
}

bool CartPoleState::finite() const {
  return std::isfinite(s) && std::isfinite(psi) && std::isfinite(s_dot) && std::isfinite(psi_dot);
}

namespace {

// Point-mass-pole dynamics solved for the accelerations:
//   (M + m) s'' + m l (psi'' cos psi - psi'^2 sin psi) = F
//   m l^2 psi'' + m l s'' cos psi - m g l sin psi + c psi' = 0
// with F = motor_gain u - cart_friction s'.
Eigen::Vector4d derivative(const CartPoleParams& p, const Eigen::Vector4d& x, double u) {
  const double psi = x[1];
  const double s_dot = x[2];
  const double psi_dot = x[3];
  const double sin_psi = std::sin(psi);
  const double cos_psi = std::cos(psi);
  const double m = p.pole_mass;
  const double l = p.pole_length;

  const double force = p.motor_gain * u - p.cart_friction * s_dot;
  const double denom = p.cart_mass + m * sin_psi * sin_psi;
  const double s_dd = (force + m * l * psi_dot * psi_dot * sin_psi -
                       m * p.gravity * sin_psi * cos_psi +
                       (p.pole_damping / l) * psi_dot * cos_psi) /
                      denom;
  const double psi_dd = (p.gravity * sin_psi - s_dd * cos_psi) / l -
                        p.pole_damping * psi_dot / (m * l * l);
  return {s_dot, psi_dot, s_dd, psi_dd};
}

}  // namespace

CartPoleState step(const CartPoleParams& params, const CartPoleState& x, double u) {
  const double h = params.dt;
  const Eigen::Vector4d x0 = x.vec();
  const Eigen::Vector4d k1 = derivative(params, x0, u);
  const Eigen::Vector4d k2 = derivative(params, x0 + 0.5 * h * k1, u);
  const Eigen::Vector4d k3 = derivative(params, x0 + 0.5 * h * k2, u);
  const Eigen::Vector4d k4 = derivative(params, x0 + h * k3, u);
  return CartPoleState::from_vec(x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

double trajectory_cost(std::span<const std::pair<CartPoleState, double>> trajectory) {
  if (trajectory.empty()) return 0.0;
  const double input_weight = std::pow(10.0, -1.5);
  double sum = 0.0;
  for (const auto& [x, u] : trajectory) {
    sum += x.s * x.s + x.psi * x.psi + x.s_dot * x.s_dot + 0.1 * x.psi_dot * x.psi_dot +
           input_weight * u * u;
  }
  return sum / static_cast<double>(trajectory.size());
}

RolloutResult rollout(const CartPoleParams& params, const SafetyLimits& limits,
                      const Eigen::RowVector4d& gain, const CartPoleState& x0, double penalty,
                      double noise_std, std::uint64_t seed) {
  params.validate();
  limits.validate();

  auto violates = [&limits](const CartPoleState& x) {
    return !x.finite() || std::abs(x.s) > limits.cart_position ||
           std::abs(x.psi) > limits.pole_angle;
  };

  RolloutResult result;
  result.trajectory.reserve(params.horizon);
  CartPoleState x = x0;
  if (violates(x)) {
    result.stable = false;
    result.violation_step = 0;
    result.cost = penalty;
    return result;
  }
  for (int k = 0; k < params.horizon; ++k) {
    const double u = std::clamp<double>(gain * x.vec(), -limits.voltage, limits.voltage);
    result.trajectory.emplace_back(x, u);
    x = step(params, x, u);
    if (violates(x)) {
      result.stable = false;
      result.violation_step = k + 1;
      result.cost = penalty;
      return result;
    }
  }
  result.stable = true;
  double cost = trajectory_cost(result.trajectory);
  if (noise_std > 0.0) {
    auto engine = make_engine(seed, 0xca57);
    std::normal_distribution<double> normal(0.0, noise_std);
    cost += normal(engine);
  }
  result.cost = std::max(cost, 0.0);
  return result;
}

CartPoleParams make_simulator_params(const CartPoleParams& real, double pole_mass_scale,
                                     bool frictionless) {
  CartPoleParams sim = real;
  sim.pole_mass *= pole_mass_scale;
  if (frictionless) {
    sim.cart_friction = 0.0;
    sim.pole_damping = 0.0;
  }
  return sim;
}

ObjectivePair make_objective_pair(const CartPoleParams& real_params,
                                  const CartPoleParams& sim_params, const SafetyLimits& limits,
                                  double penalty_exp, double penalty_sim, double noise_exp,
                                  double noise_sim,
                                  std::function<Eigen::RowVector4d(const Eigen::VectorXd&)>
                                      theta_to_gain,
                                  const BoxDomain& theta_box, const CartPoleState& x0,
                                  std::uint64_t seed) {
  real_params.validate();
  sim_params.validate();
  limits.validate();
  if (!theta_to_gain) throw std::invalid_argument("make_objective_pair: theta_to_gain not set");

  // Each channel owns a call counter so repeated evaluations at the same
  // theta see fresh (but reproducible) noise draws.
  auto make_channel = [=](CartPoleParams params, double penalty, double noise_std,
                          std::uint64_t salt) {
    auto counter = std::make_shared<std::uint64_t>(0);
    return [=](const Eigen::VectorXd& theta) {
      const Eigen::RowVector4d gain = theta_to_gain(theta);
      const std::uint64_t call_seed = mix_seed(seed, salt * 0x100000 + (*counter)++);
      return rollout(params, limits, gain, x0, penalty, noise_std, call_seed).cost;
    };
  };

  ObjectivePair pair;
  pair.eval_sim = make_channel(sim_params, penalty_sim, noise_sim, 1);
  pair.eval_exp = make_channel(real_params, penalty_exp, noise_exp, 2);
  pair.domain = theta_box;
  return pair;
}

void write_trajectory_csv(const std::string& path, const RolloutResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  out << "step,s,psi,s_dot,psi_dot,u\n";
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
    const auto& [x, u] = result.trajectory[k];
    out << k << ',' << format_double(x.s) << ',' << format_double(x.psi) << ','
        << format_double(x.s_dot) << ',' << format_double(x.psi_dot) << ',' << format_double(u)
        << '\n';
  }
}

}  // namespace mfes
