#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfes/optimizer.hpp"

namespace mfes {

/// Cart-pole-on-track parameters. The pole is treated as a point mass at
/// distance pole_length from the pivot; the drive is a voltage-to-force
/// gain with viscous cart friction and viscous pivot damping.
struct CartPoleParams {
  double cart_mass = 0.57;      // kg
  double pole_mass = 0.23;      // kg
  double pole_length = 0.33;    // m, pivot to center of mass
  double gravity = 9.81;        // m/s^2
  double motor_gain = 1.7;      // N per volt
  double cart_friction = 8.0;   // N*s/m
  double pole_damping = 5e-4;   // N*m*s/rad
  double dt = 0.01;             // s, control step
  int horizon = 1000;           // K, steps per rollout

  void validate() const;
};

/// State [s, psi, s_dot, psi_dot]; psi = 0 is upright.
struct CartPoleState {
  double s = 0.0;
  double psi = 0.0;
  double s_dot = 0.0;
  double psi_dot = 0.0;

  Eigen::Vector4d vec() const { return {s, psi, s_dot, psi_dot}; }
  static CartPoleState from_vec(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
  bool finite() const;
};

struct SafetyLimits {
  double cart_position = 0.25;  // m
  double pole_angle = 0.7;      // rad
  double voltage = 10.0;        // V

  void validate() const;
};

struct RolloutResult {
  std::vector<std::pair<CartPoleState, double>> trajectory;  // (state, applied voltage)
  double cost = 0.0;
  bool stable = false;
  std::optional<int> violation_step;  // index of the first violating state
};

/// One RK4 step of the cart-pole ODE under constant voltage u.
/// Force on the cart: motor_gain * u - cart_friction * s_dot; the pivot
/// carries a viscous damping torque pole_damping * psi_dot.
CartPoleState step(const CartPoleParams& params, const CartPoleState& x, double u);

/// Quadratic stage cost averaged over a trajectory:
///   (1/K) sum s^2 + psi^2 + s_dot^2 + 0.1 psi_dot^2 + 10^-1.5 u^2
double trajectory_cost(std::span<const std::pair<CartPoleState, double>> trajectory);

/// Closed-loop rollout under u_k = gain * x_k (saturated at the voltage
/// limit). Violating a state limit, or a non-finite state, makes the result
/// unstable with cost exactly `penalty`; otherwise the averaged quadratic
/// cost plus Gaussian observation noise (the noisy cost is clamped at zero
/// from below).
RolloutResult rollout(const CartPoleParams& params, const SafetyLimits& limits,
                      const Eigen::RowVector4d& gain, const CartPoleState& x0, double penalty,
                      double noise_std, std::uint64_t seed);

/// Derive the biased simulator plant from the real one: pole mass scaled by
/// `pole_mass_scale` and, optionally, all friction removed.
CartPoleParams make_simulator_params(const CartPoleParams& real, double pole_mass_scale,
                                     bool frictionless);

/// Wire both evaluation channels: eval_exp rolls out on `real_params` with
/// penalty_exp / noise_exp, eval_sim on `sim_params` with penalty_sim /
/// noise_sim. Each call consumes one deterministic seed from a per-channel
/// stream derived from `seed`.
ObjectivePair make_objective_pair(const CartPoleParams& real_params,
                                  const CartPoleParams& sim_params, const SafetyLimits& limits,
                                  double penalty_exp, double penalty_sim, double noise_exp,
                                  double noise_sim,
                                  std::function<Eigen::RowVector4d(const Eigen::VectorXd&)>
                                      theta_to_gain,
                                  const BoxDomain& theta_box, const CartPoleState& x0,
                                  std::uint64_t seed);

/// CSV dump with columns step,s,psi,s_dot,psi_dot,u.
void write_trajectory_csv(const std::string& path, const RolloutResult& result);

}  // namespace mfes
