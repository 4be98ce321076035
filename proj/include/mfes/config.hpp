#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfes/cartpole.hpp"
#include "mfes/lqr.hpp"
#include "mfes/optimizer.hpp"

#include <nlohmann/json_fwd.hpp>

namespace mfes {

enum class Problem { synthetic1d, cartpole };
enum class RunMode { mfes, es };

struct SyntheticDip {
  Eigen::VectorXd center;
  double width = 0.1;
  double depth = 0.0;
};

/// Smooth simulator bias: constant plus one Gaussian bump.
struct SyntheticBias {
  double constant = 0.0;
  double bump_amplitude = 0.0;
  Eigen::VectorXd bump_center;
  double bump_width = 1.0;
};

/// The bundled synthetic pair: the physical cost is an offset minus a sum of
/// Gaussian dips; the simulator sees the same profile minus a smooth bias.
struct SyntheticConfig {
  BoxDomain domain;
  double offset = 0.0;
  std::vector<SyntheticDip> dips;
  SyntheticBias bias;

  double f_exp(const Eigen::VectorXd& theta) const;
  double f_sim(const Eigen::VectorXd& theta) const;
};

struct PlantConfig {
  CartPoleParams real;
  double sim_pole_mass_scale = 0.85;
  bool sim_frictionless = true;
  SafetyLimits limits;
  double penalty_exp = 0.06;
  double penalty_sim = 0.04;
  CartPoleState initial_state{0.0, 0.05, 0.0, 0.0};
  int posterior_dump_resolution = 41;
};

struct LqrConfig {
  BoxDomain theta_box;
  Eigen::Vector2d nominal_theta{0.0, 1.5};
  double dare_tolerance = 1e-12;
  int dare_max_iterations = 100000;
};

/// A fully resolved run configuration: every defaultable field (length
/// scales, stopping bands, effort cap) has been filled in.
struct RunConfig {
  Problem problem = Problem::synthetic1d;
  RunMode mode = RunMode::mfes;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;

  GpPrior gp;
  EsSettings es;
  EffortModel efforts;
  StoppingRule stopping;
  InitDesign init;

  std::optional<SyntheticConfig> synthetic;
  std::optional<PlantConfig> plant;
  std::optional<LqrConfig> lqr;

  const BoxDomain& domain() const;
};

/// Parse and schema-check a config document. Unknown keys are rejected;
/// every violation throws ConfigError naming the offending location.
RunConfig parse_config(const nlohmann::json& doc);

/// Load a config file (JSON, // comments allowed). Parse errors carry the
/// line/column reported by the JSON parser.
RunConfig load_config(const std::filesystem::path& path);

/// Build the problem's evaluation channels. `seed` drives the observation
/// noise streams (and nothing else).
ObjectivePair make_objective(const RunConfig& config, std::uint64_t seed);

std::string to_string(Problem p);
std::string to_string(RunMode m);

}  // namespace mfes
