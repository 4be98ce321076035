#include "mfes/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <set>
#include <string>

#include "mfes/errors.hpp"
#include "mfes/rng.hpp"

namespace mfes {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config error at '" + where + "': " + what);
}

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.contains(item.key())) fail(where + "." + item.key(), "unknown key");
  }
}

const json& get_field(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) fail(where + "." + key, "missing required key");
  return obj.at(key);
}

bool has_value(const json& obj, const std::string& key) {
  return obj.contains(key) && !obj.at(key).is_null();
}

double get_number(const json& obj, const std::string& where, const std::string& key) {
  const json& v = get_field(obj, where, key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const std::string& where, const std::string& key,
                     double fallback) {
  return has_value(obj, key) ? get_number(obj, where, key) : fallback;
}

int get_int(const json& obj, const std::string& where, const std::string& key) {
  const json& v = get_field(obj, where, key);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<int>();
}

int get_int_or(const json& obj, const std::string& where, const std::string& key, int fallback) {
  return has_value(obj, key) ? get_int(obj, where, key) : fallback;
}

bool get_bool_or(const json& obj, const std::string& where, const std::string& key,
                 bool fallback) {
  if (!has_value(obj, key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(where + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& key) {
  const json& v = get_field(obj, where, key);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of numbers");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(where, "expected a non-empty array of numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

BoxDomain get_box(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected an array of [lower, upper] pairs");
  Eigen::VectorXd lo(v.size()), hi(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != 2 || !v[i][0].is_number() || !v[i][1].is_number()) {
      fail(where, "each axis must be a [lower, upper] number pair");
    }
    lo[static_cast<Eigen::Index>(i)] = v[i][0].get<double>();
    hi[static_cast<Eigen::Index>(i)] = v[i][1].get<double>();
  }
  try {
    return BoxDomain(std::move(lo), std::move(hi));
  } catch (const std::invalid_argument& err) {
    fail(where, err.what());
  }
}

KernelSpec parse_kernel_component(const json& kernel, const std::string& where,
                                  const std::string& variance_key,
                                  const std::string& scales_key, const BoxDomain& domain) {
  KernelSpec spec;
  const std::string variant = get_string(kernel, where, "variant");
  if (variant == "rational-quadratic") {
    spec.variant = KernelVariant::rational_quadratic;
  } else if (variant == "squared-exponential") {
    spec.variant = KernelVariant::squared_exponential;
  } else {
    fail(where + ".variant", "expected 'rational-quadratic' or 'squared-exponential'");
  }
  spec.alpha = get_number_or(kernel, where, "alpha", 0.25);
  spec.output_variance = get_number(kernel, where, variance_key);
  if (has_value(kernel, scales_key)) {
    spec.length_scales = get_vector(kernel.at(scales_key), where + "." + scales_key);
    if (spec.length_scales.size() != domain.dim()) {
      fail(where + "." + scales_key, "length-scale dimension does not match the domain");
    }
  } else {
    spec.length_scales = domain.widths() / 5.0;  // one fifth of each box width
  }
  return spec;
}

SyntheticConfig parse_synthetic(const json& s, const std::string& where) {
  check_keys(s, where, {"domain", "offset", "dips", "bias"});
  SyntheticConfig cfg;
  cfg.domain = get_box(get_field(s, where, "domain"), where + ".domain");
  cfg.offset = get_number(s, where, "offset");
  const json& dips = get_field(s, where, "dips");
  if (!dips.is_array() || dips.empty()) fail(where + ".dips", "expected a non-empty array");
  for (std::size_t i = 0; i < dips.size(); ++i) {
    const std::string dw = where + ".dips[" + std::to_string(i) + "]";
    check_keys(dips[i], dw, {"center", "width", "depth"});
    SyntheticDip dip;
    dip.center = get_vector(get_field(dips[i], dw, "center"), dw + ".center");
    if (dip.center.size() != cfg.domain.dim()) fail(dw + ".center", "dimension mismatch");
    dip.width = get_number(dips[i], dw, "width");
    dip.depth = get_number(dips[i], dw, "depth");
    if (!(dip.width > 0.0)) fail(dw + ".width", "must be > 0");
    cfg.dips.push_back(std::move(dip));
  }
  const json& bias = get_field(s, where, "bias");
  const std::string bw = where + ".bias";
  check_keys(bias, bw, {"constant", "bump_amplitude", "bump_center", "bump_width"});
  cfg.bias.constant = get_number(bias, bw, "constant");
  cfg.bias.bump_amplitude = get_number(bias, bw, "bump_amplitude");
  cfg.bias.bump_center = get_vector(get_field(bias, bw, "bump_center"), bw + ".bump_center");
  if (cfg.bias.bump_center.size() != cfg.domain.dim()) fail(bw + ".bump_center", "dimension mismatch");
  cfg.bias.bump_width = get_number(bias, bw, "bump_width");
  if (!(cfg.bias.bump_width > 0.0)) fail(bw + ".bump_width", "must be > 0");
  return cfg;
}

PlantConfig parse_plant(const json& p, const std::string& where) {
  check_keys(p, where,
             {"cart_mass", "pole_mass", "pole_length", "gravity", "motor_gain", "cart_friction",
              "pole_damping", "dt", "horizon", "sim_pole_mass_scale", "sim_frictionless",
              "limits", "penalties", "initial_state", "posterior_dump_resolution"});
  PlantConfig cfg;
  CartPoleParams defaults;
  cfg.real.cart_mass = get_number_or(p, where, "cart_mass", defaults.cart_mass);
  cfg.real.pole_mass = get_number_or(p, where, "pole_mass", defaults.pole_mass);
  cfg.real.pole_length = get_number_or(p, where, "pole_length", defaults.pole_length);
  cfg.real.gravity = get_number_or(p, where, "gravity", defaults.gravity);
  cfg.real.motor_gain = get_number_or(p, where, "motor_gain", defaults.motor_gain);
  cfg.real.cart_friction = get_number_or(p, where, "cart_friction", defaults.cart_friction);
  cfg.real.pole_damping = get_number_or(p, where, "pole_damping", defaults.pole_damping);
  cfg.real.dt = get_number_or(p, where, "dt", defaults.dt);
  cfg.real.horizon = get_int_or(p, where, "horizon", defaults.horizon);
  cfg.sim_pole_mass_scale = get_number_or(p, where, "sim_pole_mass_scale", 0.85);
  cfg.sim_frictionless = get_bool_or(p, where, "sim_frictionless", true);
  if (has_value(p, "limits")) {
    const std::string lw = where + ".limits";
    const json& lim = p.at("limits");
    check_keys(lim, lw, {"cart_position", "pole_angle", "voltage"});
    cfg.limits.cart_position = get_number_or(lim, lw, "cart_position", cfg.limits.cart_position);
    cfg.limits.pole_angle = get_number_or(lim, lw, "pole_angle", cfg.limits.pole_angle);
    cfg.limits.voltage = get_number_or(lim, lw, "voltage", cfg.limits.voltage);
  }
  if (has_value(p, "penalties")) {
    const std::string pw = where + ".penalties";
    const json& pen = p.at("penalties");
    check_keys(pen, pw, {"exp", "sim"});
    cfg.penalty_exp = get_number_or(pen, pw, "exp", cfg.penalty_exp);
    cfg.penalty_sim = get_number_or(pen, pw, "sim", cfg.penalty_sim);
  }
  if (has_value(p, "initial_state")) {
    const Eigen::VectorXd x0 = get_vector(p.at("initial_state"), where + ".initial_state");
    if (x0.size() != 4) fail(where + ".initial_state", "expected 4 entries [s,psi,s_dot,psi_dot]");
    cfg.initial_state = CartPoleState::from_vec(x0);
  }
  cfg.posterior_dump_resolution = get_int_or(p, where, "posterior_dump_resolution", 41);
  if (cfg.posterior_dump_resolution < 2) fail(where + ".posterior_dump_resolution", "must be >= 2");
  try {
    cfg.real.validate();
  } catch (const std::invalid_argument& err) {
    fail(where, err.what());
  }
  return cfg;
}

LqrConfig parse_lqr(const json& l, const std::string& where) {
  check_keys(l, where, {"theta_box", "nominal_theta", "dare_tolerance", "dare_max_iterations"});
  LqrConfig cfg;
  cfg.theta_box = get_box(get_field(l, where, "theta_box"), where + ".theta_box");
  if (cfg.theta_box.dim() != 2) fail(where + ".theta_box", "the LQR parameterization is 2-D");
  if (has_value(l, "nominal_theta")) {
    const Eigen::VectorXd nom = get_vector(l.at("nominal_theta"), where + ".nominal_theta");
    if (nom.size() != 2) fail(where + ".nominal_theta", "expected 2 entries");
    cfg.nominal_theta = nom;
  }
  cfg.dare_tolerance = get_number_or(l, where, "dare_tolerance", 1e-12);
  cfg.dare_max_iterations = get_int_or(l, where, "dare_max_iterations", 100000);
  return cfg;
}

}  // namespace

double SyntheticConfig::f_exp(const Eigen::VectorXd& theta) const {
  double value = offset;
  for (const auto& dip : dips) {
    const double r2 = (theta - dip.center).squaredNorm() / (2.0 * dip.width * dip.width);
    value -= dip.depth * std::exp(-r2);
  }
  return value;
}

double SyntheticConfig::f_sim(const Eigen::VectorXd& theta) const {
  const double r2 =
      (theta - bias.bump_center).squaredNorm() / (2.0 * bias.bump_width * bias.bump_width);
  return f_exp(theta) - bias.constant - bias.bump_amplitude * std::exp(-r2);
}

const BoxDomain& RunConfig::domain() const {
  if (problem == Problem::synthetic1d) return synthetic->domain;
  return lqr->theta_box;
}

std::string to_string(Problem p) {
  return p == Problem::synthetic1d ? "synthetic1d" : "cartpole";
}

std::string to_string(RunMode m) { return m == RunMode::mfes ? "mfes" : "es"; }

RunConfig parse_config(const json& doc) {
  check_keys(doc, "$",
             {"problem", "mode", "seeds", "output_dir", "gp", "es", "efforts", "stopping",
              "init", "synthetic", "plant", "lqr"});
  RunConfig cfg;

  const std::string problem = get_string(doc, "$", "problem");
  if (problem == "synthetic1d") {
    cfg.problem = Problem::synthetic1d;
  } else if (problem == "cartpole") {
    cfg.problem = Problem::cartpole;
  } else {
    fail("$.problem", "expected 'synthetic1d' or 'cartpole'");
  }

  const std::string mode = get_string(doc, "$", "mode");
  if (mode == "mfes") {
    cfg.mode = RunMode::mfes;
  } else if (mode == "es") {
    cfg.mode = RunMode::es;
  } else {
    fail("$.mode", "expected 'mfes' or 'es'");
  }

  const json& seeds = get_field(doc, "$", "seeds");
  if (!seeds.is_array() || seeds.empty()) fail("$.seeds", "expected a non-empty array");
  for (const auto& s : seeds) {
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
      fail("$.seeds", "seeds must be nonnegative integers");
    }
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  cfg.output_dir = get_string(doc, "$", "output_dir");

  // Problem sections first: the kernel length-scale default needs the box.
  if (cfg.problem == Problem::synthetic1d) {
    if (!has_value(doc, "synthetic")) fail("$.synthetic", "required for problem 'synthetic1d'");
    cfg.synthetic = parse_synthetic(doc.at("synthetic"), "$.synthetic");
  } else {
    if (!has_value(doc, "plant")) fail("$.plant", "required for problem 'cartpole'");
    if (!has_value(doc, "lqr")) fail("$.lqr", "required for problem 'cartpole'");
    cfg.plant = parse_plant(doc.at("plant"), "$.plant");
    cfg.lqr = parse_lqr(doc.at("lqr"), "$.lqr");
  }

  const json& gp = get_field(doc, "$", "gp");
  check_keys(gp, "$.gp", {"kernel", "mean", "noise"});
  const json& kernel = get_field(gp, "$.gp", "kernel");
  check_keys(kernel, "$.gp.kernel",
             {"variant", "alpha", "sim_output_variance", "err_output_variance",
              "sim_length_scales", "err_length_scales"});
  cfg.gp.kernel.sim = parse_kernel_component(kernel, "$.gp.kernel", "sim_output_variance",
                                             "sim_length_scales", cfg.domain());
  cfg.gp.kernel.err = parse_kernel_component(kernel, "$.gp.kernel", "err_output_variance",
                                             "err_length_scales", cfg.domain());
  const json& mean = get_field(gp, "$.gp", "mean");
  check_keys(mean, "$.gp.mean", {"sim", "err"});
  cfg.gp.mean.m_sim = get_number(mean, "$.gp.mean", "sim");
  cfg.gp.mean.m_err = get_number(mean, "$.gp.mean", "err");
  const json& noise = get_field(gp, "$.gp", "noise");
  check_keys(noise, "$.gp.noise", {"sim", "exp"});
  cfg.gp.noise.eta_sim = get_number(noise, "$.gp.noise", "sim");
  cfg.gp.noise.eta_exp = get_number(noise, "$.gp.noise", "exp");
  try {
    cfg.gp.kernel.validate();
    cfg.gp.noise.validate();
  } catch (const std::invalid_argument& err) {
    fail("$.gp", err.what());
  }

  const json& es = get_field(doc, "$", "es");
  check_keys(es, "$.es",
             {"representers", "pmin_samples", "fantasies", "strategy", "softmax_temperature",
              "max_representers", "max_sample_budget", "refine_top", "refine_sample_factor"});
  cfg.es.representers = get_int_or(es, "$.es", "representers", cfg.es.representers);
  cfg.es.pmin_samples = get_int_or(es, "$.es", "pmin_samples", cfg.es.pmin_samples);
  cfg.es.fantasies = get_int_or(es, "$.es", "fantasies", cfg.es.fantasies);
  if (has_value(es, "strategy")) {
    const std::string strategy = get_string(es, "$.es", "strategy");
    if (strategy == "uniform-grid") {
      cfg.es.strategy = RepresenterStrategy::uniform_grid;
    } else if (strategy == "posterior-weighted-sample") {
      cfg.es.strategy = RepresenterStrategy::posterior_weighted_sample;
    } else {
      fail("$.es.strategy", "expected 'uniform-grid' or 'posterior-weighted-sample'");
    }
  }
  cfg.es.softmax_temperature =
      get_number_or(es, "$.es", "softmax_temperature", cfg.es.softmax_temperature);
  cfg.es.max_representers = get_int_or(es, "$.es", "max_representers", cfg.es.max_representers);
  if (has_value(es, "max_sample_budget")) {
    cfg.es.max_sample_budget = static_cast<std::int64_t>(get_number(es, "$.es", "max_sample_budget"));
  }
  cfg.es.refine_top = get_int_or(es, "$.es", "refine_top", cfg.es.refine_top);
  cfg.es.refine_sample_factor =
      get_int_or(es, "$.es", "refine_sample_factor", cfg.es.refine_sample_factor);
  if (cfg.es.refine_top < 0 || cfg.es.refine_sample_factor < 0) {
    fail("$.es", "refine settings must be >= 0");
  }
  if (cfg.es.representers < 2) fail("$.es.representers", "must be >= 2");
  if (cfg.es.representers > cfg.es.max_representers) {
    fail("$.es.representers", "exceeds max_representers");
  }
  if (cfg.es.pmin_samples < 1 || cfg.es.fantasies < 1) {
    fail("$.es", "pmin_samples and fantasies must be >= 1");
  }
  if (static_cast<std::int64_t>(cfg.es.fantasies) * cfg.es.pmin_samples >
      cfg.es.max_sample_budget) {
    fail("$.es", "fantasies * pmin_samples exceeds max_sample_budget");
  }

  const json& efforts = get_field(doc, "$", "efforts");
  check_keys(efforts, "$.efforts", {"sim", "exp"});
  cfg.efforts.t_sim = get_number(efforts, "$.efforts", "sim");
  cfg.efforts.t_exp = get_number(efforts, "$.efforts", "exp");
  try {
    cfg.efforts.validate();
  } catch (const std::invalid_argument& err) {
    fail("$.efforts", err.what());
  }

  const double sigma_err = std::sqrt(cfg.gp.kernel.err.output_variance);
  const json& stopping = get_field(doc, "$", "stopping");
  check_keys(stopping, "$.stopping",
             {"window", "mean_band", "std_cap", "min_iterations", "max_iterations",
              "max_total_effort"});
  cfg.stopping.window = get_int_or(stopping, "$.stopping", "window", 3);
  cfg.stopping.mean_band = get_number_or(stopping, "$.stopping", "mean_band", sigma_err / 4.0);
  cfg.stopping.std_cap = get_number_or(stopping, "$.stopping", "std_cap", sigma_err / 2.0);
  cfg.stopping.min_iterations = get_int_or(stopping, "$.stopping", "min_iterations", 0);
  cfg.stopping.max_iterations = get_int_or(stopping, "$.stopping", "max_iterations", 60);
  cfg.stopping.max_total_effort =
      get_number_or(stopping, "$.stopping", "max_total_effort", 40.0 * cfg.efforts.t_exp);
  try {
    cfg.stopping.validate();
  } catch (const std::invalid_argument& err) {
    fail("$.stopping", err.what());
  }

  if (has_value(doc, "init")) {
    const json& init = doc.at("init");
    check_keys(init, "$.init", {"physical", "simulation"});
    cfg.init.physical = get_int_or(init, "$.init", "physical", 0);
    cfg.init.simulation = get_int_or(init, "$.init", "simulation", 0);
    if (cfg.init.physical < 0 || cfg.init.simulation < 0) fail("$.init", "counts must be >= 0");
  }

  if (cfg.problem == Problem::synthetic1d && (has_value(doc, "plant") || has_value(doc, "lqr"))) {
    fail("$", "plant/lqr sections are only valid for problem 'cartpole'");
  }
  if (cfg.problem == Problem::cartpole && has_value(doc, "synthetic")) {
    fail("$.synthetic", "only valid for problem 'synthetic1d'");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config parse error: ") + err.what());
  }
  return parse_config(doc);
}

ObjectivePair make_objective(const RunConfig& config, std::uint64_t seed) {
  if (config.problem == Problem::synthetic1d) {
    const SyntheticConfig synthetic = *config.synthetic;
    const double eta_sim = config.gp.noise.eta_sim;
    const double eta_exp = config.gp.noise.eta_exp;
    auto make_channel = [&](bool simulation, double noise_std) {
      auto counter = std::make_shared<std::uint64_t>(0);
      return [=](const Eigen::VectorXd& theta) {
        double value = simulation ? synthetic.f_sim(theta) : synthetic.f_exp(theta);
        if (noise_std > 0.0) {
          auto engine =
              make_engine(seed, (simulation ? 0x51000000ull : 0x52000000ull) + (*counter)++);
          std::normal_distribution<double> normal(0.0, noise_std);
          value += normal(engine);
        }
        return value;
      };
    };
    ObjectivePair pair;
    pair.eval_sim = make_channel(true, eta_sim);
    pair.eval_exp = make_channel(false, eta_exp);
    pair.domain = synthetic.domain;
    return pair;
  }

  const PlantConfig& plant = *config.plant;
  const LqrConfig& lqr = *config.lqr;
  const CartPoleParams sim_params =
      make_simulator_params(plant.real, plant.sim_pole_mass_scale, plant.sim_frictionless);
  // The LQR design model comes from the (biased) simulator: design-model
  // error is part of what the tuning has to overcome.
  const LinearModel design_model = linearize(sim_params);
  const double tol = lqr.dare_tolerance;
  const int max_iter = lqr.dare_max_iterations;
  auto theta_to_gain = [design_model, tol, max_iter](const Eigen::VectorXd& theta) {
    return gain_from_theta(Eigen::Vector2d(theta[0], theta[1]), design_model, tol, max_iter);
  };
  return make_objective_pair(plant.real, sim_params, plant.limits, plant.penalty_exp,
                             plant.penalty_sim, config.gp.noise.eta_exp, config.gp.noise.eta_sim,
                             theta_to_gain, lqr.theta_box, plant.initial_state, seed);
}

}  // namespace mfes
