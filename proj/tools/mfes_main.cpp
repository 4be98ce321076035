#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "mfes/config.hpp"
#include "mfes/errors.hpp"
#include "mfes/experiment.hpp"

namespace {

mfes::RunConfig load_or_exit(const std::string& path) {
  return mfes::load_config(path);  // ConfigError handled by the caller
}

std::uint64_t pick_seed(const mfes::RunConfig& config, std::int64_t seed_arg) {
  if (seed_arg >= 0) return static_cast<std::uint64_t>(seed_arg);
  return config.seeds.empty() ? 0 : config.seeds.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity entropy-search controller tuning"};
  app.require_subcommand(1);

  std::string config_path;
  std::int64_t seed_arg = -1;
  bool dump_trajectory = false;

  auto* synthetic = app.add_subcommand("synthetic", "Run the 1-D synthetic demo");
  synthetic->add_option("--config", config_path, "Run configuration file")->required();
  synthetic->add_option("--seed", seed_arg, "Seed (default: first entry of the config's seeds)");

  auto* cartpole = app.add_subcommand("cartpole", "Run the cart-pole tuning problem");
  cartpole->add_option("--config", config_path, "Run configuration file")->required();
  cartpole->add_option("--seed", seed_arg, "Seed (default: first entry of the config's seeds)");
  cartpole->add_flag("--dump-trajectory", dump_trajectory,
                     "Also write the final controller's trajectory CSV");

  auto* compare = app.add_subcommand("compare", "Run both modes over the config's seed list");
  compare->add_option("--config", config_path, "Run configuration file")->required();

  auto* validate = app.add_subcommand("validate-config", "Schema-check a configuration file");
  validate->add_option("--config", config_path, "Run configuration file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      load_or_exit(config_path);
      std::cout << "config ok: " << config_path << "\n";
      return mfes::kExitOk;
    }
    const mfes::RunConfig config = load_or_exit(config_path);
    if (synthetic->parsed()) {
      if (config.problem != mfes::Problem::synthetic1d) {
        throw mfes::ConfigError("config error at '$.problem': expected 'synthetic1d'");
      }
      return mfes::run_synthetic_command(config, pick_seed(config, seed_arg));
    }
    if (cartpole->parsed()) {
      if (config.problem != mfes::Problem::cartpole) {
        throw mfes::ConfigError("config error at '$.problem': expected 'cartpole'");
      }
      return mfes::run_cartpole_command(config, pick_seed(config, seed_arg), dump_trajectory);
    }
    return mfes::run_compare_command(config);
  } catch (const mfes::ConfigError& err) {
    std::cerr << err.what() << "\n";
    return mfes::kExitConfigError;
  } catch (const mfes::ConditioningError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return mfes::kExitNumericalError;
  } catch (const mfes::NotStabilizableError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return mfes::kExitNumericalError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
