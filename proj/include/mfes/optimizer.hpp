#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfes/entropy_search.hpp"
#include "mfes/gp_model.hpp"

namespace mfes {

/// Prior pieces from which the run's GpModel is built.
struct GpPrior {
  CompositeKernel kernel;
  MeanModel mean;
  NoiseModel noise;
};

/// Convergence rule: stop once the posterior mean at the best guess has been
/// steady (within a band of width mean_band over the last `window`
/// iterations) and its posterior standard deviation is below std_cap.
/// Hard caps on iterations and total effort guarantee termination;
/// min_iterations guards the degenerate case where the window fills before
/// any exploration has happened.
struct StoppingRule {
  int window = 3;
  double mean_band = 0.0;
  double std_cap = 0.0;
  int min_iterations = 0;
  int max_iterations = 60;
  double max_total_effort = 0.0;

  void validate() const;
};

/// Optional seed evaluations performed before the acquisition loop starts,
/// at uniformly drawn parameters.
struct InitDesign {
  int physical = 0;
  int simulation = 0;
};

struct IterationRecord {
  int index = 0;  // 1-based, consecutive
  Eigen::VectorXd theta;
  Fidelity delta = Fidelity::physical;
  double observed_cost = 0.0;
  double cumulative_effort = 0.0;
  Eigen::VectorXd theta_bg;
  double mu_bg = 0.0;
  double sigma_bg = 0.0;
  double pmin_entropy = 0.0;
  double wall_time_s = 0.0;  // diagnostics only; kept out of deterministic outputs
};

struct RunResult {
  std::vector<IterationRecord> iterations;
  Eigen::VectorXd final_theta_bg;
  double final_cost = 0.0;
  std::string stop_reason;  // "converged" or "budget"
};

/// The two evaluation channels of one tuning problem. Both callables must be
/// total over the domain: an unstable or failed evaluation is encoded as a
/// finite penalty value, never as an exception.
struct ObjectivePair {
  std::function<double(const Eigen::VectorXd&)> eval_sim;
  std::function<double(const Eigen::VectorXd&)> eval_exp;
  BoxDomain domain;
};

/// Fired once per acquisition iteration with the state the decision was made
/// on (posterior before the new evaluation). Seed evaluations do not fire it.
struct IterationObserver {
  std::function<void(int index, const GpModel& gp, const RepresenterGrid& grid,
                     const PminEstimate& pmin, const AcquisitionResult& acquisition)>
      on_decision;
};

/// A numerical failure ended a run early; the iterations completed before
/// the failure ride along so callers can still persist them.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunResult partial)
      : std::runtime_error(what), partial_log(std::move(partial)) {}

  RunResult partial_log;
};

std::optional<std::string> check_stopping(const std::vector<IterationRecord>& records,
                                          const StoppingRule& rule);

/// Multi-fidelity entropy-search loop: select (theta, delta) by expected
/// entropy decrease per unit effort, evaluate the chosen source, update the
/// model, and repeat until the stopping rule or a budget cap fires. Ends
/// with one physical evaluation of the final best guess.
RunResult run_mfes(const ObjectivePair& objective, const GpPrior& prior, const EsSettings& es,
                   const EffortModel& efforts, const StoppingRule& stop, std::uint64_t seed,
                   const InitDesign& init = {}, const IterationObserver* observer = nullptr);

/// Same loop restricted to physical evaluations (the single-source
/// entropy-search baseline). Simulation seed evaluations are dropped.
RunResult run_es_baseline(const ObjectivePair& objective, const GpPrior& prior,
                          const EsSettings& es, const EffortModel& efforts,
                          const StoppingRule& stop, std::uint64_t seed,
                          const InitDesign& init = {},
                          const IterationObserver* observer = nullptr);

}  // namespace mfes
