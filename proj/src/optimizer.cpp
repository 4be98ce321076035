#include "mfes/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "mfes/errors.hpp"
#include "mfes/rng.hpp"

namespace mfes {

void StoppingRule::validate() const {
  if (window < 1) throw std::invalid_argument("StoppingRule: window must be >= 1");
  if (!(mean_band > 0.0) || !(std_cap > 0.0)) {
    throw std::invalid_argument("StoppingRule: bands must be positive");
  }
  if (min_iterations < 0) throw std::invalid_argument("StoppingRule: min_iterations < 0");
  if (max_iterations < 0) throw std::invalid_argument("StoppingRule: max_iterations < 0");
  if (!(max_total_effort > 0.0)) {
    throw std::invalid_argument("StoppingRule: max_total_effort must be positive");
  }
}

std::optional<std::string> check_stopping(const std::vector<IterationRecord>& records,
                                          const StoppingRule& rule) {
  if (records.empty()) return std::nullopt;
  if (static_cast<int>(records.size()) >= std::max(rule.window, rule.min_iterations)) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = records.size() - rule.window; i < records.size(); ++i) {
      lo = std::min(lo, records[i].mu_bg);
      hi = std::max(hi, records[i].mu_bg);
    }
    if (hi - lo <= rule.mean_band && records.back().sigma_bg < rule.std_cap) {
      return "converged";
    }
  }
  if (static_cast<int>(records.size()) >= rule.max_iterations) return "budget";
  if (records.back().cumulative_effort >= rule.max_total_effort) return "budget";
  return std::nullopt;
}

namespace {

Eigen::VectorXd uniform_draw(const BoxDomain& domain, std::mt19937_64& engine) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd theta(domain.dim());
  for (int i = 0; i < domain.dim(); ++i) {
    theta[i] = domain.lower[i] + domain.width(i) * unif(engine);
  }
  return theta;
}

RunResult run_loop(const ObjectivePair& objective, const GpPrior& prior, const EsSettings& es,
                   const EffortModel& efforts, const StoppingRule& stop, std::uint64_t seed,
                   const InitDesign& init, const IterationObserver* observer,
                   bool include_simulation) {
  efforts.validate();
  stop.validate();
  if (!objective.eval_exp || (include_simulation && !objective.eval_sim)) {
    throw std::invalid_argument("run: objective callables must be set");
  }
  if (init.physical < 0 || init.simulation < 0) {
    throw std::invalid_argument("run: init counts must be >= 0");
  }
  const BoxDomain& domain = objective.domain;

  GpModel gp(prior.kernel, prior.mean, prior.noise);
  RunResult result;
  double effort = 0.0;
  int pending_phys = init.physical;
  int pending_sim = include_simulation ? init.simulation : 0;

  try {
    while (true) {
      const int done = static_cast<int>(result.iterations.size());
      if (done >= stop.max_iterations || effort >= stop.max_total_effort) {
        result.stop_reason = "budget";
        break;
      }
      const auto t_start = std::chrono::steady_clock::now();
      const int index = done + 1;

      const RepresenterStrategy strategy =
          (es.strategy == RepresenterStrategy::posterior_weighted_sample && gp.size() == 0)
              ? RepresenterStrategy::uniform_grid
              : es.strategy;
      const RepresenterGrid grid = build_representers(
          domain, es.representers, gp, strategy, mix_seed(seed, 0xA000 + index), es);

      Eigen::VectorXd theta;
      Fidelity delta = Fidelity::physical;
      if (pending_phys > 0 || pending_sim > 0) {
        // Seed evaluations at uniformly drawn parameters, physical first.
        delta = pending_phys > 0 ? Fidelity::physical : Fidelity::simulation;
        (pending_phys > 0 ? pending_phys : pending_sim) -= 1;
        auto engine = make_engine(seed, 0x1717 + index);
        theta = uniform_draw(domain, engine);
      } else {
        const AcquisitionResult acq =
            select_next(gp, grid.points, efforts, grid, es.fantasies, es.pmin_samples,
                        mix_seed(seed, 0xB000 + index), include_simulation, es.refine_top,
                        es.refine_sample_factor);
        if (observer && observer->on_decision) {
          const PminEstimate pmin_before =
              estimate_pmin(gp, grid, es.pmin_samples, mix_seed(seed, 0xC000 + index));
          observer->on_decision(index, gp, grid, pmin_before, acq);
        }
        theta = acq.best_theta;
        delta = acq.best_delta;
      }

      const double y =
          (delta == Fidelity::simulation ? objective.eval_sim : objective.eval_exp)(theta);
      gp = gp.add_observation({theta, delta}, y);
      effort += efforts.for_fidelity(delta);

      IterationRecord rec;
      rec.index = index;
      rec.theta = theta;
      rec.delta = delta;
      rec.observed_cost = y;
      rec.cumulative_effort = effort;
      rec.theta_bg = best_guess(gp, domain);
      const auto [mu_bg, var_bg] = gp.posterior_at({rec.theta_bg, Fidelity::physical});
      rec.mu_bg = mu_bg;
      rec.sigma_bg = std::sqrt(var_bg);
      rec.pmin_entropy =
          estimate_pmin(gp, grid, es.pmin_samples, mix_seed(seed, 0xD000 + index)).entropy;
      rec.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      result.iterations.push_back(std::move(rec));

      if (const auto reason = check_stopping(result.iterations, stop)) {
        result.stop_reason = *reason;
        break;
      }
    }

    result.final_theta_bg = result.iterations.empty() ? best_guess(gp, domain)
                                                      : result.iterations.back().theta_bg;
    result.final_cost = objective.eval_exp(result.final_theta_bg);
  } catch (const ConditioningError& err) {
    result.stop_reason = "aborted";
    throw RunAborted(err.what(), std::move(result));
  } catch (const NotStabilizableError& err) {
    result.stop_reason = "aborted";
    throw RunAborted(err.what(), std::move(result));
  }
  return result;
}

}  // namespace

RunResult run_mfes(const ObjectivePair& objective, const GpPrior& prior, const EsSettings& es,
                   const EffortModel& efforts, const StoppingRule& stop, std::uint64_t seed,
                   const InitDesign& init, const IterationObserver* observer) {
  return run_loop(objective, prior, es, efforts, stop, seed, init, observer, true);
}

RunResult run_es_baseline(const ObjectivePair& objective, const GpPrior& prior,
                          const EsSettings& es, const EffortModel& efforts,
                          const StoppingRule& stop, std::uint64_t seed, const InitDesign& init,
                          const IterationObserver* observer) {
  return run_loop(objective, prior, es, efforts, stop, seed, init, observer, false);
}

}  // namespace mfes
