#include "mfes/experiment.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mfes/errors.hpp"
#include "mfes/io.hpp"
#include "mfes/lqr.hpp"
#include "mfes/rng.hpp"

namespace mfes {

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::string csv_theta_header(const std::string& prefix, int dim) {
  std::string header;
  for (int i = 0; i < dim; ++i) header += prefix + "_" + std::to_string(i) + ",";
  return header;
}

GpModel rebuild_model(const RunConfig& config, const RunResult& result) {
  std::vector<Observation> obs;
  obs.reserve(result.iterations.size());
  for (const auto& it : result.iterations) obs.push_back({{it.theta, it.delta}, it.observed_cost});
  return GpModel(config.gp.kernel, config.gp.mean, config.gp.noise, std::move(obs));
}

void write_metadata(const std::filesystem::path& dir, const RunConfig& config, RunMode mode,
                    std::uint64_t seed, const RunResult& result, double wall_total) {
  json meta;
  meta["problem"] = to_string(config.problem);
  meta["mode"] = to_string(mode);
  meta["seed"] = seed;
  meta["wall_time_s_total"] = wall_total;
  json per_iter = json::array();
  for (const auto& it : result.iterations) per_iter.push_back(it.wall_time_s);
  meta["per_iteration_wall_time_s"] = std::move(per_iter);
  const auto now = std::chrono::system_clock::now();
  meta["finished_at_unix_s"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  write_json(dir / "metadata.json", meta);
}

/// Per-iteration posterior snapshot over the representer grid: both source
/// posteriors, the p_min mass and the per-source acquisition scores.
void write_posterior_snapshot(const std::filesystem::path& path, const GpModel& gp,
                              const RepresenterGrid& grid, const PminEstimate& pmin,
                              const AcquisitionResult& acq) {
  const int d = grid.points.empty() ? 0 : static_cast<int>(grid.points.front().size());
  std::vector<ExtendedPoint> sim_pts, phys_pts;
  for (const auto& p : grid.points) {
    sim_pts.push_back({p, Fidelity::simulation});
    phys_pts.push_back({p, Fidelity::physical});
  }
  const auto [mu_sim, var_sim] = gp.posterior_marginals(sim_pts);
  const auto [mu_phys, var_phys] = gp.posterior_marginals(phys_pts);

  // The acquisition table is candidate-major over the grid; map scores back
  // to grid rows per fidelity.
  std::vector<double> score_sim(grid.size(), std::nan("")), score_phys(grid.size(), std::nan(""));
  const int per_candidate = static_cast<int>(acq.table.size()) / std::max(grid.size(), 1);
  for (int r = 0; r < grid.size(); ++r) {
    for (int j = 0; j < per_candidate; ++j) {
      const auto& entry = acq.table[r * per_candidate + j];
      (entry.delta == Fidelity::simulation ? score_sim : score_phys)[r] = entry.score;
    }
  }

  std::ostringstream out;
  out << csv_theta_header("theta", d)
      << "mu_sim,sigma_sim,mu_phys,sigma_phys,pmin_mass,score_sim,score_phys\n";
  for (int r = 0; r < grid.size(); ++r) {
    for (int i = 0; i < d; ++i) out << format_double(grid.points[r][i]) << ',';
    out << format_double(mu_sim[r]) << ',' << format_double(std::sqrt(var_sim[r])) << ','
        << format_double(mu_phys[r]) << ',' << format_double(std::sqrt(var_phys[r])) << ','
        << format_double(pmin.mass[r]) << ',' << format_double(score_sim[r]) << ','
        << format_double(score_phys[r]) << '\n';
  }
  write_text(path, out.str());
}

void write_best_guess_trace(const std::filesystem::path& path, const RunResult& result) {
  std::ostringstream out;
  out << "index,mu_bg,sigma_bg\n";
  for (const auto& it : result.iterations) {
    out << it.index << ',' << format_double(it.mu_bg) << ',' << format_double(it.sigma_bg)
        << '\n';
  }
  write_text(path, out.str());
}

/// Posterior mean/std lattice at delta=1 over the 2-D box (the final cost
/// landscape surface).
void write_posterior_surface(const std::filesystem::path& path, const GpModel& gp,
                             const BoxDomain& box, int resolution) {
  std::ostringstream out;
  out << "theta_0,theta_1,mu_phys,sigma_phys\n";
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      Eigen::VectorXd theta(2);
      theta[0] = box.lower[0] + box.width(0) * i / (resolution - 1);
      theta[1] = box.lower[1] + box.width(1) * j / (resolution - 1);
      const auto [mu, var] = gp.posterior_at({theta, Fidelity::physical});
      out << format_double(theta[0]) << ',' << format_double(theta[1]) << ','
          << format_double(mu) << ',' << format_double(std::sqrt(var)) << '\n';
    }
  }
  write_text(path, out.str());
}

}  // namespace

std::filesystem::path output_root(const RunConfig& config) {
  if (const char* env = std::getenv("MFES_OUTPUT_ROOT"); env && *env) {
    return std::filesystem::path(env);
  }
  return std::filesystem::path(config.output_dir);
}

int count_evaluations(const RunResult& result, Fidelity f) {
  int n = 0;
  for (const auto& it : result.iterations) n += (it.delta == f) ? 1 : 0;
  return n;
}

json run_log_json(const RunResult& result) {
  json iterations = json::array();
  for (const auto& it : result.iterations) {
    json rec;
    rec["index"] = it.index;
    rec["theta"] = std::vector<double>(it.theta.begin(), it.theta.end());
    rec["delta"] = fidelity_flag(it.delta);
    rec["observed_cost"] = it.observed_cost;
    rec["cumulative_effort"] = it.cumulative_effort;
    rec["theta_bg"] = std::vector<double>(it.theta_bg.begin(), it.theta_bg.end());
    rec["mu_bg"] = it.mu_bg;
    rec["sigma_bg"] = it.sigma_bg;
    rec["pmin_entropy"] = it.pmin_entropy;
    iterations.push_back(std::move(rec));
  }
  json final;
  final["theta_bg"] =
      std::vector<double>(result.final_theta_bg.begin(), result.final_theta_bg.end());
  final["final_cost"] = result.final_cost;
  final["stop_reason"] = result.stop_reason;
  return json{{"iterations", std::move(iterations)}, {"final", std::move(final)}};
}

void write_run_log_json(const std::filesystem::path& path, const RunResult& result) {
  write_json(path, run_log_json(result));
}

void write_iterations_csv(const std::filesystem::path& path, const RunResult& result) {
  const int d = result.iterations.empty() ? static_cast<int>(result.final_theta_bg.size())
                                          : static_cast<int>(result.iterations.front().theta.size());
  std::ostringstream out;
  out << "index," << csv_theta_header("theta", d) << "delta,observed_cost,cumulative_effort,"
      << csv_theta_header("theta_bg", d) << "mu_bg,sigma_bg,pmin_entropy\n";
  for (const auto& it : result.iterations) {
    out << it.index << ',';
    for (int i = 0; i < d; ++i) out << format_double(it.theta[i]) << ',';
    out << fidelity_flag(it.delta) << ',' << format_double(it.observed_cost) << ','
        << format_double(it.cumulative_effort) << ',';
    for (int i = 0; i < d; ++i) out << format_double(it.theta_bg[i]) << ',';
    out << format_double(it.mu_bg) << ',' << format_double(it.sigma_bg) << ','
        << format_double(it.pmin_entropy) << '\n';
  }
  write_text(path, out.str());
}

RunResult execute_run(const RunConfig& config, RunMode mode, std::uint64_t seed,
                      const std::filesystem::path& dir, bool dump_trajectory) {
  std::filesystem::create_directories(dir);
  const ObjectivePair objective = make_objective(config, mix_seed(seed, 0x0b1ec71f));

  IterationObserver observer;
  if (config.problem == Problem::synthetic1d) {
    observer.on_decision = [&dir](int index, const GpModel& gp, const RepresenterGrid& grid,
                                  const PminEstimate& pmin, const AcquisitionResult& acq) {
      std::ostringstream name;
      name << "posterior_iter_" << std::setfill('0') << std::setw(3) << index << ".csv";
      write_posterior_snapshot(dir / name.str(), gp, grid, pmin, acq);
    };
  }

  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  try {
    result = (mode == RunMode::mfes)
                 ? run_mfes(objective, config.gp, config.es, config.efforts, config.stopping,
                            seed, config.init, &observer)
                 : run_es_baseline(objective, config.gp, config.es, config.efforts,
                                   config.stopping, seed, config.init, &observer);
  } catch (RunAborted& abort) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_run_log_json(dir / "runlog.json", abort.partial_log);
    write_iterations_csv(dir / "iterations.csv", abort.partial_log);
    write_metadata(dir, config, mode, seed, abort.partial_log, wall);
    throw;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_run_log_json(dir / "runlog.json", result);
  write_iterations_csv(dir / "iterations.csv", result);
  write_metadata(dir, config, mode, seed, result, wall);

  if (config.problem == Problem::cartpole) {
    write_best_guess_trace(dir / "best_guess_trace.csv", result);
    const GpModel final_model = rebuild_model(config, result);
    write_posterior_surface(dir / "posterior_surface.csv", final_model, config.lqr->theta_box,
                            config.plant->posterior_dump_resolution);
    if (dump_trajectory) {
      const CartPoleParams& real = config.plant->real;
      const LinearModel design_model = linearize(
          make_simulator_params(real, config.plant->sim_pole_mass_scale,
                                config.plant->sim_frictionless));
      const Eigen::RowVector4d gain =
          gain_from_theta(Eigen::Vector2d(result.final_theta_bg[0], result.final_theta_bg[1]),
                          design_model, config.lqr->dare_tolerance,
                          config.lqr->dare_max_iterations);
      const RolloutResult final_rollout = rollout(real, config.plant->limits, gain,
                                                  config.plant->initial_state,
                                                  config.plant->penalty_exp, 0.0, 0);
      write_trajectory_csv((dir / "final_trajectory.csv").string(), final_rollout);
    }
  }
  return result;
}

ComparisonSummary summarize_comparison(std::vector<ComparisonRow> rows) {
  ComparisonSummary summary;
  summary.rows = std::move(rows);
  for (const std::string mode : {"mfes", "es"}) {
    ModeAggregate agg;
    agg.mode = mode;
    std::vector<double> costs;
    for (const auto& row : summary.rows) {
      if (row.mode != mode) continue;
      ++agg.runs;
      costs.push_back(row.final_cost);
      agg.mean_n_sim += row.n_sim;
      agg.mean_n_exp += row.n_exp;
      agg.mean_total_effort += row.total_effort;
    }
    if (agg.runs == 0) continue;
    agg.mean_n_sim /= agg.runs;
    agg.mean_n_exp /= agg.runs;
    agg.mean_total_effort /= agg.runs;
    double mean = 0.0;
    for (double c : costs) mean += c;
    mean /= agg.runs;
    agg.mean_final_cost = mean;
    double ss = 0.0;
    for (double c : costs) ss += (c - mean) * (c - mean);
    agg.std_final_cost = agg.runs > 1 ? std::sqrt(ss / (agg.runs - 1)) : 0.0;
    summary.aggregates.push_back(std::move(agg));
  }
  const ModeAggregate* mfes_agg = nullptr;
  const ModeAggregate* es_agg = nullptr;
  for (const auto& agg : summary.aggregates) {
    if (agg.mode == "mfes") mfes_agg = &agg;
    if (agg.mode == "es") es_agg = &agg;
  }
  if (mfes_agg && es_agg && es_agg->mean_n_exp > 0.0) {
    summary.physical_eval_reduction_pct =
        100.0 * (1.0 - mfes_agg->mean_n_exp / es_agg->mean_n_exp);
  }
  return summary;
}

int run_synthetic_command(const RunConfig& config, std::uint64_t seed) {
  const auto root = output_root(config);
  const auto dir = root / (to_string(config.problem) + "_" + to_string(config.mode) + "_seed" +
                           std::to_string(seed));
  try {
    execute_run(config, config.mode, seed, dir);
  } catch (const RunAborted& abort) {
    std::cerr << "numerical abort: " << abort.what() << "\n";
    return kExitNumericalError;
  }
  std::cout << dir.string() << "\n";
  return kExitOk;
}

int run_cartpole_command(const RunConfig& config, std::uint64_t seed, bool dump_trajectory) {
  const auto root = output_root(config);
  const auto dir = root / (to_string(config.problem) + "_" + to_string(config.mode) + "_seed" +
                           std::to_string(seed));
  try {
    execute_run(config, config.mode, seed, dir, dump_trajectory);
  } catch (const RunAborted& abort) {
    std::cerr << "numerical abort: " << abort.what() << "\n";
    return kExitNumericalError;
  }
  std::cout << dir.string() << "\n";
  return kExitOk;
}

int run_compare_command(const RunConfig& config) {
  const auto root = output_root(config) / "compare";
  std::filesystem::create_directories(root);
  std::vector<ComparisonRow> rows;
  bool any_abort = false;
  for (const RunMode mode : {RunMode::mfes, RunMode::es}) {
    for (const std::uint64_t seed : config.seeds) {
      const auto dir = root / (to_string(mode) + "_seed" + std::to_string(seed));
      ComparisonRow row;
      row.mode = to_string(mode);
      row.seed = seed;
      try {
        const RunResult result = execute_run(config, mode, seed, dir);
        row.final_cost = result.final_cost;
        row.n_sim = count_evaluations(result, Fidelity::simulation);
        row.n_exp = count_evaluations(result, Fidelity::physical);
        row.total_effort =
            result.iterations.empty() ? 0.0 : result.iterations.back().cumulative_effort;
        row.stop_reason = result.stop_reason;
      } catch (const RunAborted& abort) {
        std::cerr << "numerical abort (mode " << row.mode << ", seed " << seed
                  << "): " << abort.what() << "\n";
        row.final_cost = std::nan("");
        row.stop_reason = "aborted";
        any_abort = true;
      }
      rows.push_back(std::move(row));
    }
  }

  const ComparisonSummary summary = summarize_comparison(std::move(rows));
  std::ostringstream csv;
  csv << "mode,seed,final_cost,n_sim,n_exp,total_effort,stop_reason\n";
  for (const auto& row : summary.rows) {
    csv << row.mode << ',' << row.seed << ',' << format_double(row.final_cost) << ','
        << row.n_sim << ',' << row.n_exp << ',' << format_double(row.total_effort) << ','
        << row.stop_reason << '\n';
  }
  write_text(root / "comparison.csv", csv.str());

  json agg = json::array();
  for (const auto& a : summary.aggregates) {
    agg.push_back({{"mode", a.mode},
                   {"runs", a.runs},
                   {"mean_final_cost", a.mean_final_cost},
                   {"std_final_cost", a.std_final_cost},
                   {"mean_n_sim", a.mean_n_sim},
                   {"mean_n_exp", a.mean_n_exp},
                   {"mean_total_effort", a.mean_total_effort}});
  }
  write_json(root / "comparison_summary.json",
             json{{"aggregates", std::move(agg)},
                  {"physical_eval_reduction_pct", summary.physical_eval_reduction_pct}});
  std::cout << root.string() << "\n";
  return any_abort ? kExitNumericalError : kExitOk;
}

}  // namespace mfes
