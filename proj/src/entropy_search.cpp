#include "mfes/entropy_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "mfes/errors.hpp"
#include "mfes/rng.hpp"

namespace mfes {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> axis_lattice(double lo, double hi, int count) {
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) {
    v[i] = (count == 1) ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  }
  return v;
}

RepresenterGrid uniform_lattice(const BoxDomain& domain, int count) {
  const int d = domain.dim();
  // Per-axis resolution chosen so the lattice has at most `count` points
  // while still covering the box corners.
  const int per_axis = std::max(2, static_cast<int>(std::floor(std::pow(
                                       static_cast<double>(count) + 1e-9, 1.0 / d))));
  std::vector<std::vector<double>> axes(d);
  for (int i = 0; i < d; ++i) {
    axes[i] = axis_lattice(domain.lower[i], domain.upper[i], d == 1 ? count : per_axis);
  }
  RepresenterGrid grid;
  std::vector<int> idx(d, 0);
  while (true) {
    Eigen::VectorXd p(d);
    for (int i = 0; i < d; ++i) p[i] = axes[i][idx[i]];
    grid.points.push_back(std::move(p));
    int axis = d - 1;
    while (axis >= 0 && ++idx[axis] == static_cast<int>(axes[axis].size())) {
      idx[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return grid;
}

bool contains_point(const RepresenterGrid& grid, const Eigen::VectorXd& p) {
  for (const auto& q : grid.points) {
    if (q.size() == p.size() && q == p) return true;
  }
  return false;
}

RepresenterGrid weighted_sample(const BoxDomain& domain, int count, const GpModel& gp,
                                std::uint64_t seed, const EsSettings& settings) {
  const int d = domain.dim();
  // Probe the LCB range on a coarse lattice to normalize the softmax.
  const int probe_per_axis = d == 1 ? 256 : std::max(2, static_cast<int>(std::floor(
                                                std::pow(2048.0, 1.0 / d))));
  RepresenterGrid probe = uniform_lattice(domain, d == 1 ? probe_per_axis
                                                         : static_cast<int>(std::pow(
                                                               probe_per_axis, d)));
  std::vector<ExtendedPoint> probe_pts;
  probe_pts.reserve(probe.points.size());
  for (auto& p : probe.points) probe_pts.push_back({p, Fidelity::physical});
  auto [mu, var] = gp.posterior_marginals(probe_pts);
  const Eigen::VectorXd lcb = mu - 2.0 * var.cwiseSqrt();
  const double lcb_min = lcb.minCoeff();
  const double lcb_range = std::max(lcb.maxCoeff() - lcb_min, 1e-300);
  const double temp = std::max(settings.softmax_temperature, 1e-6);

  std::mt19937_64 engine = make_engine(seed, 0x5e9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RepresenterGrid grid;
  grid.points.reserve(count);
  const long max_attempts = 20000L * count;
  for (long attempt = 0; attempt < max_attempts && grid.size() < count; ++attempt) {
    Eigen::VectorXd theta(d);
    for (int i = 0; i < d; ++i) theta[i] = domain.lower[i] + domain.width(i) * unif(engine);
    const auto [m, v] = gp.posterior_at({theta, Fidelity::physical});
    const double point_lcb = m - 2.0 * std::sqrt(v);
    const double accept = std::exp(-(point_lcb - lcb_min) / (temp * lcb_range));
    if (unif(engine) <= accept && !contains_point(grid, theta)) {
      grid.points.push_back(std::move(theta));
    }
  }
  // Degenerate posteriors can starve the sampler; pad uniformly so the grid
  // always reaches the requested size.
  while (grid.size() < count) {
    Eigen::VectorXd theta(d);
    for (int i = 0; i < d; ++i) theta[i] = domain.lower[i] + domain.width(i) * unif(engine);
    if (!contains_point(grid, theta)) grid.points.push_back(std::move(theta));
  }
  return grid;
}

/// Count argmins over the grid columns of one sample row, lowest index wins.
inline int argmin_index(const double* row, int n) {
  int best = 0;
  double best_val = row[0];
  for (int r = 1; r < n; ++r) {
    if (row[r] < best_val) {
      best_val = row[r];
      best = r;
    }
  }
  return best;
}

Eigen::VectorXd mass_from_counts(const std::vector<int>& counts, int samples) {
  Eigen::VectorXd mass(counts.size());
  for (std::size_t r = 0; r < counts.size(); ++r) {
    mass[r] = static_cast<double>(counts[r]) / samples;
  }
  return mass;
}

}  // namespace

void EffortModel::validate() const {
  if (!(t_sim > 0.0) || !(t_exp > 0.0) || !std::isfinite(t_sim) || !std::isfinite(t_exp)) {
    throw std::invalid_argument("EffortModel: efforts must be finite and > 0");
  }
}

RepresenterGrid build_representers(const BoxDomain& domain, int count, const GpModel& gp,
                                   RepresenterStrategy strategy, std::uint64_t seed,
                                   const EsSettings& settings) {
  if (count < 2) throw std::invalid_argument("build_representers: need at least 2 points");
  if (count > settings.max_representers) {
    throw std::invalid_argument("build_representers: count exceeds max_representers");
  }
  if (domain.dim() == 0) throw std::invalid_argument("build_representers: empty domain");
  switch (strategy) {
    case RepresenterStrategy::uniform_grid:
      return uniform_lattice(domain, count);
    case RepresenterStrategy::posterior_weighted_sample:
      return weighted_sample(domain, count, gp, seed, settings);
  }
  throw std::invalid_argument("build_representers: unknown strategy");
}

double shannon_entropy(const Eigen::VectorXd& mass) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (mass[i] > 0.0) h -= mass[i] * std::log(mass[i]);
  }
  return std::max(h, 0.0);
}

PminEstimate estimate_pmin(const GpModel& gp, const RepresenterGrid& grid, int samples,
                           std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("estimate_pmin: need at least 1 sample");
  const int n = grid.size();
  if (n < 1) throw std::invalid_argument("estimate_pmin: empty grid");

  std::vector<ExtendedPoint> pts;
  pts.reserve(n);
  for (const auto& p : grid.points) pts.push_back({p, Fidelity::physical});
  auto [mu, cov] = gp.posterior(pts);
  const double scale = std::max(cov.diagonal().maxCoeff(), gp.kernel().total_output_variance());
  const Eigen::MatrixXd lower = cholesky_with_jitter(std::move(cov), scale);

  std::mt19937_64 engine = make_engine(seed, 0x9317);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMajorMatrix z(samples, n);
  for (int s = 0; s < samples; ++s) {
    for (int r = 0; r < n; ++r) z(s, r) = normal(engine);
  }
  RowMajorMatrix draws = z * lower.transpose();
  draws.rowwise() += mu.transpose();

  std::vector<int> counts(n, 0);
  for (int s = 0; s < samples; ++s) {
    ++counts[argmin_index(draws.row(s).data(), n)];
  }
  PminEstimate est;
  est.grid = grid;
  est.mass = mass_from_counts(counts, samples);
  est.entropy = shannon_entropy(est.mass);
  return est;
}

std::vector<double> entropy_change_sweep(const GpModel& gp, const RepresenterGrid& grid,
                                         std::span<const ExtendedPoint> candidates,
                                         int fantasies, int samples, std::uint64_t seed) {
  if (fantasies < 1) throw std::invalid_argument("entropy_change_sweep: need >= 1 fantasy");
  if (samples < 1) throw std::invalid_argument("entropy_change_sweep: need >= 1 sample");
  const int n_grid = grid.size();
  if (n_grid < 1) throw std::invalid_argument("entropy_change_sweep: empty grid");

  // Joint point set: the grid (at delta=1), then any candidate not already
  // on it. Candidates that coincide with grid points share columns.
  std::vector<ExtendedPoint> joint;
  joint.reserve(n_grid + candidates.size());
  for (const auto& p : grid.points) joint.push_back({p, Fidelity::physical});
  std::vector<int> candidate_col(candidates.size(), -1);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (std::size_t j = 0; j < joint.size(); ++j) {
      if (same_point(joint[j], candidates[c])) {
        candidate_col[c] = static_cast<int>(j);
        break;
      }
    }
    if (candidate_col[c] < 0) {
      candidate_col[c] = static_cast<int>(joint.size());
      joint.push_back(candidates[c]);
    }
  }
  const int n_joint = static_cast<int>(joint.size());

  auto [mu, cov] = gp.posterior(joint);
  const double scale = std::max(cov.diagonal().maxCoeff(), gp.kernel().total_output_variance());
  double jitter = 0.0;
  const Eigen::MatrixXd lower = cholesky_with_jitter(cov, scale, &jitter);
  cov.diagonal().array() += jitter;  // keep the pathwise update consistent with the sample law

  // Base draws, shared by the current and every fantasy p_min estimate.
  std::mt19937_64 engine = make_engine(seed, 0x2b7e);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMajorMatrix z(samples, n_joint);
  for (int s = 0; s < samples; ++s) {
    for (int j = 0; j < n_joint; ++j) z(s, j) = normal(engine);
  }
  RowMajorMatrix draws = z * lower.transpose();
  draws.rowwise() += mu.transpose();

  // Common random numbers across candidates: one fantasy quantile set and
  // one observation-noise set, scaled per candidate.
  Eigen::VectorXd fantasy_z(fantasies);
  for (int f = 0; f < fantasies; ++f) fantasy_z[f] = normal(engine);
  Eigen::VectorXd noise_z(samples);
  for (int s = 0; s < samples; ++s) noise_z[s] = normal(engine);

  std::vector<int> counts(n_grid, 0);
  for (int s = 0; s < samples; ++s) {
    ++counts[argmin_index(draws.row(s).data(), n_grid)];
  }
  const double base_entropy = shannon_entropy(mass_from_counts(counts, samples));

  std::vector<double> gains(candidates.size(), 0.0);
  Eigen::VectorXd shifted(n_grid);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const int col = candidate_col[c];
    const double eta2 = gp.noise().var_for(candidates[c].delta);
    const double eta = std::sqrt(eta2);
    const double predictive_var = cov(col, col) + eta2;
    const double v = std::max(predictive_var, 1e-300);
    const Eigen::VectorXd k_vec = cov.col(col).head(n_grid);

    double fantasy_entropy_sum = 0.0;
    for (int f = 0; f < fantasies; ++f) {
      const double y_f = mu[col] + std::sqrt(predictive_var) * fantasy_z[f];
      std::fill(counts.begin(), counts.end(), 0);
      for (int s = 0; s < samples; ++s) {
        // Pathwise conditioning: shift the joint sample as if (candidate,
        // y_f) had been observed through its noise channel.
        const double coeff = (y_f - draws(s, col) - eta * noise_z[s]) / v;
        const double* row = draws.row(s).data();
        int best = 0;
        double best_val = row[0] + coeff * k_vec[0];
        for (int r = 1; r < n_grid; ++r) {
          const double val = row[r] + coeff * k_vec[r];
          if (val < best_val) {
            best_val = val;
            best = r;
          }
        }
        ++counts[best];
      }
      fantasy_entropy_sum += shannon_entropy(mass_from_counts(counts, samples));
    }
    gains[c] = base_entropy - fantasy_entropy_sum / fantasies;
  }
  return gains;
}

double expected_entropy_change(const GpModel& gp, const ExtendedPoint& candidate,
                               const RepresenterGrid& grid, int fantasies, int samples,
                               std::uint64_t seed, std::int64_t max_sample_budget) {
  if (static_cast<std::int64_t>(fantasies) * samples > max_sample_budget) {
    throw std::invalid_argument("expected_entropy_change: fantasy*sample budget exceeds cap");
  }
  const ExtendedPoint cands[] = {candidate};
  return entropy_change_sweep(gp, grid, cands, fantasies, samples, seed)[0];
}

AcquisitionResult select_from_scores(std::vector<CandidateScore> table) {
  if (table.empty()) throw std::invalid_argument("select_from_scores: empty table");
  int best = -1;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!std::isfinite(table[i].score)) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const auto& cur = table[i];
    const auto& top = table[best];
    if (cur.score > top.score ||
        (cur.score == top.score && fidelity_flag(cur.delta) > fidelity_flag(top.delta))) {
      best = static_cast<int>(i);
    }
    // Equal score and fidelity: the earlier (lower-index) entry stands.
  }
  if (best < 0) {
    throw std::runtime_error("select_from_scores: all scores non-finite; model is degenerate");
  }
  AcquisitionResult result;
  result.best_theta = table[best].theta;
  result.best_delta = table[best].delta;
  result.score = table[best].score;
  result.table = std::move(table);
  return result;
}

AcquisitionResult select_next(const GpModel& gp, const std::vector<Eigen::VectorXd>& candidates,
                              const EffortModel& efforts, const RepresenterGrid& grid,
                              int fantasies, int samples, std::uint64_t seed,
                              bool include_simulation, int refine_top, int refine_factor) {
  if (candidates.empty()) throw std::invalid_argument("select_next: no candidates");
  efforts.validate();

  std::vector<ExtendedPoint> pts;
  pts.reserve(candidates.size() * 2);
  for (const auto& theta : candidates) {
    if (include_simulation) pts.push_back({theta, Fidelity::simulation});
    pts.push_back({theta, Fidelity::physical});
  }
  const std::vector<double> gains = entropy_change_sweep(gp, grid, pts, fantasies, samples, seed);

  std::vector<CandidateScore> table(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    table[i].theta = pts[i].theta;
    table[i].delta = pts[i].delta;
    table[i].entropy_gain = gains[i];
    table[i].score = gains[i] / efforts.for_fidelity(pts[i].delta);
  }

  if (refine_top > 0 && refine_factor > 1) {
    // De-noise the decision: re-estimate the per-fidelity leaders with a
    // larger sample set so a saturated source cannot stay on top purely by
    // the Monte-Carlo noise maximum over the sweep.
    std::vector<std::size_t> order(table.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&table](std::size_t a, std::size_t b) {
      return table[a].score > table[b].score;
    });
    std::vector<std::size_t> chosen;
    int taken_sim = 0, taken_phys = 0;
    for (const std::size_t i : order) {
      int& taken = table[i].delta == Fidelity::simulation ? taken_sim : taken_phys;
      if (taken < refine_top) {
        ++taken;
        chosen.push_back(i);
      }
    }
    std::vector<ExtendedPoint> refine_pts;
    refine_pts.reserve(chosen.size());
    for (const std::size_t i : chosen) refine_pts.push_back(pts[i]);
    const std::vector<double> refined = entropy_change_sweep(
        gp, grid, refine_pts, fantasies, samples * refine_factor, mix_seed(seed, 0x5ef1));
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      table[chosen[j]].entropy_gain = refined[j];
      table[chosen[j]].score = refined[j] / efforts.for_fidelity(pts[chosen[j]].delta);
    }
  }
  return select_from_scores(std::move(table));
}

Eigen::VectorXd best_guess(const GpModel& gp, const BoxDomain& domain) {
  const int d = domain.dim();
  const int per_axis =
      std::min(101, std::max(2, static_cast<int>(std::floor(std::pow(1e4, 1.0 / d)))));
  RepresenterGrid lattice = uniform_lattice(domain, d == 1 ? per_axis
                                                           : static_cast<int>(std::pow(
                                                                 per_axis, d)));
  auto mean_at = [&gp](const Eigen::VectorXd& theta) {
    return gp.posterior_mean_at({theta, Fidelity::physical});
  };

  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < lattice.size(); ++i) {
    const double v = mean_at(lattice.points[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  Eigen::VectorXd theta = lattice.points[best];

  // One local golden-section pass per axis, bracketed by one lattice cell.
  constexpr double kInvPhi = 0.6180339887498949;
  for (int axis = 0; axis < d; ++axis) {
    const double cell = domain.width(axis) / (per_axis - 1);
    double lo = std::max(domain.lower[axis], theta[axis] - cell);
    double hi = std::min(domain.upper[axis], theta[axis] + cell);
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    Eigen::VectorXd probe = theta;
    probe[axis] = x1;
    double f1 = mean_at(probe);
    probe[axis] = x2;
    double f2 = mean_at(probe);
    for (int it = 0; it < 20; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kInvPhi * (hi - lo);
        probe[axis] = x1;
        f1 = mean_at(probe);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kInvPhi * (hi - lo);
        probe[axis] = x2;
        f2 = mean_at(probe);
      }
    }
    const double candidate = 0.5 * (lo + hi);
    probe[axis] = candidate;
    const double refined = mean_at(probe);
    if (refined <= best_val) {
      theta[axis] = candidate;
      best_val = refined;
    }
  }
  return theta;
}

}  // namespace mfes
