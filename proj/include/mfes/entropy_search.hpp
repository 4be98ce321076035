#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "mfes/domain.hpp"
#include "mfes/gp_model.hpp"

namespace mfes {

enum class RepresenterStrategy {
  uniform_grid,
  posterior_weighted_sample,
};

/// Tunables for the entropy-search machinery. All of these come from the
/// run config in the CLI; the defaults keep one acquisition sweep at desk
/// scale (well under a minute per iteration).
struct EsSettings {
  int representers = 200;            // R
  int pmin_samples = 1000;           // S, joint posterior samples per p_min estimate
  int fantasies = 20;                // F, fantasy outcomes per candidate
  RepresenterStrategy strategy = RepresenterStrategy::posterior_weighted_sample;
  double softmax_temperature = 0.2;  // relative to the LCB range; lower = greedier grid
  int max_representers = 400;
  std::int64_t max_sample_budget = 50'000'000;  // cap on F * S per candidate
  // Acquisition refinement: the per-fidelity score leaders are re-estimated
  // with refine_sample_factor * pmin_samples before the final argmax, so the
  // source decision is not settled by the Monte-Carlo noise floor of a
  // 2R-candidate sweep. 0 disables.
  int refine_top = 4;
  int refine_sample_factor = 8;
};

/// Finite support on which p_min is discretized. All points are implicitly
/// physical (delta = 1).
struct RepresenterGrid {
  std::vector<Eigen::VectorXd> points;

  int size() const { return static_cast<int>(points.size()); }
};

/// Monte-Carlo estimate of the distribution over the minimizer's location.
struct PminEstimate {
  RepresenterGrid grid;
  Eigen::VectorXd mass;  // nonnegative, sums to one
  double entropy = 0.0;  // nats, in [0, ln R]
};

struct CandidateScore {
  Eigen::VectorXd theta;
  Fidelity delta = Fidelity::physical;
  double entropy_gain = 0.0;  // expected decrease of H(p_min)
  double score = 0.0;         // entropy_gain / effort
};

struct AcquisitionResult {
  Eigen::VectorXd best_theta;
  Fidelity best_delta = Fidelity::physical;
  double score = 0.0;
  std::vector<CandidateScore> table;
};

/// Per-evaluation effort of each source (e.g. seconds of wall time).
struct EffortModel {
  double t_sim = 1.0;
  double t_exp = 1.0;

  void validate() const;
  double for_fidelity(Fidelity f) const { return f == Fidelity::simulation ? t_sim : t_exp; }
};

/// Build the support for p_min. uniform_grid places a lattice covering the
/// box corners; posterior_weighted_sample draws points by rejection against
/// a softmax of the negated lower confidence bound mu - 2 sigma at delta=1,
/// concentrating resolution where the minimum is likely.
RepresenterGrid build_representers(const BoxDomain& domain, int count, const GpModel& gp,
                                   RepresenterStrategy strategy, std::uint64_t seed,
                                   const EsSettings& settings = {});

/// Shannon entropy in nats with 0 ln 0 = 0.
double shannon_entropy(const Eigen::VectorXd& mass);

inline double entropy(const PminEstimate& p) { return p.entropy; }

/// Sample the joint posterior over the grid (at delta=1) `samples` times and
/// count argmin occurrences; ties resolve to the lowest index.
PminEstimate estimate_pmin(const GpModel& gp, const RepresenterGrid& grid, int samples,
                           std::uint64_t seed);

/// Expected decrease in H(p_min) from evaluating `candidate`, averaged over
/// `fantasies` outcomes drawn from the posterior predictive. Positive means
/// information is gained. The same base sample set drives the current and
/// all fantasy p_min estimates (common random numbers).
double expected_entropy_change(const GpModel& gp, const ExtendedPoint& candidate,
                               const RepresenterGrid& grid, int fantasies, int samples,
                               std::uint64_t seed,
                               std::int64_t max_sample_budget = EsSettings{}.max_sample_budget);

/// Gains for a whole candidate sweep, sharing one base sample set. Returned
/// in candidate order.
std::vector<double> entropy_change_sweep(const GpModel& gp, const RepresenterGrid& grid,
                                         std::span<const ExtendedPoint> candidates,
                                         int fantasies, int samples, std::uint64_t seed);

/// Effort-weighted argmax over a score table. Ties prefer the physical
/// source, then the lowest candidate index.
AcquisitionResult select_from_scores(std::vector<CandidateScore> table);

/// Evaluate expected entropy change per unit effort for every candidate at
/// both fidelities (or physical only) and return the argmax with the full
/// score table. `refine_top` leaders per fidelity are re-estimated with
/// `refine_factor` times the samples before the argmax. Deterministic for a
/// fixed seed.
AcquisitionResult select_next(const GpModel& gp, const std::vector<Eigen::VectorXd>& candidates,
                              const EffortModel& efforts, const RepresenterGrid& grid,
                              int fantasies, int samples, std::uint64_t seed,
                              bool include_simulation = true, int refine_top = 4,
                              int refine_factor = 8);

/// Minimizer of the posterior mean at delta=1 over a dense lattice
/// (at most 10^4 points), refined by one coordinate-wise golden-section
/// pass of 20 iterations per axis.
Eigen::VectorXd best_guess(const GpModel& gp, const BoxDomain& domain);

}  // namespace mfes
