#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mfes/entropy_search.hpp"
#include "mfes/errors.hpp"
#include "mfes/gp_model.hpp"

#include "test_helpers.hpp"

using namespace mfes;
using mfes::testing::study_kernel;
using mfes::testing::study_mean;
using mfes::testing::study_model;
using mfes::testing::study_noise;
using mfes::testing::theta1;
using mfes::testing::theta2;

namespace {

BoxDomain unit_box() { return BoxDomain(theta1(0.0), theta1(1.0)); }

RepresenterGrid grid_of(std::initializer_list<double> xs) {
  RepresenterGrid grid;
  for (double x : xs) grid.points.push_back(theta1(x));
  return grid;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

TEST_CASE("build_representers: 1-D uniform lattice hits the exact nodes") {
  const GpModel gp = study_model();
  const RepresenterGrid grid =
      build_representers(unit_box(), 5, gp, RepresenterStrategy::uniform_grid, 0);
  REQUIRE(grid.size() == 5);
  const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 5; ++i) CHECK(grid.points[i][0] == doctest::Approx(expected[i]).epsilon(1e-15));
}

TEST_CASE("build_representers: 2-D lattice covers the box corners") {
  const BoxDomain box(theta2(-3.0, 1.0), theta2(2.0, 5.0));
  const GpModel gp = study_model(2);
  const RepresenterGrid grid =
      build_representers(box, 100, gp, RepresenterStrategy::uniform_grid, 0);
  REQUIRE(grid.size() == 100);
  int corners = 0;
  for (const auto& p : grid.points) {
    const bool edge0 = p[0] == -3.0 || p[0] == 2.0;
    const bool edge1 = p[1] == 1.0 || p[1] == 5.0;
    corners += (edge0 && edge1) ? 1 : 0;
    CHECK(box.contains(p));
  }
  CHECK(corners == 4);
}

TEST_CASE("build_representers: size limits are enforced") {
  const GpModel gp = study_model();
  CHECK_THROWS_AS(build_representers(unit_box(), 1, gp, RepresenterStrategy::uniform_grid, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_representers(unit_box(), 401, gp, RepresenterStrategy::uniform_grid, 0),
                  std::invalid_argument);
}

TEST_CASE("build_representers: weighted sampling concentrates where the LCB dips") {
  // Condition the model to dip sharply at 0.3 (short length scales keep the
  // dip local), then check the documented softmax density concentrates there.
  GpModel gp = study_model(1, 0.08);
  gp = gp.add_observation({theta1(0.3), Fidelity::physical}, 0.005);
  gp = gp.add_observation({theta1(0.28), Fidelity::physical}, 0.006);

  int inside = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RepresenterGrid grid = build_representers(
        unit_box(), 50, gp, RepresenterStrategy::posterior_weighted_sample, seed);
    REQUIRE(grid.size() == 50);
    for (const auto& p : grid.points) {
      total += 1;
      inside += std::abs(p[0] - 0.3) <= 0.2 ? 1 : 0;
    }
  }
  CHECK(static_cast<double>(inside) / total >= 0.6);
}

TEST_CASE("estimate_pmin: symmetric prior splits the mass evenly") {
  const GpModel gp = study_model();
  const PminEstimate est = estimate_pmin(gp, grid_of({0.25, 0.75}), 10000, 42);
  CHECK(est.mass[0] == doctest::Approx(0.5).epsilon(0.04));  // +-0.02 absolute
  CHECK(std::abs(est.mass[0] - 0.5) <= 0.02);
  CHECK(std::abs(est.mass.sum() - 1.0) <= 1e-12);
}

TEST_CASE("estimate_pmin: a dominated point takes essentially all the mass") {
  GpModel gp = study_model(1, 0.05);
  // Pull one representer's posterior ten total-sigmas below everything else.
  gp = gp.add_observation({theta1(0.5), Fidelity::physical}, 0.06 - 10.0 * 0.02);
  const PminEstimate est = estimate_pmin(gp, grid_of({0.1, 0.5, 0.9}), 20000, 7);
  CHECK(est.mass[1] >= 0.999);
}

TEST_CASE("estimate_pmin: single sample gives a one-hot mass and zero entropy") {
  const GpModel gp = study_model();
  const PminEstimate est = estimate_pmin(gp, grid_of({0.2, 0.5, 0.8}), 1, 3);
  CHECK(est.mass.maxCoeff() == 1.0);
  CHECK(est.mass.sum() == 1.0);
  CHECK(est.entropy == 0.0);
}

TEST_CASE("estimate_pmin: identical seeds reproduce the mass bitwise") {
  GpModel gp = study_model();
  gp = gp.add_observation({theta1(0.4), Fidelity::simulation}, 0.03);
  const RepresenterGrid grid = grid_of({0.0, 0.25, 0.5, 0.75, 1.0});
  const PminEstimate a = estimate_pmin(gp, grid, 500, 1234);
  const PminEstimate b = estimate_pmin(gp, grid, 500, 1234);
  CHECK(a.mass == b.mass);
  CHECK(a.entropy == b.entropy);
  const PminEstimate c = estimate_pmin(gp, grid, 500, 1235);
  CHECK(a.mass != c.mass);  // different stream actually moves the estimate
}

TEST_CASE("shannon_entropy: reference values") {
  CHECK(shannon_entropy(Eigen::VectorXd::Constant(16, 1.0 / 16.0)) ==
        doctest::Approx(std::log(16.0)).epsilon(1e-12));
  Eigen::VectorXd onehot = Eigen::VectorXd::Zero(5);
  onehot[2] = 1.0;
  CHECK(shannon_entropy(onehot) == 0.0);
  Eigen::VectorXd p(2);
  p << 0.75, 0.25;
  CHECK(shannon_entropy(p) == doctest::Approx(0.562335144618808).epsilon(1e-12));
}

TEST_CASE("pmin invariants: normalization, nonnegativity, entropy bounds") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  GpModel gp = study_model();
  for (int trial = 0; trial < 12; ++trial) {
    if (trial % 3 == 0) {
      gp = gp.add_observation({theta1(unif(rng)),
                               trial % 2 ? Fidelity::physical : Fidelity::simulation},
                              0.02 + 0.04 * unif(rng));
    }
    const RepresenterGrid grid = build_representers(
        unit_box(), 16, gp, RepresenterStrategy::uniform_grid, trial);
    const PminEstimate est = estimate_pmin(gp, grid, 200 + trial * 37, 100 + trial);
    CHECK(est.mass.minCoeff() >= 0.0);
    CHECK(std::abs(est.mass.sum() - 1.0) <= 1e-12);
    CHECK(est.entropy >= 0.0);
    CHECK(est.entropy <= std::log(static_cast<double>(grid.size())) + 1e-12);
  }
}

TEST_CASE("expected_entropy_change: repeating a noise-free observation is uninformative") {
  NoiseModel quiet{0.0, 0.0};
  GpModel gp(study_kernel(1, 0.25), study_mean(), quiet);
  const ExtendedPoint seen{theta1(0.5), Fidelity::physical};
  gp = gp.add_observation(seen, 0.02);
  gp = gp.add_observation({theta1(0.1), Fidelity::physical}, 0.05);
  const RepresenterGrid grid = grid_of({0.0, 0.25, 0.5, 0.75, 1.0});
  const double gain = expected_entropy_change(gp, seen, grid, 16, 2000, 11);
  CHECK(std::abs(gain) <= 1e-6);
}

TEST_CASE("expected_entropy_change: direct observation beats simulation on the prior") {
  const GpModel gp = study_model();
  const RepresenterGrid grid = grid_of({0.0, 0.25, 0.5, 0.75, 1.0});
  double diff_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<ExtendedPoint> pair = {{theta1(0.5), Fidelity::simulation},
                                             {theta1(0.5), Fidelity::physical}};
    const std::vector<double> gains = entropy_change_sweep(gp, grid, pair, 20, 1500, seed);
    diff_sum += gains[1] - gains[0];
  }
  CHECK(diff_sum / 10.0 >= -0.02);
}

TEST_CASE("expected_entropy_change: matches a brute-force two-representer oracle") {
  // Hand-built posterior: one physical observation, two representers. The
  // oracle loops over many fantasy outcomes, conditions the 2-point Gaussian
  // in closed form and uses the exact two-point argmin probability
  // P(x0 < x1) = Phi((mu1 - mu0) / sqrt(v00 + v11 - 2 v01)).
  GpModel gp = study_model(1, 0.3);
  gp = gp.add_observation({theta1(0.2), Fidelity::physical}, 0.045);
  const RepresenterGrid grid = grid_of({0.3, 0.8});
  const ExtendedPoint candidate{theta1(0.55), Fidelity::physical};

  std::vector<ExtendedPoint> joint = {{theta1(0.3), Fidelity::physical},
                                      {theta1(0.8), Fidelity::physical},
                                      candidate};
  const auto [mu, cov] = gp.posterior(joint);
  const double eta2 = study_noise().var_for(Fidelity::physical);
  const double v = cov(2, 2) + eta2;

  auto two_point_entropy = [&](double m0, double m1, double v00, double v11, double v01) {
    const double spread = std::sqrt(std::max(v00 + v11 - 2.0 * v01, 1e-300));
    const double p0 = normal_cdf((m1 - m0) / spread);
    Eigen::VectorXd mass(2);
    mass << p0, 1.0 - p0;
    return shannon_entropy(mass);
  };

  const double h_now = two_point_entropy(mu[0], mu[1], cov(0, 0), cov(1, 1), cov(0, 1));
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n_fantasy = 100000;
  double h_fantasy = 0.0;
  for (int f = 0; f < n_fantasy; ++f) {
    const double y = mu[2] + std::sqrt(v) * normal(rng);
    const double m0 = mu[0] + cov(0, 2) * (y - mu[2]) / v;
    const double m1 = mu[1] + cov(1, 2) * (y - mu[2]) / v;
    const double v00 = cov(0, 0) - cov(0, 2) * cov(0, 2) / v;
    const double v11 = cov(1, 1) - cov(1, 2) * cov(1, 2) / v;
    const double v01 = cov(0, 1) - cov(0, 2) * cov(1, 2) / v;
    h_fantasy += two_point_entropy(m0, m1, v00, v11, v01);
  }
  const double oracle = h_now - h_fantasy / n_fantasy;

  const double estimate = expected_entropy_change(gp, candidate, grid, 400, 4000, 5);
  CHECK(estimate == doctest::Approx(oracle).epsilon(0.25));
  CHECK(std::abs(estimate - oracle) <= 0.02);
}

TEST_CASE("expected_entropy_change: budget cap rejects oversized sweeps") {
  const GpModel gp = study_model();
  const RepresenterGrid grid = grid_of({0.0, 1.0});
  CHECK_THROWS_AS(expected_entropy_change(gp, {theta1(0.5), Fidelity::physical}, grid, 1000,
                                          1000000, 0, /*max_sample_budget=*/1000000),
                  std::invalid_argument);
}

TEST_CASE("select_from_scores: tie prefers the physical source") {
  std::vector<CandidateScore> table(2);
  table[0] = {theta1(0.4), Fidelity::simulation, 0.3, 0.3};
  table[1] = {theta1(0.4), Fidelity::physical, 0.3, 0.3};
  const AcquisitionResult result = select_from_scores(table);
  CHECK(result.best_delta == Fidelity::physical);
  CHECK(result.score == 0.3);
}

TEST_CASE("select_from_scores: equal gains with 30x cheaper simulation pick delta=0") {
  const EffortModel efforts{1.0, 30.0};
  std::vector<CandidateScore> table(2);
  const double gain = 0.3;
  table[0] = {theta1(0.4), Fidelity::simulation, gain, gain / efforts.t_sim};
  table[1] = {theta1(0.4), Fidelity::physical, gain, gain / efforts.t_exp};
  const AcquisitionResult result = select_from_scores(table);
  CHECK(result.best_delta == Fidelity::simulation);
}

TEST_CASE("select_from_scores: score ties across candidates keep the lowest index") {
  std::vector<CandidateScore> table(3);
  table[0] = {theta1(0.1), Fidelity::physical, 0.2, 0.2};
  table[1] = {theta1(0.5), Fidelity::physical, 0.2, 0.2};
  table[2] = {theta1(0.9), Fidelity::physical, 0.1, 0.1};
  const AcquisitionResult result = select_from_scores(table);
  CHECK(result.best_theta[0] == 0.1);
}

TEST_CASE("select_next: returned score is the table maximum, deterministically") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    GpModel gp = study_model();
    const int n_obs = static_cast<int>(rng() % 4);
    for (int i = 0; i < n_obs; ++i) {
      gp = gp.add_observation({theta1(unif(rng)),
                               rng() % 2 ? Fidelity::physical : Fidelity::simulation},
                              0.02 + 0.04 * unif(rng));
    }
    const RepresenterGrid grid = build_representers(
        unit_box(), 8, gp, RepresenterStrategy::uniform_grid, trial);
    const EffortModel efforts{1.0, 3.0};
    const AcquisitionResult result =
        select_next(gp, grid.points, efforts, grid, 4, 64, trial * 7 + 1);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& entry : result.table) best = std::max(best, entry.score);
    CHECK(result.score == best);
    const AcquisitionResult again =
        select_next(gp, grid.points, efforts, grid, 4, 64, trial * 7 + 1);
    CHECK(again.best_theta == result.best_theta);
    CHECK(again.best_delta == result.best_delta);
    CHECK(again.score == result.score);
  }
}

TEST_CASE("select_next: with equal efforts the physical source dominates the prior") {
  const GpModel gp = study_model();
  int physical_picks = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RepresenterGrid grid = build_representers(
        unit_box(), 12, gp, RepresenterStrategy::uniform_grid, seed);
    const AcquisitionResult result =
        select_next(gp, grid.points, EffortModel{1.0, 1.0}, grid, 12, 600, seed);
    physical_picks += result.best_delta == Fidelity::physical ? 1 : 0;
  }
  CHECK(physical_picks >= 19);  // >= 95% of 20 trials
}

TEST_CASE("select_next: monotone information on a fixed 1-D toy") {
  GpModel gp = study_model(1, 0.2);
  gp = gp.add_observation({theta1(0.3), Fidelity::physical}, 0.035);
  gp = gp.add_observation({theta1(0.7), Fidelity::simulation}, 0.02);
  const RepresenterGrid grid = grid_of({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  std::vector<double> best_gains;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const AcquisitionResult result =
        select_next(gp, grid.points, EffortModel{1.0, 1.0}, grid, 10, 500, seed);
    double best_gain = -std::numeric_limits<double>::infinity();
    for (const auto& entry : result.table) best_gain = std::max(best_gain, entry.entropy_gain);
    best_gains.push_back(best_gain);
  }
  double mean = 0.0;
  for (double g : best_gains) mean += g;
  mean /= best_gains.size();
  double ss = 0.0;
  for (double g : best_gains) ss += (g - mean) * (g - mean);
  const double se = std::sqrt(ss / (best_gains.size() - 1) / best_gains.size());
  CHECK(mean >= -3.0 * se);
}

TEST_CASE("best_guess: finds a single deep observation within one lattice cell") {
  NoiseModel quiet{0.0, 0.0};
  GpModel gp(study_kernel(1, 0.15), study_mean(), quiet);
  gp = gp.add_observation({theta1(0.637), Fidelity::physical}, 0.005);
  const Eigen::VectorXd bg = best_guess(gp, unit_box());
  CHECK(std::abs(bg[0] - 0.637) <= 0.01);
}

TEST_CASE("best_guess: symmetric two-dip posterior lands on one of the dips") {
  NoiseModel quiet{0.0, 0.0};
  GpModel gp(study_kernel(1, 0.1), study_mean(), quiet);
  gp = gp.add_observation({theta1(0.3), Fidelity::physical}, 0.01);
  gp = gp.add_observation({theta1(0.7), Fidelity::physical}, 0.01);
  const Eigen::VectorXd bg = best_guess(gp, unit_box());
  const bool near_either = std::abs(bg[0] - 0.3) <= 0.02 || std::abs(bg[0] - 0.7) <= 0.02;
  CHECK(near_either);
}

TEST_CASE("best_guess: matches a dense-grid oracle on a smooth posterior") {
  GpModel gp = study_model(1, 0.35);
  gp = gp.add_observation({theta1(0.1), Fidelity::physical}, 0.050);
  gp = gp.add_observation({theta1(0.35), Fidelity::physical}, 0.034);
  gp = gp.add_observation({theta1(0.55), Fidelity::physical}, 0.028);
  gp = gp.add_observation({theta1(0.75), Fidelity::physical}, 0.033);
  gp = gp.add_observation({theta1(0.95), Fidelity::physical}, 0.048);
  const Eigen::VectorXd bg = best_guess(gp, unit_box());

  double oracle = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  const int n = 1000000;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double v = gp.posterior_mean_at({theta1(t), Fidelity::physical});
    if (v < best_val) {
      best_val = v;
      oracle = t;
    }
  }
  CHECK(std::abs(bg[0] - oracle) <= 1e-3);
}
