#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mfes/errors.hpp"
#include "mfes/gp_model.hpp"
#include "mfes/kernel.hpp"

#include "test_helpers.hpp"

using namespace mfes;
using mfes::testing::study_kernel;
using mfes::testing::study_mean;
using mfes::testing::study_model;
using mfes::testing::study_noise;
using mfes::testing::theta1;

TEST_CASE("kernel: error component is off unless both points are physical") {
  const CompositeKernel k = study_kernel();
  const Eigen::VectorXd t = theta1(0.37);
  const ExtendedPoint sim{t, Fidelity::simulation};
  const ExtendedPoint phys{t, Fidelity::physical};

  CHECK(kernel_eval(k, sim, phys) == k.sim(t, t));  // exactly k_sim at zero lag
  CHECK(kernel_eval(k, sim, sim) == k.sim(t, t));
  CHECK(kernel_eval(k, phys, phys) == doctest::Approx(1.6e-5 + 3.84e-4).epsilon(1e-14));
  CHECK(kernel_eval(k, phys, phys) == doctest::Approx(4.0e-4).epsilon(1e-12));
}

TEST_CASE("kernel: symmetric in its arguments") {
  const CompositeKernel k = study_kernel();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const ExtendedPoint a{theta1(unif(rng)), i % 2 ? Fidelity::physical : Fidelity::simulation};
    const ExtendedPoint b{theta1(unif(rng)), i % 3 ? Fidelity::physical : Fidelity::simulation};
    CHECK(kernel_eval(k, a, b) == kernel_eval(k, b, a));
  }
}

TEST_CASE("kernel: dimension mismatch is an invalid argument") {
  const CompositeKernel k = study_kernel(2);
  const ExtendedPoint a{theta1(0.1), Fidelity::physical};
  const ExtendedPoint b{mfes::testing::theta2(0.1, 0.2), Fidelity::physical};
  CHECK_THROWS_AS(kernel_eval(k, a, b), std::invalid_argument);
}

TEST_CASE("posterior: prior returned with zero observations") {
  const GpModel gp = study_model();
  for (double t : {0.0, 0.31, 0.99}) {
    const auto [mu_phys, var_phys] = gp.posterior_at({theta1(t), Fidelity::physical});
    CHECK(mu_phys == doctest::Approx(0.06).epsilon(1e-14));
    CHECK(var_phys == doctest::Approx(4.0e-4).epsilon(1e-12));
    const auto [mu_sim, var_sim] = gp.posterior_at({theta1(t), Fidelity::simulation});
    CHECK(mu_sim == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(var_sim == doctest::Approx(1.6e-5).epsilon(1e-12));
  }
}

TEST_CASE("posterior: noise-free observation is interpolated") {
  NoiseModel quiet{0.0, 0.0};
  GpModel gp(study_kernel(), study_mean(), quiet);
  const ExtendedPoint at{theta1(0.4), Fidelity::physical};
  gp = gp.add_observation(at, 0.017);
  const auto [mu, var] = gp.posterior_at(at);
  CHECK(mu == doctest::Approx(0.017).epsilon(1e-6));
  CHECK(var <= 1e-10);
}

TEST_CASE("posterior: two-observation case matches the direct 2x2 oracle") {
  // One simulation at 0.2, one physical at 0.8, query (0.5, physical);
  // unit length scales and the study constants.
  GpModel gp = study_model();
  gp = gp.add_observation({theta1(0.2), Fidelity::simulation}, 0.03);
  gp = gp.add_observation({theta1(0.8), Fidelity::physical}, 0.05);
  const ExtendedPoint query{theta1(0.5), Fidelity::physical};
  const auto [mu, var] = gp.posterior_at(query);

  // Independent oracle: form K_2 explicitly and invert it in closed form.
  const CompositeKernel k = study_kernel();
  const NoiseModel noise = study_noise();
  const MeanModel mean = study_mean();
  const ExtendedPoint a1{theta1(0.2), Fidelity::simulation};
  const ExtendedPoint a2{theta1(0.8), Fidelity::physical};
  const double k11 = k(a1, a1) + noise.var_for(a1.delta);
  const double k22 = k(a2, a2) + noise.var_for(a2.delta);
  const double k12 = k(a1, a2);
  const double det = k11 * k22 - k12 * k12;
  const double y1 = 0.03 - mean.value_at(a1);
  const double y2 = 0.05 - mean.value_at(a2);
  const double kq1 = k(query, a1);
  const double kq2 = k(query, a2);
  // K^{-1} y and K^{-1} k_q via the adjugate.
  const double w1 = (k22 * y1 - k12 * y2) / det;
  const double w2 = (-k12 * y1 + k11 * y2) / det;
  const double oracle_mu = mean.value_at(query) + kq1 * w1 + kq2 * w2;
  const double v1 = (k22 * kq1 - k12 * kq2) / det;
  const double v2 = (-k12 * kq1 + k11 * kq2) / det;
  const double oracle_var = k(query, query) - (kq1 * v1 + kq2 * v2);

  CHECK(mu == doctest::Approx(oracle_mu).epsilon(1e-10));
  CHECK(var == doctest::Approx(oracle_var).epsilon(1e-8));
  // Frozen values from the same formulas evaluated independently.
  CHECK(mu == doctest::Approx(0.0491945195602976).epsilon(1e-9));
  CHECK(var == doctest::Approx(3.1565377289981e-05).epsilon(1e-6));
}

TEST_CASE("add_observation: rejects non-finite values") {
  const GpModel gp = study_model();
  CHECK_THROWS_AS(static_cast<void>(gp.add_observation(
                      {theta1(0.5), Fidelity::physical},
                      std::numeric_limits<double>::quiet_NaN())),
                  std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(gp.add_observation(
                      {theta1(0.5), Fidelity::physical},
                      std::numeric_limits<double>::infinity())),
                  std::invalid_argument);
}

TEST_CASE("add_observation: simulations leave the error variance untouched") {
  // After any simulation at theta, var(theta,1) = var(theta,0) + k_err(theta,theta).
  GpModel gp = study_model();
  gp = gp.add_observation({theta1(0.3), Fidelity::simulation}, 0.035);
  gp = gp.add_observation({theta1(0.6), Fidelity::simulation}, 0.041);
  const CompositeKernel k = study_kernel();
  for (double t : {0.0, 0.3, 0.45, 0.6, 1.0}) {
    const auto [mu1, var1] = gp.posterior_at({theta1(t), Fidelity::physical});
    const auto [mu0, var0] = gp.posterior_at({theta1(t), Fidelity::simulation});
    CHECK(var1 == doctest::Approx(var0 + k.err(theta1(t), theta1(t))).epsilon(1e-8));
    CHECK(mu1 == doctest::Approx(mu0 + 0.02).epsilon(1e-10));
  }
}

TEST_CASE("add_observation: variance never grows at the observed point") {
  GpModel gp = study_model();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const ExtendedPoint at{theta1(unif(rng)),
                           i % 2 ? Fidelity::physical : Fidelity::simulation};
    const double before = gp.posterior_at(at).second;
    gp = gp.add_observation(at, 0.03 + 0.01 * unif(rng));
    CHECK(gp.posterior_at(at).second <= before + 1e-12);
  }
}

TEST_CASE("add_observation: 50 random observations stay well conditioned") {
  GpModel gp = study_model();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    gp = gp.add_observation({theta1(unif(rng)),
                             unif(rng) < 0.5 ? Fidelity::simulation : Fidelity::physical},
                            0.02 + 0.04 * unif(rng));
  }
  CHECK(gp.size() == 50);
  const auto [mu, var] = gp.posterior_at({theta1(0.5), Fidelity::physical});
  CHECK(std::isfinite(mu));
  CHECK(var >= 0.0);
}

TEST_CASE("property: random Gram matrices are PSD") {
  const CompositeKernel k = study_kernel(2, 0.7);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    std::vector<ExtendedPoint> pts;
    for (int i = 0; i < n; ++i) {
      pts.push_back({mfes::testing::theta2(unif(rng), unif(rng)),
                     rng() % 2 ? Fidelity::physical : Fidelity::simulation});
    }
    Eigen::MatrixXd gram(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) gram(i, j) = k(pts[i], pts[j]);
    }
    const Eigen::VectorXd eigs = gram.selfadjointView<Eigen::Lower>().eigenvalues();
    CHECK(eigs.minCoeff() >= -1e-8 * eigs.maxCoeff());
  }
}

TEST_CASE("property: simulations only partially reduce physical uncertainty") {
  const CompositeKernel k = study_kernel();
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    GpModel gp = study_model();
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      gp = gp.add_observation({theta1(unif(rng)), Fidelity::simulation},
                              0.03 + 0.01 * unif(rng));
    }
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      const double var1 = gp.posterior_at({theta1(t), Fidelity::physical}).second;
      CHECK(var1 >= k.err(theta1(t), theta1(t)) - 1e-8);
    }
  }
}

TEST_CASE("property: one physical observation hits the scalar-GP variance floor") {
  GpModel gp = study_model();
  const ExtendedPoint at{theta1(0.42), Fidelity::physical};
  const double prior_var = gp.posterior_at(at).second;
  const double eta2 = study_noise().var_for(Fidelity::physical);
  gp = gp.add_observation(at, 0.05);
  const double posterior_var = gp.posterior_at(at).second;
  const double scalar_bound = prior_var * eta2 / (prior_var + eta2);
  CHECK(posterior_var <= scalar_bound + 1e-10);
}

TEST_CASE("property: posterior is exchangeable under observation permutations") {
  std::vector<Observation> obs = {
      {{theta1(0.1), Fidelity::simulation}, 0.031},
      {{theta1(0.5), Fidelity::physical}, 0.052},
      {{theta1(0.8), Fidelity::simulation}, 0.029},
      {{theta1(0.35), Fidelity::physical}, 0.044},
  };
  const GpModel gp_a(study_kernel(), study_mean(), study_noise(), obs);
  std::reverse(obs.begin(), obs.end());
  std::swap(obs[1], obs[2]);
  const GpModel gp_b(study_kernel(), study_mean(), study_noise(), obs);
  for (double t = 0.0; t <= 1.0; t += 0.1) {
    const auto [mu_a, var_a] = gp_a.posterior_at({theta1(t), Fidelity::physical});
    const auto [mu_b, var_b] = gp_b.posterior_at({theta1(t), Fidelity::physical});
    CHECK(mu_a == doctest::Approx(mu_b).epsilon(1e-10));
    CHECK(var_a == doctest::Approx(var_b).epsilon(1e-10));
  }
}

TEST_CASE("cholesky_with_jitter: reports the jitter tried when it gives up") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(1, 1) = -1.0;  // genuinely indefinite
  try {
    cholesky_with_jitter(bad, 1.0);
    FAIL("expected ConditioningError");
  } catch (const ConditioningError& err) {
    CHECK(err.jitter_used() == doctest::Approx(1e-4).epsilon(1e-9));
  }
}

TEST_CASE("invalid kernel specs are rejected at model construction") {
  CompositeKernel k = study_kernel();
  k.sim.length_scales[0] = -0.5;
  CHECK_THROWS_AS(GpModel(k, study_mean(), study_noise()), std::invalid_argument);

  CompositeKernel k2 = study_kernel();
  k2.err.output_variance = 0.0;
  CHECK_THROWS_AS(GpModel(k2, study_mean(), study_noise()), std::invalid_argument);

  NoiseModel bad_noise{-1e-5, 2.08e-4};
  CHECK_THROWS_AS(GpModel(study_kernel(), study_mean(), bad_noise), std::invalid_argument);
}

TEST_CASE("property: joint posterior covariance is symmetric PSD") {
  GpModel gp = study_model();
  gp = gp.add_observation({theta1(0.25), Fidelity::simulation}, 0.03);
  gp = gp.add_observation({theta1(0.75), Fidelity::physical}, 0.05);
  std::vector<ExtendedPoint> query;
  for (double t = 0.0; t <= 1.0; t += 0.125) query.push_back({theta1(t), Fidelity::physical});
  const auto [mu, cov] = gp.posterior(query);
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  const Eigen::VectorXd eigs = cov.selfadjointView<Eigen::Lower>().eigenvalues();
  CHECK(eigs.minCoeff() >= -1e-10 * std::max(eigs.maxCoeff(), 1e-30));
}
