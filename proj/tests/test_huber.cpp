#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robreg/dataset.hpp"
#include "robreg/huber.hpp"
#include "robreg/rng.hpp"

using namespace robreg;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Dataset ds;
  ds.X = X;
  ds.y = y;
  return ds;
}

// Random well-conditioned instance for solver checks.
Dataset random_instance(Rng& rng, Eigen::Index n, Eigen::Index d, double noise) {
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = rng.normal();
  Eigen::VectorXd beta(d);
  for (Eigen::Index j = 0; j < d; ++j) beta[j] = rng.uniform(-1.0, 1.0);
  Eigen::VectorXd y = X * beta;
  for (Eigen::Index i = 0; i < n; ++i) y[i] += noise * rng.normal();
  return make_dataset(X, y);
}

}  // namespace

TEST_CASE("huber calculus: piecewise values and continuity") {
  CHECK(huber_loss(0.0) == 0.0);
  CHECK(huber_score(0.0) == 0.0);
  CHECK(huber_loss(1.0) == 0.5);
  CHECK(huber_loss(-3.0) == 2.5);
  CHECK(huber_score(-3.0) == -1.0);
  CHECK(huber_score(0.4) == 0.4);
  // Continuity at the branch point.
  CHECK(std::abs(huber_loss(1.0 - 1e-12) - huber_loss(1.0 + 1e-12)) < 1e-10);

  for (double t : {0.5, -0.5, 2.0, -2.0, 0.999, -0.999}) {
    const double h = 1e-7;
    const double fd = (huber_loss(t + h) - huber_loss(t - h)) / (2.0 * h);
    CHECK(std::abs(fd - huber_score(t)) <= 1e-6);
  }
}

TEST_CASE("residual_map: limiting forms") {
  Rng rng(3);
  Dataset ds = random_instance(rng, 12, 2, 0.5);
  const WeightVector w = uniform_weights(12, 0.0);
  const Eigen::VectorXd zero_mu = Eigen::VectorXd::Zero(2);
  const double lambda = 2.0;

  // beta = 0: residuals are just y / lambda.
  const Eigen::VectorXd r0 =
      residual_map(ds, w, zero_mu, Eigen::VectorXd::Zero(2), lambda);
  CHECK((r0 - ds.y / lambda).cwiseAbs().maxCoeff() <= 1e-14);

  // Uniform weights with zero center: ordinary residuals.
  Eigen::VectorXd beta(2);
  beta << 0.7, -0.3;
  const Eigen::VectorXd r = residual_map(ds, w, zero_mu, beta, lambda);
  const Eigen::VectorXd expected = (ds.y - ds.X * beta) / lambda;
  CHECK((r - expected).cwiseAbs().maxCoeff() <= 1e-12);

  // Naive per-element oracle with a non-trivial center and weights.
  Eigen::VectorXd v(12);
  for (int i = 0; i < 12; ++i) v[i] = rng.uniform01();
  const WeightVector wr = project_to_capped_simplex(v, 0.2);
  Eigen::VectorXd mu(2);
  mu << 0.4, -0.1;
  const Eigen::VectorXd got = residual_map(ds, wr, mu, beta, lambda);
  for (int i = 0; i < 12; ++i) {
    double fitted = 0.0;
    for (int j = 0; j < 2; ++j) fitted += 12.0 * wr.w[i] * (ds.X(i, j) - mu[j]) * beta[j];
    CHECK(std::abs(got[i] - (ds.y[i] - fitted) / lambda) <= 1e-12);
  }
}

TEST_CASE("weighted_huber_fit: interpolation case reduces to least squares") {
  Eigen::MatrixXd X(6, 1);
  X << -1.0, -0.5, 0.1, 0.4, 0.8, 1.2;
  const Eigen::VectorXd y = 2.0 * X.col(0);
  Dataset ds = make_dataset(X, y);
  HuberConfig cfg;
  cfg.lambda_scaled = 10.0;  // wide quadratic zone
  cfg.grad_tol = 1e-12;
  const WeightVector w = uniform_weights(6, 0.0);
  const EstimationResult res =
      weighted_huber_fit(ds, w, Eigen::VectorXd::Zero(1), cfg);
  CHECK(res.converged);
  CHECK(res.beta_hat[0] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("weighted_huber_fit: beats the 1e-4 grid in d=1") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Dataset ds = random_instance(rng, 7, 1, 1.0);
    HuberConfig cfg;
    cfg.lambda_scaled = 1.5;
    cfg.grad_tol = 1e-11;
    const WeightVector w = uniform_weights(7, 0.0);
    const Eigen::VectorXd mu = Eigen::VectorXd::Zero(1);
    const EstimationResult res = weighted_huber_fit(ds, w, mu, cfg);

    const auto objective = [&](double b) {
      Eigen::VectorXd beta(1);
      beta << b;
      const Eigen::VectorXd r = residual_map(ds, w, mu, beta, cfg.lambda_scaled);
      double f = 0.0;
      for (Eigen::Index i = 0; i < r.size(); ++i) f += huber_loss(r[i]);
      return f * cfg.lambda_scaled * cfg.lambda_scaled / 7.0;
    };
    const double grid_best = testoracle::grid_min_1d(objective, -5.0, 5.0, 1e-4);
    CHECK(res.objective <= grid_best + 1e-6);
  }
}

TEST_CASE("weighted_huber_fit: analytic gradient matches central differences") {
  Rng rng(11);
  Dataset ds = random_instance(rng, 15, 3, 0.8);
  Eigen::VectorXd v(15);
  for (int i = 0; i < 15; ++i) v[i] = rng.uniform01();
  const WeightVector w = project_to_capped_simplex(v, 0.15);
  Eigen::VectorXd mu(3);
  mu << 0.2, -0.4, 0.1;
  const double lambda = 1.7;

  const auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd r = residual_map(ds, w, mu, beta, lambda);
    double f = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) f += huber_loss(r[i]);
    return f * lambda * lambda / 15.0;
  };
  const auto analytic_gradient = [&](const Eigen::VectorXd& beta) {
    // -(lambda_o sqrt(n)) sum_i w_i h(R_i) (X_i - mu) with the 1/n overall
    // scale used by the objective.
    const Eigen::VectorXd r = residual_map(ds, w, mu, beta, lambda);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    for (Eigen::Index i = 0; i < 15; ++i)
      g -= lambda * w.w[i] * huber_score(r[i]) * (ds.X.row(i).transpose() - mu);
    return g;
  };

  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 10; ++trial) {
    Eigen::VectorXd beta(3);
    for (int j = 0; j < 3; ++j) beta[j] = rng.uniform(-2.0, 2.0);
    // Stay away from the kinks so the finite difference is clean.
    const Eigen::VectorXd r = residual_map(ds, w, mu, beta, lambda);
    bool near_kink = false;
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (std::abs(std::abs(r[i]) - 1.0) < 1e-4) near_kink = true;
    if (near_kink) continue;

    const Eigen::VectorXd fd = testoracle::central_difference(objective, beta, 1e-6);
    const Eigen::VectorXd an = analytic_gradient(beta);
    CHECK((fd - an).norm() <= 1e-5 * std::max(1.0, an.norm()));
    ++checked;
  }
  CHECK(checked == 10);
}

TEST_CASE("objective is convex along random segments") {
  Rng rng(13);
  Dataset ds = random_instance(rng, 20, 2, 1.0);
  const WeightVector w = uniform_weights(20, 0.0);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  const double lambda = 1.3;
  const auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd r = residual_map(ds, w, mu, beta, lambda);
    double f = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) f += huber_loss(r[i]);
    return f;
  };
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd b1(2), b2(2);
    for (int j = 0; j < 2; ++j) {
      b1[j] = rng.uniform(-3.0, 3.0);
      b2[j] = rng.uniform(-3.0, 3.0);
    }
    const double alpha = rng.uniform01();
    const Eigen::VectorXd mid = alpha * b1 + (1.0 - alpha) * b2;
    CHECK(objective(mid) <= alpha * objective(b1) + (1.0 - alpha) * objective(b2) + 1e-9);
  }
}

TEST_CASE("joint_fit: huge lambda gives theta = 0 and the least-squares beta") {
  Rng rng(17);
  Dataset ds = random_instance(rng, 25, 2, 0.5);
  const WeightVector w = uniform_weights(25, 0.0);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  HuberConfig cfg;
  cfg.lambda_scaled = 1e9;
  cfg.grad_tol = 1e-10;
  const EstimationResult res = joint_fit(ds, w, mu, cfg);
  REQUIRE(res.theta_hat.has_value());
  CHECK(res.theta_hat->cwiseAbs().maxCoeff() == 0.0);
  const EstimationResult ls = ols_fit(ds);
  CHECK((res.beta_hat - ls.beta_hat).norm() <= 1e-7);
}

TEST_CASE("joint_fit: tiny lambda produces a stationary thresholded system") {
  Rng rng(19);
  Dataset ds = random_instance(rng, 20, 2, 0.5);
  const WeightVector w = uniform_weights(20, 0.0);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  HuberConfig cfg;
  cfg.lambda_scaled = 1e-3;
  cfg.grad_tol = 1e-9;
  cfg.max_iter = 50000;
  const EstimationResult res = joint_fit(ds, w, mu, cfg);
  REQUIRE(res.theta_hat.has_value());
  // Stationarity in beta: normal equations of the thresholded response.
  const double root_n = std::sqrt(20.0);
  const Eigen::VectorXd adjusted = ds.y - root_n * (*res.theta_hat);
  const Eigen::VectorXd grad = ds.X.transpose() * (adjusted - ds.X * res.beta_hat);
  CHECK(grad.norm() <= 1e-6 * (1.0 + adjusted.norm()));
  // Most residuals exceed the threshold, so theta absorbs them.
  CHECK(res.theta_hat->cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("joint_fit agrees with weighted_huber_fit (She-Owen equivalence)") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Dataset ds = random_instance(rng, 30, 3, 1.0);
    Eigen::VectorXd v(30);
    for (int i = 0; i < 30; ++i) v[i] = rng.uniform01();
    const WeightVector w = project_to_capped_simplex(v, 0.1);
    Eigen::VectorXd mu(3);
    for (int j = 0; j < 3; ++j) mu[j] = rng.uniform(-0.5, 0.5);
    HuberConfig cfg;
    cfg.lambda_scaled = 1.2;
    cfg.grad_tol = 1e-12;
    cfg.step = StepRule::lbfgs;
    cfg.max_iter = 50000;
    const EstimationResult direct = weighted_huber_fit(ds, w, mu, cfg);
    const EstimationResult joint = joint_fit(ds, w, mu, cfg);
    CHECK((direct.beta_hat - joint.beta_hat).norm() <= 1e-6);
  }
}

TEST_CASE("solvers: both step rules satisfy the same contract") {
  Rng rng(29);
  Dataset ds = random_instance(rng, 40, 4, 1.0);
  const WeightVector w = uniform_weights(40, 0.0);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(4);
  HuberConfig gd;
  gd.lambda_scaled = 1.5;
  gd.grad_tol = 1e-10;
  HuberConfig lb = gd;
  lb.step = StepRule::lbfgs;
  const EstimationResult rgd = weighted_huber_fit(ds, w, mu, gd);
  const EstimationResult rlb = weighted_huber_fit(ds, w, mu, lb);
  CHECK(rgd.converged);
  CHECK(rlb.converged);
  CHECK((rgd.beta_hat - rlb.beta_hat).norm() <= 1e-6);
}

TEST_CASE("two_step_estimate: exact recovery on a noiseless line") {
  Eigen::MatrixXd X(2, 1);
  X << 1.0, -1.0;
  const Eigen::VectorXd y = 0.5 * X.col(0);
  Dataset ds = make_dataset(X, y);
  HuberConfig cfg;
  cfg.lambda_scaled = 100.0;
  cfg.grad_tol = 1e-13;
  RobustWeightConfig rw_cfg = RobustWeightConfig::identity(0.0);
  const EstimationResult res = two_step_estimate(ds, 0.0, rw_cfg, cfg);
  CHECK(res.beta_hat[0] == doctest::Approx(0.5).epsilon(1e-9));
  REQUIRE(res.robust_stage.has_value());
}

TEST_CASE("ols_fit: closed-form slope through the origin") {
  // Slope-only normal equations: beta = sum(x y) / sum(x^2).
  Eigen::MatrixXd X(3, 1);
  X << 1.0, 2.0, 3.0;
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.3;
  CHECK(ols_fit(make_dataset(X, y)).beta_hat[0] ==
        doctest::Approx(14.9 / 14.0).epsilon(1e-12));

  Eigen::VectorXd y2(3);
  y2 << 1.0, 2.0, 3.5;
  CHECK(ols_fit(make_dataset(X, y2)).beta_hat[0] ==
        doctest::Approx(15.5 / 14.0).epsilon(1e-12));  // = 1.10714...
}

TEST_CASE("ols_fit and plain_huber_fit recover exact linear data") {
  Rng rng(31);
  Eigen::MatrixXd X(12, 2);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 2; ++j) X(i, j) = rng.normal();
  Eigen::VectorXd beta(2);
  beta << 1.5, -0.25;
  Dataset ds = make_dataset(X, (X * beta).eval());
  CHECK((ols_fit(ds).beta_hat - beta).norm() <= 1e-8);
  HuberConfig cfg;
  cfg.lambda_scaled = 50.0;
  cfg.grad_tol = 1e-12;
  CHECK((plain_huber_fit(ds, cfg).beta_hat - beta).norm() <= 1e-6);
}

TEST_CASE("plain_huber_fit equals the weighted path under uniform weights") {
  Rng rng(37);
  Dataset ds = random_instance(rng, 30, 3, 1.0);
  HuberConfig cfg;
  cfg.lambda_scaled = 2.0;
  cfg.grad_tol = 1e-12;
  const EstimationResult plain = plain_huber_fit(ds, cfg);
  const Eigen::VectorXd mean = ds.X.colwise().mean();
  const EstimationResult weighted =
      weighted_huber_fit(ds, uniform_weights(30, 0.0), mean, cfg);
  CHECK((plain.beta_hat - weighted.beta_hat).norm() <= 1e-10);
}

TEST_CASE("scale consistency: inside the quadratic zone the fit is least squares") {
  Rng rng(41);
  Dataset ds = random_instance(rng, 50, 2, 0.05);
  const WeightVector w = uniform_weights(50, 0.0);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  HuberConfig cfg;
  cfg.lambda_scaled = 1000.0;  // every residual far inside |R| <= 1
  cfg.grad_tol = 1e-13;
  cfg.step = StepRule::lbfgs;
  const EstimationResult res = weighted_huber_fit(ds, w, mu, cfg);
  const EstimationResult ls = ols_fit(ds);
  CHECK((res.beta_hat - ls.beta_hat).norm() <= 1e-8);
}

TEST_CASE("default_lambda_scaled: positive and robust to gross rows") {
  Rng rng(43);
  Dataset ds = random_instance(rng, 100, 2, 1.0);
  const double base = default_lambda_scaled(ds);
  CHECK(base > 0.0);
  Dataset spoiled = ds;
  for (int i = 0; i < 10; ++i) spoiled.y[i] += 1e6;
  const double spoiled_lambda = default_lambda_scaled(spoiled);
  CHECK(spoiled_lambda < 10.0 * base + 10.0);
}
