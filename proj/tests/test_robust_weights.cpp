#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robreg/dataset.hpp"
#include "robreg/rng.hpp"
#include "robreg/robust_weights.hpp"
#include "robreg/spectral.hpp"

using namespace robreg;

namespace {

void check_weight_structure(const WeightVector& w) {
  CHECK(w.is_member());
  CHECK(w.low_weight_count() <= w.low_weight_bound());
}

Dataset from_matrix(const Eigen::MatrixXd& X) {
  Dataset ds;
  ds.X = X;
  ds.y = Eigen::VectorXd::Zero(X.rows());
  return ds;
}

}  // namespace

TEST_CASE("robust_weights: eps=0 keeps uniform weights and the sample mean") {
  GeneratorSpec spec;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(3);
  const OracleInstance inst = generate(spec, 400, 3, beta, 2);
  RobustWeightConfig cfg = RobustWeightConfig::identity(0.0);
  cfg.c_term = 3.0;
  const RobustWeightResult r = robust_weights(inst.dataset, cfg);
  // Delta_{n,0} is the single point {1/n}; whatever the filter does it must
  // stay there.
  CHECK((r.w.w.array() - 1.0 / 400.0).abs().maxCoeff() <= 1e-12);
  const Eigen::VectorXd mean = inst.dataset.X.colwise().mean();
  CHECK((r.mu_w - mean).norm() <= 1e-8);
  check_weight_structure(r.w);
}

TEST_CASE("robust_weights: one gross outlier in d=1 is suppressed") {
  Eigen::MatrixXd X(5, 1);
  X << 0, 0, 0, 0, 100;
  Dataset ds = from_matrix(X);
  RobustWeightConfig cfg = RobustWeightConfig::identity(0.2);
  cfg.seed = 5;
  const RobustWeightResult r = robust_weights(ds, cfg);
  CHECK(r.w.w[4] < 0.5 / 5.0);  // below 1/(2n)
  CHECK(std::abs(r.mu_w[0]) <= 1.0);
  check_weight_structure(r.w);
}

TEST_CASE("robust_weights: cluster attack leaves mean close, certificate passes") {
  GeneratorSpec spec;
  const Eigen::Index n = 1200, d = 6;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  const OracleInstance clean = generate(spec, n, d, beta, 7);
  ContaminationSpec cont;
  cont.eps = 0.1;
  cont.attack = AttackKind::point_cluster;
  cont.cluster_x = 100.0 * Eigen::VectorXd::Unit(d, 0);
  cont.cluster_y = 0.0;
  cont.seed = 11;
  const OracleInstance inst = contaminate(clean, cont);

  RobustWeightConfig cfg = RobustWeightConfig::identity(0.1);
  cfg.seed = 3;
  const RobustWeightResult r = robust_weights(inst.dataset, cfg);
  CHECK(r.terminated_by == Termination::certificate);
  CHECK(r.mu_w.norm() < 0.5);
  const double sample_mean_error = inst.dataset.X.colwise().mean().norm();
  CHECK(r.mu_w.norm() < 0.2 * sample_mean_error);
  check_weight_structure(r.w);

  // Certificate recheck recomputes the same lambda from scratch.
  const CertificateReport report = certificate(inst.dataset, r, cfg);
  CHECK(report.pass);
  CHECK(report.lambda_max == doctest::Approx(r.lambda_max).epsilon(1e-6));
  CHECK(report.dual_cert <= report.lambda_max + 1e-9);
}

TEST_CASE("robust_weights: min-so-far lambda trace is non-increasing") {
  GeneratorSpec spec;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(4);
  const OracleInstance clean = generate(spec, 300, 4, beta, 13);
  ContaminationSpec cont;
  cont.eps = 0.15;
  cont.attack = AttackKind::leverage;
  cont.seed = 17;
  const OracleInstance inst = contaminate(clean, cont);
  RobustWeightConfig cfg = RobustWeightConfig::identity(0.15);
  const RobustWeightResult r = robust_weights(inst.dataset, cfg);
  double best = std::numeric_limits<double>::infinity();
  for (double l : r.lambda_trace) {
    const double next = std::min(best, l);
    CHECK(next <= best + 1e-12);
    best = next;
  }
  CHECK(r.lambda_max == doctest::Approx(best).epsilon(1e-12));
  check_weight_structure(r.w);
}

TEST_CASE("robust_weights: budget exhaustion returns the best state flagged") {
  GeneratorSpec spec;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(3);
  const OracleInstance inst = generate(spec, 200, 3, beta, 19);
  RobustWeightConfig cfg = RobustWeightConfig::identity(0.1);
  cfg.c_term = 1e-6;  // unreachable threshold
  cfg.max_outer = 3;
  const RobustWeightResult r = robust_weights(inst.dataset, cfg);
  CHECK(r.terminated_by == Termination::budget);
  CHECK(r.outer_iters <= 3);
  check_weight_structure(r.w);
}

TEST_CASE("robust_weights: rejects bad inputs") {
  GeneratorSpec spec;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(2);
  const OracleInstance inst = generate(spec, 20, 2, beta, 1);
  RobustWeightConfig cfg = RobustWeightConfig::identity(0.35);
  CHECK_THROWS_AS(robust_weights(inst.dataset, cfg), InvalidInput);
}

TEST_CASE("filter_update: equal scores leave weights unchanged") {
  Eigen::MatrixXd X(4, 1);
  X << 1, 1, 1, 1;  // all points at distance 1 from nu = 0
  Dataset ds = from_matrix(X);
  const WeightVector w = uniform_weights(4, 0.2);
  Eigen::VectorXd nu(1), v(1);
  nu << 0.0;
  v << 1.0;
  const WeightVector out = filter_update(ds, w, nu, v, 0.2);
  CHECK((out.w - w.w).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("filter_update: all-zero scores return weights unchanged") {
  Eigen::MatrixXd X(3, 2);
  X << 1, 5, 1, 6, 1, 7;
  Dataset ds = from_matrix(X);
  const WeightVector w = uniform_weights(3, 0.1);
  Eigen::VectorXd nu(2), v(2);
  nu << 1.0, 0.0;
  v << 1.0, 0.0;  // every (X_i - nu) is orthogonal to v
  const WeightVector out = filter_update(ds, w, nu, v, 0.1);
  CHECK((out.w - w.w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter_update: the top-score point is zeroed in one round") {
  Eigen::MatrixXd X(5, 1);
  X << 0, 0, 0, 0, 3;
  Dataset ds = from_matrix(X);
  const WeightVector w = uniform_weights(5, 0.2);
  Eigen::VectorXd nu(1), v(1);
  nu << 0.0;
  v << 1.0;
  const WeightVector out = filter_update(ds, w, nu, v, 0.2);
  CHECK(out.w[4] == 0.0);
  CHECK(out.is_member());
}

TEST_CASE("filter_update: variance along v strictly decreases for spread scores") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd X(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) X(i, j) = rng.uniform(-2.0, 2.0);
    Dataset ds = from_matrix(X);
    const WeightVector w = uniform_weights(6, 0.25);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd v(2);
    v << rng.normal(), rng.normal();
    v.normalize();

    Eigen::VectorXd scores(6);
    for (int i = 0; i < 6; ++i) {
      const double p = (X.row(i).transpose() - nu).dot(v);
      scores[i] = p * p;
    }
    const double spread = (scores.array() - scores.mean()).abs().maxCoeff();
    if (spread < 1e-9) continue;

    const WeightVector out = filter_update(ds, w, nu, v, 0.25);
    const double before = w.w.dot(scores);
    const double after = out.w.dot(scores);
    CHECK(after < before + 1e-9);
    CHECK(after < before - 1e-12 * spread);  // strict when score variance > 0
    CHECK(out.is_member());
  }
}

TEST_CASE("certificate: inflated coordinate with uniform weights fails") {
  GeneratorSpec spec;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(3);
  OracleInstance inst = generate(spec, 100, 3, beta, 37);
  Dataset ds = inst.dataset;
  ds.X.col(0) *= 1e6;

  RobustWeightConfig cfg = RobustWeightConfig::identity(0.05);
  RobustWeightResult fake;
  fake.w = uniform_weights(100, 0.05);
  fake.nu_final = coordwise_median(ds.X);
  fake.mu_w = ds.X.transpose() * fake.w.w;
  fake.top_dir = Eigen::VectorXd::Unit(3, 0);
  const CertificateReport report = certificate(ds, fake, cfg);
  CHECK_FALSE(report.pass);
  CHECK(report.lambda_max > 1e6);
}

TEST_CASE("estimate_sigma_c_sq: picks up the per-coordinate scale") {
  Rng rng(41);
  Eigen::MatrixXd X(2000, 2);
  for (int i = 0; i < 2000; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = 3.0 * rng.normal();
  }
  const double est = estimate_sigma_c_sq(X);
  CHECK(est > 4.0);
  CHECK(est < 16.0);
}

TEST_CASE("robust_weights: bounded_cov mode certifies heavy-tailed clean data") {
  GeneratorSpec spec;
  spec.design = DesignKind::student_t;
  spec.design_df = 5;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(4);
  const OracleInstance inst = generate(spec, 2000, 4, beta, 43);
  RobustWeightConfig cfg = RobustWeightConfig::bounded(0.1);
  const RobustWeightResult r = robust_weights(inst.dataset, cfg);
  CHECK(r.terminated_by == Termination::certificate);
  CHECK(r.mu_w.norm() < 0.5);
  check_weight_structure(r.w);
}
