#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "robreg/dataset.hpp"
#include "robreg/huber.hpp"
#include "robreg/robust_weights.hpp"

namespace robreg {

/// The quantities governing the error bounds:
///   r_o = eps sqrt(log 1/eps), r_d = sqrt(d log d / n), r_d' = sqrt(d/n).
struct RateBundle {
  double r_o = 0.0;
  double r_d = 0.0;
  double r_d_prime = 0.0;
  double sqrt_eps = 0.0;
};

RateBundle rates(Eigen::Index n, Eigen::Index d, double eps);

struct ErrorMetrics {
  double l2_error = 0.0;              // ||beta_hat - beta*||
  double prediction_rmse_clean = 0.0; // rmse of y - X beta_hat over clean rows
  double mu_error = 0.0;              // ||mu_w - mu||, NaN when no weights used
};

ErrorMetrics error_metrics(const EstimationResult& result, const OracleInstance& oracle);

/// Empirical evaluation of the four deterministic conditions along the
/// segment beta_eta = beta* + eta (beta_hat - beta*). The first three are
/// absolute weighted score sums (all rows with the noise score, corrupted
/// rows with clean residuals, corrupted rows with observed residuals); the
/// fourth is the signed monotone-difference sum whose positive curvature
/// the estimator relies on.
struct ConditionReport {
  std::vector<double> eta_grid;
  std::vector<std::array<double, 4>> lhs;  // lhs1..lhs4 per eta
  std::vector<double> delta_norm;          // ||beta_eta - beta*|| per eta
  std::vector<std::array<double, 3>> ratio_linear;  // lhs1..3 / ||delta||
  std::vector<double> ratio_quadratic;              // lhs4 / ||delta||^2

  // Fitted constants: c1 = max linear ratio, c2 = min quadratic ratio,
  // c3/c4 = worst linear/absolute deficit of lhs4 below zero. A summary
  // convention for eyeballing, not the paper's constants.
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  double r0_bound = 0.0;  // (3 c1 + c3 + sqrt(c2 c4)) / c2
};

ConditionReport check_conditions(const OracleInstance& oracle,
                                 const RobustWeightResult& rw,
                                 const Eigen::VectorXd& beta_hat,
                                 double lambda_scaled,
                                 const std::vector<double>& eta_grid);

}  // namespace robreg
