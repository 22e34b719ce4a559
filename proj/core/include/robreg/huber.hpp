#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "robreg/capped_simplex.hpp"
#include "robreg/dataset.hpp"
#include "robreg/robust_weights.hpp"

namespace robreg {

/// H(t) = t^2/2 for |t| <= 1, |t| - 1/2 beyond.
double huber_loss(double t);
/// h(t) = dH/dt = clip(t, -1, 1).
double huber_score(double t);

enum class StepRule { backtracking_gd, lbfgs };

std::string step_rule_name(StepRule rule);
StepRule step_rule_from_name(const std::string& name);

struct HuberConfig {
  /// Threshold in residual units (the scaled lambda_o * sqrt(n)). Zero
  /// means plug-in: 1.345 times the robust residual scale (1.4826 * median
  /// absolute residual) of a trimmed least-squares pass.
  double lambda_scaled = 0.0;
  double grad_tol = 1e-8;
  int max_iter = 20000;
  StepRule step = StepRule::backtracking_gd;
  Eigen::VectorXd beta0;  // empty means zero

  void validate() const;
};

struct EstimationResult {
  Eigen::VectorXd beta_hat;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
  bool converged = false;
  double lambda_scaled_used = 0.0;

  std::optional<WeightVector> weights_used;
  std::optional<Eigen::VectorXd> mu_w_used;
  std::optional<Eigen::VectorXd> theta_hat;        // joint program only
  std::optional<RobustWeightResult> robust_stage;  // two-step only
};

/// R_i(beta) = (y_i - n w_i (X_i - mu_w) . beta) / lambda_scaled.
Eigen::VectorXd residual_map(const Dataset& ds, const WeightVector& w,
                             const Eigen::VectorXd& mu_w, const Eigen::VectorXd& beta,
                             double lambda_scaled);

/// Minimizes sum_i lambda_o^2 H(R_i(beta)); convex, so the returned point
/// is globally optimal up to the gradient tolerance.
EstimationResult weighted_huber_fit(const Dataset& ds, const RobustWeightResult& rw,
                                    const HuberConfig& cfg);
EstimationResult weighted_huber_fit(const Dataset& ds, const WeightVector& w,
                                    const Eigen::VectorXd& mu_w, const HuberConfig& cfg);

/// The l1-penalized joint program over (theta, beta); alternates the
/// closed-form soft-threshold step in theta with weighted least squares in
/// beta. Partial minimization over theta recovers exactly the Huber
/// objective, so both fits agree at the optimum.
EstimationResult joint_fit(const Dataset& ds, const RobustWeightResult& rw,
                           const HuberConfig& cfg);
EstimationResult joint_fit(const Dataset& ds, const WeightVector& w,
                           const Eigen::VectorXd& mu_w, const HuberConfig& cfg);

/// Robust weights followed by the weighted Huber fit.
EstimationResult two_step_estimate(const Dataset& ds, double eps,
                                   RobustWeightConfig rw_cfg, const HuberConfig& cfg);

/// Least squares through the origin via normal equations, with a 1e-10
/// ridge retry when the Gram matrix is singular.
EstimationResult ols_fit(const Dataset& ds);

/// Huber fit with uniform weights and the sample mean as center.
EstimationResult plain_huber_fit(const Dataset& ds, const HuberConfig& cfg);

/// Plug-in residual-scale choice for lambda_scaled (see HuberConfig).
double default_lambda_scaled(const Dataset& ds);

}  // namespace robreg
