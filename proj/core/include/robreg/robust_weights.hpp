#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "robreg/capped_simplex.hpp"
#include "robreg/dataset.hpp"
#include "robreg/spectral.hpp"

namespace robreg {

enum class CovModel { identity_cov, bounded_cov };

std::string cov_model_name(CovModel mode);
CovModel cov_model_from_name(const std::string& name);

struct RobustWeightConfig {
  double eps = 0.1;
  CovModel mode = CovModel::identity_cov;

  /// Termination constant. identity_cov stops when
  ///   lambda_max <= 1 + c_term * (eps log(1/eps) + sqrt(d/n));
  /// bounded_cov stops when
  ///   lambda_max <= c_term * sigma_c_sq.
  double c_term = 2.0;

  /// Covariance scale for the bounded_cov threshold. NaN means estimate it
  /// from the data as the largest squared 1.4826*MAD over coordinates.
  double sigma_c_sq = std::numeric_limits<double>::quiet_NaN();

  int max_outer = 0;  // 0 picks the default 4*ceil(log2(d+1)) + 8
  int filter_rounds_per_outer = 5;
  double power_tol = 1e-9;
  int power_max_iter = 2000;
  std::uint64_t seed = 0;

  static RobustWeightConfig identity(double eps);
  static RobustWeightConfig bounded(double eps);

  int resolved_max_outer(Eigen::Index d) const;
  double threshold(Eigen::Index n, Eigen::Index d, double sigma_c_sq_est) const;
  void validate() const;
};

enum class Termination { certificate, budget };

struct RobustWeightResult {
  WeightVector w;
  Eigen::VectorXd mu_w;      // sum_i w_i X_i
  Eigen::VectorXd nu_final;  // center at which the certificate was evaluated
  Eigen::VectorXd top_dir;   // top eigenvector at the returned state
  double lambda_max = 0.0;   // primal certificate value
  double dual_cert = 0.0;    // dual lower bound at (nu_final, top_dir)
  double threshold = 0.0;    // termination threshold that was in force
  int outer_iters = 0;
  Termination terminated_by = Termination::budget;
  std::vector<double> lambda_trace;  // lambda_max seen at each outer iteration
};

/// Spectral-filtering weight computation: from the coordinate-wise median
/// center, repeatedly find the heaviest direction of the weighted second
/// moment, multiplicatively downweight points with large squared
/// projection, project back onto the capped simplex, and recenter at the
/// weighted mean, until the certificate threshold is met or the budget
/// runs out (in which case the lowest-lambda state seen is returned).
RobustWeightResult robust_weights(const Dataset& ds, const RobustWeightConfig& cfg);

/// One filtering round: scores s_i = ((X_i - nu) . v)^2, multiplicative
/// downweight w_i *= 1 - s_i / s_max over positive-weight points, then
/// projection back onto the capped simplex. Leaves w unchanged when all
/// scores vanish. The weighted variance along v does not increase.
WeightVector filter_update(const Dataset& ds, const WeightVector& w,
                           const Eigen::VectorXd& nu, const Eigen::VectorXd& v,
                           double eps);

struct CertificateReport {
  double lambda_max = 0.0;
  double threshold = 0.0;
  double dual_cert = 0.0;
  bool pass = false;
};

/// Recomputes the certificate from scratch for a finished run.
CertificateReport certificate(const Dataset& ds, const RobustWeightResult& result,
                              const RobustWeightConfig& cfg);

/// Robust per-coordinate variance proxy used for the bounded_cov threshold
/// when the caller does not supply sigma_c_sq.
double estimate_sigma_c_sq(const Eigen::MatrixXd& X);

}  // namespace robreg
