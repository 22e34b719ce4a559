#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace robreg {

/// Thrown on malformed input files or invalid configuration values.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Observed regression data: the only thing the estimators ever see.
struct Dataset {
  Eigen::VectorXd y;  // responses, length n
  Eigen::MatrixXd X;  // covariates, n rows x d columns

  Eigen::Index n() const { return y.size(); }
  Eigen::Index d() const { return X.cols(); }

  /// Checks finiteness and shape (n >= 2, d >= 1, rows match).
  void validate() const;
};

enum class DesignKind {
  gaussian_identity,
  rademacher,
  uniform_scaled,  // uniform on [-sqrt(3), sqrt(3)], unit variance
  student_t,       // scaled to unit variance, requires df > 4
  gaussian_cov,    // N(0, design_cov)
};

enum class NoiseKind { gaussian, student_t, laplace };

/// Distributional assumptions for the clean data generator.
struct GeneratorSpec {
  DesignKind design = DesignKind::gaussian_identity;
  int design_df = 5;             // student_t design only
  Eigen::MatrixXd design_cov;    // gaussian_cov design only
  Eigen::VectorXd mu;            // covariate mean; empty means zero

  NoiseKind noise = NoiseKind::gaussian;
  double noise_sigma = 1.0;      // std dev (gaussian) or scale (student_t/laplace)
  int noise_df = 5;              // student_t noise only

  double sigma_sq = 1.0;         // assumed bound on E|xi|
  double sigma_c = 1.0;          // covariance cap: Sigma <= sigma_c^2 I
  double m4 = 3.0;               // kurtosis proxy (fourth-moment ratio bound)

  void validate(Eigen::Index d) const;
};

enum class AttackKind { none, point_cluster, leverage, response_only, mean_shift };

std::string attack_name(AttackKind kind);
AttackKind attack_from_name(const std::string& name);

/// What the adversary does with its o = ceil(eps * n) rows. The attacks
/// are adaptive: they may inspect everything in the OracleInstance.
struct ContaminationSpec {
  double eps = 0.0;
  AttackKind attack = AttackKind::none;
  std::uint64_t seed = 0;

  // point_cluster: every corrupted row becomes exactly (cluster_x, cluster_y).
  Eigen::VectorXd cluster_x;
  double cluster_y = 0.0;

  // leverage: X_i <- scale * x_i; if response_flip, y_i <- -X_i . beta*.
  double leverage_scale = 100.0;
  bool response_flip = true;

  // response_only: y_i <- y_i + response_magnitude, covariates untouched.
  double response_magnitude = 0.0;

  // mean_shift: X_i <- x_i + magnitude * unit(direction), response kept at
  // the clean value so the shifted covariate disagrees with it.
  Eigen::VectorXd shift_direction;
  double shift_magnitude = 0.0;

  void validate() const;
};

/// Simulation-side ground truth carried next to the contaminated view.
struct OracleInstance {
  Dataset dataset;                        // contaminated view
  Eigen::VectorXd beta_star;              // true coefficients
  Eigen::MatrixXd x_clean;                // uncontaminated covariates
  Eigen::VectorXd xi;                     // noise draws
  std::vector<Eigen::Index> outlier_idx;  // sorted corrupted row indices
  Eigen::MatrixXd rho;                    // covariate shifts, zero on clean rows
  Eigen::VectorXd theta_resp;             // response shifts, zero on clean rows
  std::uint64_t seed = 0;
  GeneratorSpec spec;

  std::vector<Eigen::Index> clean_idx() const;
  bool is_outlier(Eigen::Index i) const;

  /// Largest violation of y_i = X_i.beta* + xi_i + sqrt(n) theta_i.
  double model_identity_residual() const;
};

/// Draws a clean instance (no corrupted rows) from the spec.
OracleInstance generate(const GeneratorSpec& spec, Eigen::Index n, Eigen::Index d,
                        const Eigen::VectorXd& beta_star, std::uint64_t seed);

/// Applies an attack to the clean data underneath `inst`; any previous
/// attack is discarded first, so recontamination replaces rather than
/// stacks. Rejects eps >= 1/3.
OracleInstance contaminate(const OracleInstance& inst, const ContaminationSpec& spec);

/// CSV with header "y,x1,...,xd". Values serialized with 17 significant
/// digits so a save/load round trip is exact.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

}  // namespace robreg
