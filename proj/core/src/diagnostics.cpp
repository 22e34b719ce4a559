#include "robreg/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace robreg {

RateBundle rates(Eigen::Index n, Eigen::Index d, double eps) {
  if (n < 1 || d < 1) throw InvalidInput("rates: n and d must be >= 1");
  if (eps < 0.0 || eps >= 1.0) throw InvalidInput("rates: eps must lie in [0, 1)");
  RateBundle r;
  r.r_o = eps > 0.0 ? eps * std::sqrt(std::log(1.0 / eps)) : 0.0;
  r.r_d = std::sqrt(static_cast<double>(d) * std::log(static_cast<double>(d)) /
                    static_cast<double>(n));
  r.r_d_prime = std::sqrt(static_cast<double>(d) / static_cast<double>(n));
  r.sqrt_eps = std::sqrt(eps);
  return r;
}

ErrorMetrics error_metrics(const EstimationResult& result, const OracleInstance& oracle) {
  if (result.beta_hat.size() != oracle.beta_star.size())
    throw InvalidInput("error_metrics: beta dimension mismatch");
  ErrorMetrics m;
  m.l2_error = (result.beta_hat - oracle.beta_star).norm();

  double sq = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < oracle.dataset.n(); ++i) {
    if (oracle.is_outlier(i)) continue;
    const double r = oracle.dataset.y[i] - oracle.x_clean.row(i).dot(result.beta_hat);
    sq += r * r;
    ++count;
  }
  m.prediction_rmse_clean = count > 0 ? std::sqrt(sq / static_cast<double>(count)) : 0.0;

  if (result.mu_w_used.has_value()) {
    Eigen::VectorXd mu = oracle.spec.mu;
    if (mu.size() == 0) mu = Eigen::VectorXd::Zero(oracle.dataset.d());
    m.mu_error = (*result.mu_w_used - mu).norm();
  } else {
    m.mu_error = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

ConditionReport check_conditions(const OracleInstance& oracle,
                                 const RobustWeightResult& rw,
                                 const Eigen::VectorXd& beta_hat,
                                 double lambda_scaled,
                                 const std::vector<double>& eta_grid) {
  if (eta_grid.empty()) throw InvalidInput("check_conditions: empty eta grid");
  if (lambda_scaled <= 0.0)
    throw InvalidInput("check_conditions: lambda_scaled must be positive");
  const Eigen::Index n = oracle.dataset.n();
  const Eigen::Index d = oracle.dataset.d();
  if (beta_hat.size() != d || rw.w.n() != n)
    throw InvalidInput("check_conditions: dimension mismatch");

  const double L = lambda_scaled;
  const double nn = static_cast<double>(n);
  const Eigen::VectorXd& w = rw.w.w;
  const Eigen::VectorXd& mu_w = rw.mu_w;
  const Eigen::VectorXd direction = beta_hat - oracle.beta_star;

  // Centered covariates: clean and observed.
  const Eigen::MatrixXd xc = oracle.x_clean.rowwise() - mu_w.transpose();
  const Eigen::MatrixXd Xc = oracle.dataset.X.rowwise() - mu_w.transpose();

  const auto residual_clean = [&](const Eigen::VectorXd& beta, Eigen::Index i) {
    return (oracle.dataset.y[i] - nn * w[i] * xc.row(i).dot(beta)) / L;
  };
  const auto residual_observed = [&](const Eigen::VectorXd& beta, Eigen::Index i) {
    return (oracle.dataset.y[i] - nn * w[i] * Xc.row(i).dot(beta)) / L;
  };

  ConditionReport report;
  report.eta_grid = eta_grid;
  report.c2 = std::numeric_limits<double>::infinity();

  for (double eta : eta_grid) {
    const Eigen::VectorXd delta = eta * direction;
    const Eigen::VectorXd beta_eta = oracle.beta_star + delta;
    const double dn = delta.norm();

    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double along_clean = xc.row(i).dot(delta);
      s1 += L * w[i] * huber_score(oracle.xi[i] / L) * along_clean;
      s4 += L * w[i] *
            (-huber_score(residual_clean(beta_eta, i)) +
             huber_score(residual_clean(oracle.beta_star, i))) *
            along_clean;
    }
    for (Eigen::Index i : oracle.outlier_idx) {
      s2 += L * w[i] * huber_score(residual_clean(beta_eta, i)) * xc.row(i).dot(delta);
      s3 += L * w[i] * huber_score(residual_observed(beta_eta, i)) *
            Xc.row(i).dot(delta);
    }

    report.lhs.push_back({std::abs(s1), std::abs(s2), std::abs(s3), s4});
    report.delta_norm.push_back(dn);
    if (dn > 0.0) {
      report.ratio_linear.push_back(
          {std::abs(s1) / dn, std::abs(s2) / dn, std::abs(s3) / dn});
      report.ratio_quadratic.push_back(s4 / (dn * dn));
      report.c1 = std::max({report.c1, std::abs(s1) / dn, std::abs(s2) / dn,
                            std::abs(s3) / dn});
      report.c2 = std::min(report.c2, s4 / (dn * dn));
      report.c3 = std::max(report.c3, std::max(0.0, -s4) / dn);
      report.c4 = std::max(report.c4, std::max(0.0, -s4));
    } else {
      report.ratio_linear.push_back({0.0, 0.0, 0.0});
      report.ratio_quadratic.push_back(0.0);
    }
  }

  if (!std::isfinite(report.c2)) report.c2 = 0.0;  // degenerate delta = 0 grid
  report.r0_bound =
      report.c2 > 0.0
          ? (3.0 * report.c1 + report.c3 + std::sqrt(report.c2 * report.c4)) / report.c2
          : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace robreg
