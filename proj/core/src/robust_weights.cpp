#include "robreg/robust_weights.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "robreg/rng.hpp"

namespace robreg {

std::string cov_model_name(CovModel mode) {
  return mode == CovModel::identity_cov ? "identity_cov" : "bounded_cov";
}

CovModel cov_model_from_name(const std::string& name) {
  if (name == "identity_cov") return CovModel::identity_cov;
  if (name == "bounded_cov") return CovModel::bounded_cov;
  throw InvalidInput("unknown covariance model: " + name);
}

RobustWeightConfig RobustWeightConfig::identity(double eps) {
  RobustWeightConfig cfg;
  cfg.eps = eps;
  cfg.mode = CovModel::identity_cov;
  cfg.c_term = 2.0;
  return cfg;
}

RobustWeightConfig RobustWeightConfig::bounded(double eps) {
  RobustWeightConfig cfg;
  cfg.eps = eps;
  cfg.mode = CovModel::bounded_cov;
  cfg.c_term = 9.0;
  return cfg;
}

int RobustWeightConfig::resolved_max_outer(Eigen::Index d) const {
  if (max_outer > 0) return max_outer;
  const double log2d = std::log2(static_cast<double>(d + 1));
  return 4 * static_cast<int>(std::ceil(log2d)) + 8;
}

double RobustWeightConfig::threshold(Eigen::Index n, Eigen::Index d,
                                     double sigma_c_sq_est) const {
  if (mode == CovModel::identity_cov) {
    const double eps_term = eps > 0.0 ? eps * std::log(1.0 / eps) : 0.0;
    const double rdp = std::sqrt(static_cast<double>(d) / static_cast<double>(n));
    return 1.0 + c_term * (eps_term + rdp);
  }
  const double scale = std::isnan(sigma_c_sq) ? sigma_c_sq_est : sigma_c_sq;
  return c_term * scale;
}

void RobustWeightConfig::validate() const {
  if (eps < 0.0 || eps >= 1.0 / 3.0)
    throw InvalidInput("robust_weights: eps must lie in [0, 1/3)");
  if (c_term <= 0.0) throw InvalidInput("robust_weights: c_term must be positive");
  if (max_outer < 0) throw InvalidInput("robust_weights: max_outer must be >= 1");
  if (filter_rounds_per_outer < 1)
    throw InvalidInput("robust_weights: filter_rounds_per_outer must be >= 1");
  if (power_tol <= 0.0) throw InvalidInput("robust_weights: power_tol must be positive");
}

double estimate_sigma_c_sq(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index mid = (n - 1) / 2;
  std::vector<double> column(static_cast<std::size_t>(n));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i)
      column[static_cast<std::size_t>(i)] = X(i, j);
    std::nth_element(column.begin(), column.begin() + mid, column.end());
    const double med = column[static_cast<std::size_t>(mid)];
    for (Eigen::Index i = 0; i < n; ++i)
      column[static_cast<std::size_t>(i)] =
          std::abs(column[static_cast<std::size_t>(i)] - med);
    std::nth_element(column.begin(), column.begin() + mid, column.end());
    const double sigma = 1.4826 * column[static_cast<std::size_t>(mid)];
    worst = std::max(worst, sigma * sigma);
  }
  return worst > 0.0 ? worst : 1.0;
}

WeightVector filter_update(const Dataset& ds, const WeightVector& w,
                           const Eigen::VectorXd& nu, const Eigen::VectorXd& v,
                           double eps) {
  const Eigen::Index n = ds.n();
  if (w.n() != n) throw InvalidInput("filter_update: weight length mismatch");

  Eigen::VectorXd scores(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double proj = (ds.X.row(i).transpose() - nu).dot(v);
    scores[i] = proj * proj;
  }

  double s_max = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (w.w[i] > 0.0) s_max = std::max(s_max, scores[i]);
  if (s_max == 0.0) return w;  // already flat along v

  const double cap = w.cap();
  const double variance_before = w.w.dot(scores);
  WeightVector best = w;
  double best_variance = variance_before;

  Eigen::VectorXd current = w.w;
  // Damp, renormalize to unit mass, then restore the cap by projecting
  // within the face spanned by the surviving support: points the filter
  // zeroed stay out instead of picking mass back up from the cap
  // redistribution. Renormalizing first never raises the variance along v
  // (Cauchy-Schwarz); the retry bound covers the rare case where the cap
  // projection feeds mass back into high-score survivors.
  for (int attempt = 0; attempt < 5; ++attempt) {
    Eigen::VectorXd damped(n);
    std::vector<Eigen::Index> support;
    support.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      damped[i] = std::max(0.0, current[i] * (1.0 - scores[i] / s_max));
      if (damped[i] > 0.0) support.push_back(i);
    }
    const double total = damped.sum();
    if (total < 1e-12) return best;  // scores flat on the support

    WeightVector candidate;
    candidate.eps = eps;
    const double support_mass = cap * static_cast<double>(support.size());
    if (support_mass >= 1.0 && static_cast<Eigen::Index>(support.size()) < n) {
      Eigen::VectorXd sub(static_cast<Eigen::Index>(support.size()));
      for (std::size_t k = 0; k < support.size(); ++k)
        sub[static_cast<Eigen::Index>(k)] = damped[support[k]] / total;
      const Eigen::VectorXd sub_proj = detail::clip_to_unit_sum(sub, cap);
      candidate.w = Eigen::VectorXd::Zero(n);
      for (std::size_t k = 0; k < support.size(); ++k)
        candidate.w[support[k]] = sub_proj[static_cast<Eigen::Index>(k)];
    } else {
      candidate = project_to_capped_simplex(damped / total, eps);
    }

    const double variance = candidate.w.dot(scores);
    if (variance < best_variance) {
      best_variance = variance;
      best = candidate;
    }
    if (variance <= variance_before + 1e-12) return candidate;
    current = candidate.w;
  }
  return best;
}

RobustWeightResult robust_weights(const Dataset& ds, const RobustWeightConfig& cfg) {
  ds.validate();
  cfg.validate();

  const Eigen::Index n = ds.n();
  const Eigen::Index d = ds.d();
  const double sigma_c_sq_est = cfg.mode == CovModel::bounded_cov
                                    ? estimate_sigma_c_sq(ds.X)
                                    : 1.0;
  const double threshold = cfg.threshold(n, d, sigma_c_sq_est);
  const int max_outer = cfg.resolved_max_outer(d);

  WeightVector w = uniform_weights(n, cfg.eps);
  Eigen::VectorXd nu = coordwise_median(ds.X);

  RobustWeightResult best;
  best.threshold = threshold;
  best.lambda_max = std::numeric_limits<double>::infinity();
  best.terminated_by = Termination::budget;

  for (int outer = 1; outer <= max_outer; ++outer) {
    const SecondMoment sm = weighted_second_moment(ds.X, w.w, nu);
    const EigenPair top = top_eigenpair(
        sm, cfg.power_tol, cfg.power_max_iter,
        Rng::derive_stream(cfg.seed, 0x6f75746572ULL, static_cast<std::uint64_t>(outer)));
    best.lambda_trace.push_back(top.lambda);

    if (top.lambda < best.lambda_max) {
      best.w = w;
      best.nu_final = nu;
      best.top_dir = top.v;
      best.lambda_max = top.lambda;
      best.outer_iters = outer;
    }

    if (top.lambda <= threshold) {
      best.w = w;
      best.nu_final = nu;
      best.top_dir = top.v;
      best.lambda_max = top.lambda;
      best.outer_iters = outer;
      best.terminated_by = Termination::certificate;
      break;
    }

    for (int round = 0; round < cfg.filter_rounds_per_outer; ++round)
      w = filter_update(ds, w, nu, top.v, cfg.eps);

    // Recenter at the weighted mean: after downweighting, the mean has
    // moved along the heavy direction that was just filtered.
    nu = ds.X.transpose() * w.w;
  }

  best.mu_w = ds.X.transpose() * best.w.w;
  best.dual_cert = dual_objective(ds.X, best.nu_final, best.top_dir, cfg.eps);
  return best;
}

CertificateReport certificate(const Dataset& ds, const RobustWeightResult& result,
                              const RobustWeightConfig& cfg) {
  CertificateReport report;
  const SecondMoment sm = weighted_second_moment(ds.X, result.w.w, result.nu_final);
  const EigenPair top =
      top_eigenpair(sm, cfg.power_tol, cfg.power_max_iter,
                    Rng::derive_stream(cfg.seed, 0x63657274ULL, 1));
  const double sigma_c_sq_est = cfg.mode == CovModel::bounded_cov
                                    ? estimate_sigma_c_sq(ds.X)
                                    : 1.0;
  report.lambda_max = top.lambda;
  report.threshold = cfg.threshold(ds.n(), ds.d(), sigma_c_sq_est);
  report.dual_cert = dual_objective(ds.X, result.nu_final, top.v, cfg.eps);
  report.pass = report.lambda_max <= report.threshold;
  return report;
}

}  // namespace robreg
