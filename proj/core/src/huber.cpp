#include "robreg/huber.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

namespace robreg {

double huber_loss(double t) {
  const double a = std::abs(t);
  return a <= 1.0 ? 0.5 * t * t : a - 0.5;
}

double huber_score(double t) { return std::clamp(t, -1.0, 1.0); }

std::string step_rule_name(StepRule rule) {
  return rule == StepRule::backtracking_gd ? "backtracking_gd" : "lbfgs";
}

StepRule step_rule_from_name(const std::string& name) {
  if (name == "backtracking_gd") return StepRule::backtracking_gd;
  if (name == "lbfgs") return StepRule::lbfgs;
  throw InvalidInput("unknown step rule: " + name);
}

void HuberConfig::validate() const {
  if (lambda_scaled < 0.0)
    throw InvalidInput("huber: lambda_scaled must be positive (or zero for plug-in)");
  if (grad_tol <= 0.0) throw InvalidInput("huber: grad_tol must be positive");
  if (max_iter < 1) throw InvalidInput("huber: max_iter must be >= 1");
}

Eigen::VectorXd residual_map(const Dataset& ds, const WeightVector& w,
                             const Eigen::VectorXd& mu_w, const Eigen::VectorXd& beta,
                             double lambda_scaled) {
  if (w.n() != ds.n()) throw InvalidInput("residual_map: weight length mismatch");
  if (mu_w.size() != ds.d() || beta.size() != ds.d())
    throw InvalidInput("residual_map: dimension mismatch");
  if (lambda_scaled <= 0.0) throw InvalidInput("residual_map: lambda_scaled must be positive");
  const double n = static_cast<double>(ds.n());
  Eigen::VectorXd r(ds.n());
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const double fitted = n * w.w[i] * (ds.X.row(i).transpose() - mu_w).dot(beta);
    r[i] = (ds.y[i] - fitted) / lambda_scaled;
  }
  return r;
}

namespace {

// Effective design rows a_i = n w_i (X_i - mu_w).
Eigen::MatrixXd effective_design(const Dataset& ds, const WeightVector& w,
                                 const Eigen::VectorXd& mu_w) {
  const double n = static_cast<double>(ds.n());
  Eigen::MatrixXd A = ds.X.rowwise() - mu_w.transpose();
  A.array().colwise() *= (n * w.w).array();
  return A;
}

struct Objective {
  const Eigen::MatrixXd& A;
  const Eigen::VectorXd& y;
  double lambda_scaled;

  // F(beta) = (L^2/n) sum_i H((y_i - A_i beta) / L)
  double value(const Eigen::VectorXd& beta) const {
    const double L = lambda_scaled;
    const double scale = L * L / static_cast<double>(y.size());
    double f = 0.0;
    const Eigen::VectorXd r = (y - A * beta) / L;
    for (Eigen::Index i = 0; i < r.size(); ++i) f += huber_loss(r[i]);
    return scale * f;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const {
    const double L = lambda_scaled;
    Eigen::VectorXd r = (y - A * beta) / L;
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = huber_score(r[i]);
    return (-L / static_cast<double>(y.size())) * (A.transpose() * r);
  }
};

bool is_converged(double grad_norm, double objective, double tol) {
  return grad_norm <= tol * (1.0 + std::abs(objective));
}

EstimationResult minimize_gd(const Objective& obj, Eigen::VectorXd beta,
                             const HuberConfig& cfg) {
  EstimationResult res;
  double f = obj.value(beta);
  Eigen::VectorXd g = obj.gradient(beta);
  double step = 1.0;
  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    if (is_converged(g.norm(), f, cfg.grad_tol)) break;
    const double g2 = g.squaredNorm();
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd trial = beta - step * g;
      const double f_trial = obj.value(trial);
      if (f_trial <= f - 1e-4 * step * g2) {  // Armijo
        beta = trial;
        f = f_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflowed; gradient is numerically flat
    g = obj.gradient(beta);
    step *= 2.0;
  }
  res.beta_hat = beta;
  res.objective = f;
  res.grad_norm = g.norm();
  res.iters = iter;
  res.converged = is_converged(res.grad_norm, f, cfg.grad_tol);
  return res;
}

EstimationResult minimize_lbfgs(const Objective& obj, Eigen::VectorXd beta,
                                const HuberConfig& cfg) {
  constexpr int kMemory = 10;
  EstimationResult res;
  double f = obj.value(beta);
  Eigen::VectorXd g = obj.gradient(beta);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    if (is_converged(g.norm(), f, cfg.grad_tol)) break;

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& yv = y_hist.back();
      q *= s.dot(yv) / yv.squaredNorm();
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta_k = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta_k) * s_hist[k];
    }
    Eigen::VectorXd direction = -q;
    if (direction.dot(g) >= 0.0) direction = -g;  // not a descent direction

    const double slope = direction.dot(g);
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd beta_new;
    double f_new = f;
    for (int bt = 0; bt < 60; ++bt) {
      beta_new = beta + step * direction;
      f_new = obj.value(beta_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd g_new = obj.gradient(beta_new);
    Eigen::VectorXd s = beta_new - beta;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    beta = std::move(beta_new);
    f = f_new;
    g = std::move(g_new);
  }
  res.beta_hat = beta;
  res.objective = f;
  res.grad_norm = g.norm();
  res.iters = iter;
  res.converged = is_converged(res.grad_norm, f, cfg.grad_tol);
  return res;
}

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& A,
                                       const Eigen::VectorXd& b) {
  Eigen::MatrixXd gram = A.transpose() * A;
  const Eigen::VectorXd rhs = A.transpose() * b;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd beta = ldlt.solve(rhs);
    if (beta.allFinite() && (gram * beta - rhs).norm() <=
                                1e-8 * (1.0 + rhs.norm()))
      return beta;
  }
  gram.diagonal().array() += 1e-10;  // ridge jitter for rank-deficient designs
  return Eigen::LDLT<Eigen::MatrixXd>(gram).solve(rhs);
}

double resolve_lambda(const Dataset& ds, const HuberConfig& cfg) {
  return cfg.lambda_scaled > 0.0 ? cfg.lambda_scaled : default_lambda_scaled(ds);
}

Eigen::VectorXd initial_beta(const HuberConfig& cfg, Eigen::Index d) {
  if (cfg.beta0.size() == 0) return Eigen::VectorXd::Zero(d);
  if (cfg.beta0.size() != d) throw InvalidInput("huber: beta0 has wrong length");
  return cfg.beta0;
}

}  // namespace

EstimationResult weighted_huber_fit(const Dataset& ds, const WeightVector& w,
                                    const Eigen::VectorXd& mu_w,
                                    const HuberConfig& cfg) {
  ds.validate();
  cfg.validate();
  if (w.n() != ds.n()) throw InvalidInput("huber: weight length mismatch");

  const double lambda = resolve_lambda(ds, cfg);
  const Eigen::MatrixXd A = effective_design(ds, w, mu_w);
  const Objective obj{A, ds.y, lambda};
  EstimationResult res =
      cfg.step == StepRule::backtracking_gd
          ? minimize_gd(obj, initial_beta(cfg, ds.d()), cfg)
          : minimize_lbfgs(obj, initial_beta(cfg, ds.d()), cfg);
  res.lambda_scaled_used = lambda;
  res.weights_used = w;
  res.mu_w_used = mu_w;
  return res;
}

EstimationResult weighted_huber_fit(const Dataset& ds, const RobustWeightResult& rw,
                                    const HuberConfig& cfg) {
  return weighted_huber_fit(ds, rw.w, rw.mu_w, cfg);
}

EstimationResult joint_fit(const Dataset& ds, const WeightVector& w,
                           const Eigen::VectorXd& mu_w, const HuberConfig& cfg) {
  ds.validate();
  cfg.validate();
  if (w.n() != ds.n()) throw InvalidInput("huber: weight length mismatch");

  const double lambda = resolve_lambda(ds, cfg);
  const Eigen::MatrixXd A = effective_design(ds, w, mu_w);
  const Objective obj{A, ds.y, lambda};

  Eigen::VectorXd beta = initial_beta(cfg, ds.d());
  Eigen::VectorXd sqrt_n_theta = Eigen::VectorXd::Zero(ds.n());

  EstimationResult res;
  int iter = 0;
  double f = obj.value(beta);
  double grad_norm = obj.gradient(beta).norm();
  for (; iter < cfg.max_iter; ++iter) {
    if (is_converged(grad_norm, f, cfg.grad_tol)) break;
    // theta step: per-coordinate soft threshold of the current residual.
    const Eigen::VectorXd e = ds.y - A * beta;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      const double mag = std::abs(e[i]) - lambda;
      sqrt_n_theta[i] = mag > 0.0 ? (e[i] > 0.0 ? mag : -mag) : 0.0;
    }
    // beta step: least squares against the thresholded response.
    beta = solve_normal_equations(A, ds.y - sqrt_n_theta);
    f = obj.value(beta);
    grad_norm = obj.gradient(beta).norm();
  }
  res.beta_hat = beta;
  res.objective = f;
  res.grad_norm = grad_norm;
  res.iters = iter;
  res.converged = is_converged(grad_norm, f, cfg.grad_tol);
  res.lambda_scaled_used = lambda;
  res.weights_used = w;
  res.mu_w_used = mu_w;
  res.theta_hat = sqrt_n_theta / std::sqrt(static_cast<double>(ds.n()));
  return res;
}

EstimationResult joint_fit(const Dataset& ds, const RobustWeightResult& rw,
                           const HuberConfig& cfg) {
  return joint_fit(ds, rw.w, rw.mu_w, cfg);
}

EstimationResult two_step_estimate(const Dataset& ds, double eps,
                                   RobustWeightConfig rw_cfg, const HuberConfig& cfg) {
  rw_cfg.eps = eps;
  const RobustWeightResult rw = robust_weights(ds, rw_cfg);
  EstimationResult res = weighted_huber_fit(ds, rw, cfg);
  res.robust_stage = rw;
  return res;
}

EstimationResult ols_fit(const Dataset& ds) {
  ds.validate();
  EstimationResult res;
  res.beta_hat = solve_normal_equations(ds.X, ds.y);
  const Eigen::VectorXd r = ds.y - ds.X * res.beta_hat;
  res.objective = 0.5 * r.squaredNorm() / static_cast<double>(ds.n());
  res.grad_norm = (ds.X.transpose() * r).norm() / static_cast<double>(ds.n());
  res.iters = 1;
  res.converged = true;
  return res;
}

EstimationResult plain_huber_fit(const Dataset& ds, const HuberConfig& cfg) {
  const WeightVector w = uniform_weights(ds.n(), 0.0);
  const Eigen::VectorXd mean = ds.X.colwise().mean();
  return weighted_huber_fit(ds, w, mean, cfg);
}

double default_lambda_scaled(const Dataset& ds) {
  ds.validate();
  const Eigen::Index n = ds.n();

  // Rank rows by sup-norm of (y_i, X_i) and keep the smallest 75% for a
  // least-squares pass the gross outliers cannot dominate.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Eigen::VectorXd row_mag(n);
  for (Eigen::Index i = 0; i < n; ++i)
    row_mag[i] = std::max(std::abs(ds.y[i]), ds.X.row(i).cwiseAbs().maxCoeff());
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return row_mag[a] < row_mag[b]; });
  const Eigen::Index keep = std::max<Eigen::Index>(
      ds.d() + 1, static_cast<Eigen::Index>(std::ceil(0.75 * static_cast<double>(n))));

  Eigen::MatrixXd Xk(std::min(keep, n), ds.d());
  Eigen::VectorXd yk(Xk.rows());
  for (Eigen::Index i = 0; i < Xk.rows(); ++i) {
    Xk.row(i) = ds.X.row(order[static_cast<std::size_t>(i)]);
    yk[i] = ds.y[order[static_cast<std::size_t>(i)]];
  }
  const Eigen::VectorXd beta = solve_normal_equations(Xk, yk);
  Eigen::VectorXd resid = (yk - Xk * beta).cwiseAbs();
  std::vector<double> abs_r(resid.data(), resid.data() + resid.size());
  const std::size_t mid = (abs_r.size() - 1) / 2;
  std::nth_element(abs_r.begin(), abs_r.begin() + static_cast<std::ptrdiff_t>(mid),
                   abs_r.end());
  const double scale = 1.4826 * abs_r[mid];
  const double floor = 1e-6 * (1.0 + ds.y.cwiseAbs().mean());
  return std::max(1.345 * scale, floor);
}

}  // namespace robreg
