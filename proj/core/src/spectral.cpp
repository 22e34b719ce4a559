#include "robreg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "robreg/rng.hpp"

namespace robreg {

Eigen::VectorXd coordwise_median(const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw InvalidInput("coordwise_median: empty matrix");
  const Eigen::Index n = X.rows();
  const Eigen::Index mid = (n - 1) / 2;  // lower median for even n
  Eigen::VectorXd med(X.cols());
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i)
      column[static_cast<std::size_t>(i)] = X(i, j);
    std::nth_element(column.begin(), column.begin() + mid, column.end());
    med[j] = column[static_cast<std::size_t>(mid)];
  }
  return med;
}

SecondMoment weighted_second_moment(const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& nu) {
  if (w.size() != X.rows())
    throw InvalidInput("weighted_second_moment: weight length mismatch");
  if (nu.size() != X.cols())
    throw InvalidInput("weighted_second_moment: center length mismatch");
  const Eigen::Index d = X.cols();
  SecondMoment sm;
  sm.center = nu;
  sm.M = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd centered(d);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (w[i] == 0.0) continue;
    centered = X.row(i).transpose() - nu;
    sm.M.selfadjointView<Eigen::Lower>().rankUpdate(centered, w[i]);
  }
  sm.M = sm.M.selfadjointView<Eigen::Lower>();
  return sm;
}

SecondMoment weighted_second_moment(const Dataset& ds, const WeightVector& w,
                                    const Eigen::VectorXd& nu) {
  return weighted_second_moment(ds.X, w.w, nu);
}

namespace {

EigenPair run_power(const Eigen::MatrixXd& M, Eigen::VectorXd v, double tol,
                    int max_iter) {
  EigenPair best;
  best.v = v;
  best.lambda = v.dot(M * v);
  double prev_lambda = best.lambda;
  for (int iter = 1; iter <= max_iter; ++iter) {
    Eigen::VectorXd mv = M * v;
    const double norm = mv.norm();
    if (norm == 0.0) {
      // v is in the null space; for a PSD matrix that means lambda_max
      // along this start is 0.
      best.lambda = 0.0;
      best.v = v;
      best.converged = true;
      best.iters = iter;
      return best;
    }
    v = mv / norm;
    const double lambda = v.dot(M * v);
    const double residual = (M * v - lambda * v).norm();
    best.lambda = lambda;
    best.v = v;
    best.iters = iter;
    if (residual <= tol * std::max(lambda, 1.0)) {
      best.converged = true;
      return best;
    }
    // Stalled without meeting the residual: report back so the caller can
    // restart from a fresh direction.
    if (std::abs(lambda - prev_lambda) < 1e-14 * std::max(1.0, std::abs(lambda)) &&
        iter > 32)
      return best;
    prev_lambda = lambda;
  }
  return best;
}

}  // namespace

EigenPair top_eigenpair(const Eigen::MatrixXd& M, double tol, int max_iter,
                        std::uint64_t seed) {
  if (M.rows() != M.cols() || M.rows() < 1)
    throw InvalidInput("top_eigenpair: matrix must be square and non-empty");
  const Eigen::Index d = M.rows();
  Rng rng(Rng::derive_stream(seed, 0x7370656374ULL, static_cast<std::uint64_t>(d)));

  const auto random_unit = [&] {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
    const double norm = v.norm();
    return norm == 0.0 ? Eigen::VectorXd::Unit(d, 0).eval() : (v / norm).eval();
  };

  EigenPair first = run_power(M, random_unit(), tol, max_iter);
  if (first.converged) return first;
  EigenPair second = run_power(M, random_unit(), tol, max_iter);
  second.iters += first.iters;
  if (second.converged || second.lambda >= first.lambda) return second;
  first.iters = second.iters;
  return first;
}

EigenPair top_eigenpair(const SecondMoment& sm, double tol, int max_iter,
                        std::uint64_t seed) {
  return top_eigenpair(sm.M, tol, max_iter, seed);
}

double dual_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& nu,
                      const Eigen::VectorXd& v, double eps) {
  if (nu.size() != X.cols() || v.size() != X.cols())
    throw InvalidInput("dual_objective: dimension mismatch");
  if (std::abs(v.norm() - 1.0) > 1e-8)
    throw InvalidInput("dual_objective: direction must be a unit vector");
  if (eps < 0.0 || eps >= 1.0)
    throw InvalidInput("dual_objective: eps must lie in [0, 1)");
  const Eigen::Index n = X.rows();
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double proj = (X.row(i).transpose() - nu).dot(v);
    scores[static_cast<std::size_t>(i)] = proj * proj;
  }
  Eigen::Index keep = static_cast<Eigen::Index>(
      std::floor((1.0 - eps) * static_cast<double>(n)));
  keep = std::max<Eigen::Index>(1, std::min(keep, n));
  std::sort(scores.begin(), scores.end());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < keep; ++i) sum += scores[static_cast<std::size_t>(i)];
  return sum / static_cast<double>(keep);
}

double dual_objective(const Dataset& ds, const Eigen::VectorXd& nu,
                      const Eigen::VectorXd& v, double eps) {
  return dual_objective(ds.X, nu, v, eps);
}

}  // namespace robreg
