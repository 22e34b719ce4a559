#include "robreg/capped_simplex.hpp"

#include <cmath>
#include <stdexcept>

#include "robreg/dataset.hpp"

namespace robreg {

bool WeightVector::is_member(double sum_tol, double box_tol) const {
  if (w.size() == 0) return false;
  if (std::abs(w.sum() - 1.0) > sum_tol) return false;
  const double hi = cap() + box_tol;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] < -box_tol || w[i] > hi) return false;
  return true;
}

Eigen::Index WeightVector::low_weight_count() const {
  const double threshold = 0.5 / static_cast<double>(w.size());
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] < threshold) ++count;
  return count;
}

Eigen::Index WeightVector::low_weight_bound() const {
  return 2 * static_cast<Eigen::Index>(
                 std::ceil(eps * static_cast<double>(w.size())));
}

WeightVector uniform_weights(Eigen::Index n, double eps) {
  if (n < 1) throw InvalidInput("uniform_weights: n must be >= 1");
  if (eps < 0.0 || eps >= 1.0)
    throw InvalidInput("uniform_weights: eps must lie in [0, 1)");
  WeightVector wv;
  wv.w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  wv.eps = eps;
  return wv;
}

namespace detail {

Eigen::VectorXd clip_to_unit_sum(const Eigen::VectorXd& v, double cap) {
  const Eigen::Index n = v.size();

  const auto clipped_sum = [&](double tau) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      s += std::min(cap, std::max(0.0, v[i] - tau));
    return s;
  };

  // clipped_sum is non-increasing in tau; the bracket straddles 1 because
  // n * cap >= 1.
  double lo = v.minCoeff() - 1.0;
  double hi = v.maxCoeff();
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double s = clipped_sum(mid);
    if (std::abs(s - 1.0) <= 1e-12) {
      lo = hi = mid;
      break;
    }
    if (s > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  const double tau = 0.5 * (lo + hi);

  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w[i] = std::min(cap, std::max(0.0, v[i] - tau));

  // Distribute any residual of the sum constraint over the free
  // coordinates so the membership tolerance holds exactly.
  double residual = 1.0 - w.sum();
  if (residual != 0.0) {
    for (int pass = 0; pass < 4 && std::abs(residual) > 1e-15; ++pass) {
      Eigen::Index free_count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool can_up = w[i] < cap - 1e-15;
        const bool can_down = w[i] > 1e-15;
        if ((residual > 0.0 && can_up) || (residual < 0.0 && can_down)) ++free_count;
      }
      if (free_count == 0) break;
      const double bump = residual / static_cast<double>(free_count);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double before = w[i];
        double after = before + bump;
        after = std::min(cap, std::max(0.0, after));
        w[i] = after;
        residual -= after - before;
      }
    }
  }
  return w;
}

}  // namespace detail

WeightVector project_to_capped_simplex(const Eigen::VectorXd& v, double eps) {
  if (v.size() < 1) throw InvalidInput("project: empty vector");
  if (eps < 0.0 || eps >= 1.0) throw InvalidInput("project: eps must lie in [0, 1)");
  if (!v.allFinite()) throw InvalidInput("project: non-finite entry");

  WeightVector wv;
  wv.eps = eps;
  wv.w = detail::clip_to_unit_sum(
      v, 1.0 / ((1.0 - eps) * static_cast<double>(v.size())));
  return wv;
}

}  // namespace robreg
