#pragma once

#include <Eigen/Core>

namespace robreg {

/// Element of the capped simplex: sum w_i = 1 with 0 <= w_i <= 1/((1-eps) n).
struct WeightVector {
  Eigen::VectorXd w;
  double eps = 0.0;

  Eigen::Index n() const { return w.size(); }
  double cap() const { return 1.0 / ((1.0 - eps) * static_cast<double>(w.size())); }

  bool is_member(double sum_tol = 1e-10, double box_tol = 1e-12) const;

  /// Rows with weight below 1/(2n). For any member this count is at most
  /// 2*ceil(eps*n); see low_weight_bound().
  Eigen::Index low_weight_count() const;
  Eigen::Index low_weight_bound() const;
};

/// The uniform vector w_i = 1/n, the canonical interior point.
WeightVector uniform_weights(Eigen::Index n, double eps);

/// Euclidean projection onto the capped simplex: the unique w of the form
/// clip(v - tau, 0, cap) whose entries sum to one, found by bisection on
/// tau over [min(v) - 1, max(v)]. Rejects eps outside [0, 1).
WeightVector project_to_capped_simplex(const Eigen::VectorXd& v, double eps);

namespace detail {
/// Bisection core shared with the filtering step: clip(v - tau, 0, cap)
/// with sum one. Requires cap * v.size() >= 1.
Eigen::VectorXd clip_to_unit_sum(const Eigen::VectorXd& v, double cap);
}  // namespace detail

}  // namespace robreg
