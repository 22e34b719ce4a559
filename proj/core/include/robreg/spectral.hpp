#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "robreg/capped_simplex.hpp"
#include "robreg/dataset.hpp"

namespace robreg {

/// Weighted, centered second-moment matrix sum_i w_i (X_i - nu)(X_i - nu)^T.
struct SecondMoment {
  Eigen::MatrixXd M;
  Eigen::VectorXd center;
};

/// Per-column lower median (element floor((n-1)/2) of the sorted column).
Eigen::VectorXd coordwise_median(const Eigen::MatrixXd& X);

SecondMoment weighted_second_moment(const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& nu);
SecondMoment weighted_second_moment(const Dataset& ds, const WeightVector& w,
                                    const Eigen::VectorXd& nu);

struct EigenPair {
  double lambda = 0.0;
  Eigen::VectorXd v;
  bool converged = false;
  int iters = 0;
};

/// Top eigenpair of a symmetric PSD matrix by power iteration with one
/// random restart. Satisfies ||Mv - lambda v|| <= tol * max(lambda, 1)
/// when converged; otherwise returns the best iterate with
/// converged=false.
EigenPair top_eigenpair(const SecondMoment& sm, double tol, int max_iter,
                        std::uint64_t seed);
EigenPair top_eigenpair(const Eigen::MatrixXd& M, double tol, int max_iter,
                        std::uint64_t seed);

/// Average of the smallest floor((1-eps) n) squared projections
/// ((X_i - nu) . v)^2: the value of the feasible dual point vv^T, a lower
/// bound on the primal optimum over the capped simplex.
double dual_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& nu,
                      const Eigen::VectorXd& v, double eps);
double dual_objective(const Dataset& ds, const Eigen::VectorXd& nu,
                      const Eigen::VectorXd& v, double eps);

}  // namespace robreg
