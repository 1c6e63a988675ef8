#pragma once

#include <Eigen/Dense>

namespace nefqvf {

struct EigenEstimate {
  double value;
  double residual;  // |beta_m s_m|, a bound on the eigen-residual norm
  int iterations;
};

// Algebraically largest eigenvalue of a symmetric matrix by Lanczos with full
// reorthogonalization from a fixed start vector. Converged when the residual
// bound is at most rel_tol * max(1, |value|); throws NumericInstability if
// that does not happen within max_iter steps.
EigenEstimate top_eigenvalue(const Eigen::MatrixXd& a, double rel_tol = 1e-8, int max_iter = 400);

}  // namespace nefqvf
