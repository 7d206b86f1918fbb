#pragma once

#include <Eigen/Dense>

namespace monogp {

/// Diagonal jitter ladder: initial, initial*growth, ... up to max.
struct JitterPolicy
{
  double initial = 1e-8;
  double max = 1e-4;
  double growth = 10.0;
};

/// Lower Cholesky factor of (A + jitter I).
struct CholeskyFactor
{
  Eigen::MatrixXd lower;
  double jitter = 0.0;

  Eigen::Index size() const noexcept { return lower.rows(); }
  double log_det() const;
  /// L^{-1} b
  Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& b) const;
  /// L^{-T} b
  Eigen::MatrixXd solve_upper(const Eigen::MatrixXd& b) const;
  /// (L L^T)^{-1} b
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
};

/// Factorizes a + jitter I, trying each rung of the ladder in turn.
/// Throws NumericalError carrying the last jitter tried.
CholeskyFactor robust_cholesky(const Eigen::MatrixXd& a, const JitterPolicy& policy = {});

/// Upper bound on the latent dimension for dense factorizations; reads
/// MONOGP_MAX_DIM when set, otherwise 2000.
Eigen::Index max_dense_dimension();

/// Throws DomainError if n exceeds max_dense_dimension().
void check_dense_dimension(Eigen::Index n);

}  // namespace monogp
