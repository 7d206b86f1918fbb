#include "monogp/linalg.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "monogp/errors.hpp"

namespace monogp {

double CholeskyFactor::log_det() const
{
  return 2.0 * lower.diagonal().array().log().sum();
}

Eigen::MatrixXd CholeskyFactor::solve_lower(const Eigen::MatrixXd& b) const
{
  return lower.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd CholeskyFactor::solve_upper(const Eigen::MatrixXd& b) const
{
  return lower.transpose().triangularView<Eigen::Upper>().solve(b);
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& b) const
{
  return solve_upper(solve_lower(b));
}

CholeskyFactor robust_cholesky(const Eigen::MatrixXd& a, const JitterPolicy& policy)
{
  if (a.rows() != a.cols())
    throw ShapeError("robust_cholesky: matrix is not square");
  if (a.rows() == 0)
    return {Eigen::MatrixXd(0, 0), policy.initial};
  check_dense_dimension(a.rows());

  double jitter = policy.initial;
  for (;;) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0
        && llt.matrixLLT().allFinite()) {
      return {llt.matrixL(), jitter};
    }
    if (jitter >= policy.max * (1.0 - 1e-12))
      throw NumericalError("Cholesky factorization failed at jitter " + std::to_string(jitter),
                           jitter);
    jitter = jitter > 0.0 ? std::min(jitter * policy.growth, policy.max)
                          : std::min(JitterPolicy{}.initial, policy.max);
  }
}

Eigen::Index max_dense_dimension()
{
  if (const char* env = std::getenv("MONOGP_MAX_DIM")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0)
      return static_cast<Eigen::Index>(v);
  }
  return 2000;
}

void check_dense_dimension(Eigen::Index n)
{
  const Eigen::Index cap = max_dense_dimension();
  if (n > cap)
    throw DomainError("latent dimension " + std::to_string(n) + " exceeds the dense limit of "
                      + std::to_string(cap) + " (set MONOGP_MAX_DIM to override)");
}

}  // namespace monogp
