#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "monogp/random.hpp"

namespace monogp::detail {

/// One elliptical slice update of nu under a N(0, I) prior. `log_lik` is
/// updated to the log-likelihood of the returned state.
template <class LogLik>
Eigen::VectorXd elliptical_slice(const Eigen::VectorXd& nu, double& log_lik, LogLik&& eval,
                                 Rng& rng)
{
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::VectorXd ellipse(nu.size());
  for (Eigen::Index i = 0; i < ellipse.size(); ++i)
    ellipse[i] = normal(rng);

  const double threshold = log_lik + std::log(unif(rng));
  double angle = 2.0 * std::numbers::pi * unif(rng);
  double lo = angle - 2.0 * std::numbers::pi;
  double hi = angle;

  for (int guard = 0; guard < 200; ++guard) {
    Eigen::VectorXd proposal = nu * std::cos(angle) + ellipse * std::sin(angle);
    const double ll = eval(proposal);
    if (ll > threshold) {
      log_lik = ll;
      return proposal;
    }
    if (angle < 0.0)
      lo = angle;
    else
      hi = angle;
    angle = lo + (hi - lo) * unif(rng);
  }
  // The bracket has shrunk onto the current state.
  return nu;
}

}  // namespace monogp::detail
