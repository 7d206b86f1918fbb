#include <cmath>

#include "monogp/errors.hpp"
#include "monogp/inference.hpp"

namespace monogp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

}  // namespace

ConditionedSystem::ConditionedSystem(const ObservationSystem& sys, const Hyperparameters& hp,
                                     const JitterPolicy& policy)
  : hp_(hp),
    sign_z_(sys.sign_z),
    strictness_(sys.strictness),
    n_gaussian_(sys.gaussian_count()),
    n_sign_(sys.sign_count())
{
  sites_.reserve(sys.gaussian_sites.size() + sys.sign_sites.size());
  sites_.insert(sites_.end(), sys.gaussian_sites.begin(), sys.gaussian_sites.end());
  sites_.insert(sites_.end(), sys.sign_sites.begin(), sys.sign_sites.end());

  Eigen::MatrixXd k = cov_matrix(sites_, hp_);
  k.diagonal().head(n_gaussian_) += sys.noise(hp_.sigma);
  factor_ = robust_cholesky(k, policy);

  const auto lgg = factor_.lower.topLeftCorner(n_gaussian_, n_gaussian_);
  whitened_y_ = lgg.triangularView<Eigen::Lower>().solve(sys.targets);
  sign_mean_ = factor_.lower.bottomLeftCorner(n_sign_, n_gaussian_) * whitened_y_;
  log_marginal_ = -0.5 * whitened_y_.squaredNorm() - lgg.diagonal().array().log().sum()
                  - 0.5 * static_cast<double>(n_gaussian_) * kLog2Pi;
}

Eigen::VectorXd ConditionedSystem::sign_values(const Eigen::VectorXd& nu) const
{
  if (nu.size() != n_sign_)
    throw ShapeError("sign latent vector has the wrong length");
  return sign_mean_ + sign_factor().triangularView<Eigen::Lower>() * nu;
}

Eigen::VectorXd ConditionedSystem::whiten(const Eigen::VectorXd& c) const
{
  if (c.size() != n_sign_)
    throw ShapeError("sign latent vector has the wrong length");
  return sign_factor().triangularView<Eigen::Lower>().solve(c - sign_mean_);
}

double ConditionedSystem::sign_log_lik(const Eigen::VectorXd& nu) const
{
  const Eigen::VectorXd c = sign_values(nu);
  double s = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    s += log_normal_cdf(sign_z_[i] * c[i] / strictness_);
  return s;
}

ConditionedSystem::Moments ConditionedSystem::moments(std::span<const Site> test,
                                                      const Eigen::VectorXd& nu,
                                                      bool full_covariance) const
{
  if (nu.size() != n_sign_)
    throw ShapeError("sign latent vector has the wrong length");

  Moments out;
  const auto p = static_cast<Eigen::Index>(test.size());
  Eigen::VectorXd prior_var(p);
  for (Eigen::Index j = 0; j < p; ++j)
    prior_var[j] = site_cov(test[j], test[j], hp_);

  if (sites_.empty()) {
    out.mean = Eigen::VectorXd::Zero(p);
    out.variance = prior_var;
    if (full_covariance)
      out.covariance = cov_matrix(test, hp_);
    return out;
  }

  const Eigen::MatrixXd kx = cross_cov(sites_, test, hp_);
  const Eigen::MatrixXd v = factor_.solve_lower(kx);
  Eigen::VectorXd whitened(n_gaussian_ + n_sign_);
  whitened << whitened_y_, nu;
  out.mean = v.transpose() * whitened;
  out.variance = (prior_var - v.colwise().squaredNorm().transpose()).cwiseMax(0.0);
  if (full_covariance)
    out.covariance = cov_matrix(test, hp_) - v.transpose() * v;
  return out;
}

PredictiveDistribution condition_gaussian(const ObservationSet& train,
                                          const std::vector<Site>& test,
                                          const Hyperparameters& hp)
{
  if (train.has_sign())
    throw DomainError("condition_gaussian requires an empty sign set");
  const ObservationSystem sys = build_system(train);
  const ConditionedSystem cs(sys, hp);
  auto m = cs.moments(test, Eigen::VectorXd(0), true);

  PredictiveDistribution out;
  out.mean = std::move(m.mean);
  out.sd = m.variance.cwiseSqrt();
  out.lower95 = out.mean - 1.96 * out.sd;
  out.upper95 = out.mean + 1.96 * out.sd;
  out.covariance = std::move(m.covariance);
  return out;
}

}  // namespace monogp
