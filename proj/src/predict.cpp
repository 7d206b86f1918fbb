#include <algorithm>
#include <cmath>
#include <random>

#include "monogp/errors.hpp"
#include "monogp/inference.hpp"
#include "monogp/random.hpp"

namespace monogp {

namespace {

std::vector<std::size_t> even_subset(std::size_t total, std::size_t max_count)
{
  std::vector<std::size_t> idx;
  if (max_count == 0 || total <= max_count) {
    for (std::size_t i = 0; i < total; ++i)
      idx.push_back(i);
    return idx;
  }
  for (std::size_t k = 0; k < max_count; ++k)
    idx.push_back(k * total / max_count);
  return idx;
}

// Type-7 sample quantile.
double quantile(std::vector<double> v, double q)
{
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

PredictiveMoments predictive_moments(const PosteriorSamples& samples, const ObservationSet& obs,
                                     const std::vector<Site>& test, const PredictOptions& options)
{
  const auto draws = samples.flat();
  if (draws.empty())
    throw DomainError("predict needs at least one posterior draw");
  const ObservationSystem sys = build_system(obs);
  const std::vector<std::size_t> chosen = even_subset(draws.size(), options.max_draws);

  const auto rows = static_cast<Eigen::Index>(chosen.size());
  const auto cols = static_cast<Eigen::Index>(test.size());
  PredictiveMoments out;
  out.mean.resize(rows, cols);
  out.variance.resize(rows, cols);
  out.noise = Eigen::MatrixXd::Zero(rows, cols);

  for (Eigen::Index r = 0; r < rows; ++r) {
    const PosteriorDraw& d = *draws[chosen[static_cast<std::size_t>(r)]];
    const ConditionedSystem cs(sys, d.hp);
    Eigen::VectorXd nu(0);
    if (sys.sign_count() > 0) {
      if (d.latent_f_prime.size() != sys.sign_count())
        throw ShapeError("posterior draws carry " + std::to_string(d.latent_f_prime.size())
                         + " sign latents, observation set has "
                         + std::to_string(sys.sign_count()));
      nu = cs.whiten(d.latent_f_prime);
    }
    const auto m = cs.moments(test, nu);
    out.mean.row(r) = m.mean.transpose();
    out.variance.row(r) = m.variance.transpose();
    if (options.target == PredictTarget::observation)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (!test[static_cast<std::size_t>(j)].is_derivative())
          out.noise(r, j) = d.hp.sigma * d.hp.sigma;
  }
  return out;
}

PredictiveDistribution summarize_moments(const PredictiveMoments& moments, bool sign_active,
                                         std::uint64_t seed, bool keep_draws)
{
  const Eigen::Index rows = moments.mean.rows();
  const Eigen::Index cols = moments.mean.cols();
  if (rows == 0)
    throw DomainError("no predictive draws to summarize");

  PredictiveDistribution out;
  out.mean = moments.mean.colwise().mean().transpose();
  const Eigen::MatrixXd centered = moments.mean.rowwise() - out.mean.transpose();
  const Eigen::VectorXd between = centered.colwise().squaredNorm().transpose() / rows;
  const Eigen::VectorXd within = (moments.variance + moments.noise).colwise().mean().transpose();
  out.sd = (between + within).cwiseMax(0.0).cwiseSqrt();

  Eigen::MatrixXd draws;
  if (sign_active || keep_draws) {
    Rng rng = make_rng(seed, 0xd4a3);
    std::normal_distribution<double> normal;
    draws.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index j = 0; j < cols; ++j)
        draws(r, j) = moments.mean(r, j)
                      + std::sqrt(moments.variance(r, j) + moments.noise(r, j)) * normal(rng);
  }

  if (sign_active) {
    out.lower95.resize(cols);
    out.upper95.resize(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::vector<double> col(draws.col(j).data(), draws.col(j).data() + rows);
      out.lower95[j] = quantile(col, 0.025);
      out.upper95[j] = quantile(std::move(col), 0.975);
    }
  } else {
    out.lower95 = out.mean - 1.96 * out.sd;
    out.upper95 = out.mean + 1.96 * out.sd;
  }
  if (keep_draws)
    out.draws = std::move(draws);
  return out;
}

PredictiveDistribution predict(const PosteriorSamples& samples, const ObservationSet& obs,
                               const std::vector<Site>& test, const PredictOptions& options)
{
  const PredictiveMoments m = predictive_moments(samples, obs, test, options);
  return summarize_moments(m, obs.has_sign(), options.seed, options.keep_draws);
}

}  // namespace monogp
