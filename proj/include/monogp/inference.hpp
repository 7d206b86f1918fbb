#pragma once

// Posterior sampling over hyperparameters and sign-constrained derivative
// latents, exact Gaussian conditioning, and predictive distributions.
//
// Value latents f are integrated out analytically everywhere: every
// Gaussian row (regular data, zero-start and saturation anchors) is a
// noisy linear observation of the joint GP. Only the derivative values at
// sign sites, c = f'_C, are sampled, and they are parameterized as
//
//   c = m(theta) + L_C(theta) nu,   nu ~ N(0, I) a priori,
//
// with m and L_C the conditional mean and Cholesky factor of c given the
// Gaussian rows. Elliptical slice sampling updates nu; random-walk
// Metropolis updates log(theta) with nu held fixed.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "monogp/kernel.hpp"
#include "monogp/linalg.hpp"
#include "monogp/model.hpp"

namespace monogp {

/// Factorization of K([G; C]) + diag(noise_G, 0) for one hyperparameter
/// value, where G are the Gaussian rows and C the sign sites.
class ConditionedSystem
{
public:
  ConditionedSystem(const ObservationSystem& sys, const Hyperparameters& hp,
                    const JitterPolicy& policy = {});

  Eigen::Index gaussian_count() const noexcept { return n_gaussian_; }
  Eigen::Index sign_count() const noexcept { return n_sign_; }
  double jitter() const noexcept { return factor_.jitter; }

  /// log N(y_G | 0, K_GG + Sigma).
  double log_marginal() const noexcept { return log_marginal_; }

  const Eigen::VectorXd& sign_mean() const noexcept { return sign_mean_; }
  auto sign_factor() const { return factor_.lower.bottomRightCorner(n_sign_, n_sign_); }

  /// c = m + L_C nu
  Eigen::VectorXd sign_values(const Eigen::VectorXd& nu) const;
  /// nu = L_C^{-1} (c - m)
  Eigen::VectorXd whiten(const Eigen::VectorXd& c) const;
  /// Sum of log Phi(z c / v) at c = m + L_C nu.
  double sign_log_lik(const Eigen::VectorXd& nu) const;

  struct Moments
  {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    Eigen::MatrixXd covariance;  ///< empty unless requested
  };

  /// Gaussian conditional of `test` given y_G and c(nu).
  Moments moments(std::span<const Site> test, const Eigen::VectorXd& nu,
                  bool full_covariance = false) const;

private:
  Hyperparameters hp_;
  Eigen::VectorXd sign_z_;
  double strictness_ = kDefaultStrictness;
  std::vector<Site> sites_;
  CholeskyFactor factor_;
  Eigen::Index n_gaussian_ = 0;
  Eigen::Index n_sign_ = 0;
  Eigen::VectorXd whitened_y_;
  Eigen::VectorXd sign_mean_;
  double log_marginal_ = 0.0;
};

struct PredictiveDistribution
{
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd lower95;
  Eigen::VectorXd upper95;
  /// Full covariance on the exact single-hyperparameter path; empty otherwise.
  Eigen::MatrixXd covariance;
  /// draws x points, when kept.
  std::optional<Eigen::MatrixXd> draws;
};

/// Exact Gaussian conditional of latent values at `test` given the
/// Gaussian rows of `train`; intervals at +-1.96 sd. The sign set must be empty.
PredictiveDistribution condition_gaussian(const ObservationSet& train,
                                          const std::vector<Site>& test,
                                          const Hyperparameters& hp);

struct LatentSamplerOptions
{
  std::size_t warmup = 200;
  std::size_t thin = 1;
};

struct LatentDraws
{
  LatentLayout layout;
  /// draws x layout.value_points
  Eigen::MatrixXd f;
  /// draws x layout.derivative_points
  Eigen::MatrixXd f_prime;
};

/// Elliptical slice sampling of (f, f') for fixed hyperparameters under the
/// probit sign likelihood. Deterministic given `seed`.
LatentDraws sample_latents_constrained(const ObservationSet& obs, const Hyperparameters& hp,
                                       std::size_t n_draws, std::uint64_t seed,
                                       const LatentSamplerOptions& options = {});

struct PosteriorDraw
{
  Hyperparameters hp;
  /// Draw of f at layout value sites; empty unless SamplerConfig::store_value_latents.
  Eigen::VectorXd latent_f;
  /// Derivative values at the sign sites, in ObservationSet::sign order.
  Eigen::VectorXd latent_f_prime;
};

/// Starting point for a chain and an already adapted proposal.
struct WarmStart
{
  std::vector<Eigen::VectorXd> log_params;  ///< one per chain, cycled
  Eigen::MatrixXd proposal_chol;
  double log_scale = 0.0;
};

struct SamplerConfig
{
  std::size_t chains = 3;
  std::size_t warmup = 1000;
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  /// Elliptical slice sweeps per iteration when a sign set is present.
  std::size_t ess_steps = 1;
  double target_accept = 0.3;
  /// Half-width of the uniform log-scale perturbation of initial values.
  double init_spread = 0.5;
  /// Per iteration, also propose a lengthscale redrawn from its prior and an
  /// exchange of two lengthscales. Lets chains move between modes that
  /// attribute the spatial variation to different inputs.
  bool mode_jumps = true;
  bool store_value_latents = false;
  bool parallel = false;
  std::optional<WarmStart> warm_start;

  void validate() const;
};

struct PosteriorSamples
{
  std::vector<std::vector<PosteriorDraw>> chains;
  std::size_t warmup_count = 0;
  std::uint64_t seed = 0;
  std::vector<double> acceptance_rate;
  /// Final adapted proposal, reusable as a WarmStart.
  Eigen::MatrixXd proposal_chol;
  double log_scale = 0.0;

  std::size_t draw_count() const;
  std::size_t parameter_count() const;
  std::vector<std::string> parameter_names() const;
  /// Per-chain traces of parameter p (alpha, rho_1..rho_G, sigma order).
  std::vector<std::vector<double>> parameter_chains(std::size_t p) const;
  /// Draws flattened chain by chain.
  std::vector<const PosteriorDraw*> flat() const;
  WarmStart warm_start() const;
};

/// log(alpha, rho_1..rho_G, sigma)
Eigen::VectorXd to_log_params(const Hyperparameters& hp);
Hyperparameters from_log_params(const Eigen::VectorXd& phi, const std::vector<std::size_t>& groups);

/// Unnormalized log-density of log-hyperparameters (Jacobian included)
/// with latents marginalized: exact when there is no sign set.
double log_marginal_posterior(const ObservationSet& obs, const Hyperparameters& hp,
                              const PriorSpec& ps);

PosteriorSamples sample_hyperparameters(const ObservationSet& obs, const PriorSpec& ps,
                                        const std::vector<std::size_t>& groups,
                                        std::size_t group_count, const SamplerConfig& config);

enum class PredictTarget
{
  latent,
  observation,
};

struct PredictOptions
{
  PredictTarget target = PredictTarget::observation;
  /// Draws are thinned evenly down to at most this many.
  std::size_t max_draws = 400;
  std::uint64_t seed = 7;
  bool keep_draws = false;
};

/// Per hyperparameter draw Gaussian moments at the test sites; the mixture
/// over rows is the predictive distribution.
struct PredictiveMoments
{
  Eigen::MatrixXd mean;      ///< draws x points, latent conditional mean
  Eigen::MatrixXd variance;  ///< draws x points, latent conditional variance
  Eigen::MatrixXd noise;     ///< draws x points, observation noise added for the target
};

PredictiveMoments predictive_moments(const PosteriorSamples& samples, const ObservationSet& obs,
                                     const std::vector<Site>& test, const PredictOptions& options);

PredictiveDistribution summarize_moments(const PredictiveMoments& moments, bool sign_active,
                                         std::uint64_t seed, bool keep_draws);

PredictiveDistribution predict(const PosteriorSamples& samples, const ObservationSet& obs,
                               const std::vector<Site>& test, const PredictOptions& options = {});

}  // namespace monogp
