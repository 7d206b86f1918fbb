#pragma once

// Observation models (Gaussian noise, near-Dirac anchors, probit sign
// likelihood), hyperparameter priors and the unnormalized log-posterior.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "monogp/kernel.hpp"

namespace monogp {

/// Variance standing in for the Dirac observation model of anchors.
inline constexpr double kDiracVariance = 1e-10;
inline constexpr double kDefaultStrictness = 1e-4;

struct RegularObservation
{
  InputPoint point;
  double y = 0.0;
};

struct SignObservation
{
  DerivativeSpec spec;
  int z = 1;
};

struct ObservationSet
{
  std::vector<RegularObservation> regular;
  /// Zero-start anchors, implied y = 0.
  std::vector<InputPoint> zero_start;
  /// Saturation anchors, implied derivative = 0.
  std::vector<DerivativeSpec> saturation;
  std::vector<SignObservation> sign;
  double strictness = kDefaultStrictness;

  bool has_sign() const noexcept { return !sign.empty(); }
  std::size_t input_dimension() const;
  /// Throws ShapeError / DomainError on inconsistent dimensions, z not in
  /// {-1, +1} or non-positive strictness.
  void validate() const;
  /// Same set with the saturation and sign sets dropped.
  ObservationSet without_derivatives() const;
};

struct PriorSpec
{
  double alpha_scale = 1.0;
  double sigma_scale = 1.0;
  /// Gamma shape/rate per lengthscale group; a single entry applies to all.
  std::vector<double> lengthscale_shape{1.0};
  std::vector<double> lengthscale_rate{0.1};

  void validate() const;
  double shape(std::size_t group) const;
  double rate(std::size_t group) const;
};

/// Unique latent sites of an observation set, ordered location-major,
/// time-minor; each observation references its latent by index.
struct LatentLayout
{
  std::vector<InputPoint> value_points;
  std::vector<DerivativeSpec> derivative_points;
  std::vector<std::size_t> regular_index;
  std::vector<std::size_t> zero_start_index;
  std::vector<std::size_t> saturation_index;
  std::vector<std::size_t> sign_index;
};

LatentLayout layout_latents(const ObservationSet& obs);

/// Gaussian rows (regular + anchors) and sign rows as kernel sites, with
/// the targets and the anchor flags needed to build the noise diagonal.
struct ObservationSystem
{
  std::vector<Site> gaussian_sites;
  Eigen::VectorXd targets;
  std::vector<bool> anchored;
  std::vector<Site> sign_sites;
  Eigen::VectorXd sign_z;
  double strictness = kDefaultStrictness;

  Eigen::Index gaussian_count() const noexcept { return targets.size(); }
  Eigen::Index sign_count() const noexcept { return sign_z.size(); }
  /// sigma^2 on regular rows, kDiracVariance on anchors.
  Eigen::VectorXd noise(double sigma) const;
};

ObservationSystem build_system(const ObservationSet& obs);

/// Stable log Phi(x); asymptotic tail series below x = -8.
double log_normal_cdf(double x);

double log_lik_gaussian(std::span<const double> y, std::span<const double> f, double sigma);
double log_lik_sign(std::span<const int> z, std::span<const double> f_prime, double v);

double log_half_normal(double x, double scale);
double log_gamma_density(double x, double shape, double rate);
double log_prior(const Hyperparameters& hp, const PriorSpec& ps);

/// The four additive pieces of the log-posterior.
struct LogJointTerms
{
  double gaussian = 0.0;  ///< regular observations
  double dirac = 0.0;     ///< zero-start and saturation anchors
  double sign = 0.0;
  double gp_prior = 0.0;
  double hyper_prior = 0.0;

  double total() const noexcept { return gaussian + dirac + sign + gp_prior + hyper_prior; }
};

/// f is ordered as layout_latents(obs).value_points, f_prime as
/// layout_latents(obs).derivative_points.
LogJointTerms log_joint_terms(const ObservationSet& obs, std::span<const double> f,
                              std::span<const double> f_prime, const Hyperparameters& hp,
                              const PriorSpec& ps);

double log_joint(const ObservationSet& obs, std::span<const double> f,
                 std::span<const double> f_prime, const Hyperparameters& hp,
                 const PriorSpec& ps);

}  // namespace monogp
