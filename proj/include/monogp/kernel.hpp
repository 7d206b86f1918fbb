#pragma once

// Exponentiated-quadratic ARD covariance with first-order derivative
// cross-covariances, the separable space-time form and joint block assembly.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "monogp/linalg.hpp"

namespace monogp {

/// Input dimension order used throughout: H, S, I, Sx, Sy, t.
inline constexpr std::size_t kInputDims = 6;
inline constexpr std::size_t kTimeDim = 5;
/// Sx and Sy share one lengthscale; time gets the last group.
inline constexpr std::array<std::size_t, kInputDims> kDefaultGroups{0, 1, 2, 3, 3, 4};
inline constexpr std::size_t kDefaultGroupCount = 5;

struct InputPoint
{
  std::vector<double> values;
  std::size_t spatial_index = 0;
  std::size_t time_index = 0;
};

struct DerivativeSpec
{
  InputPoint point;
  std::size_t wrt_dimension = kTimeDim;
};

struct Hyperparameters
{
  double alpha = 1.0;
  std::vector<double> lengthscales;
  /// group_of_dim[d] is the index into `lengthscales` used by input dimension d.
  std::vector<std::size_t> group_of_dim;
  double sigma = 1.0;

  std::size_t dimension() const noexcept { return group_of_dim.size(); }
  double lengthscale_of_dim(std::size_t dim) const { return lengthscales[group_of_dim[dim]]; }

  /// Throws DomainError on non-positive entries or a broken group map.
  void validate() const;

  /// Five-group layout over the six default input dimensions.
  static Hyperparameters with_default_groups(double alpha, std::vector<double> lengthscales,
                                             double sigma);
  /// One lengthscale per dimension.
  static Hyperparameters isotropic_groups(std::size_t dims, double alpha,
                                          std::vector<double> lengthscales, double sigma);
};

/// A latent quantity: the function value at a point, or a partial derivative
/// of the function at a point.
struct Site
{
  InputPoint point;
  std::optional<std::size_t> wrt;

  static Site value(InputPoint p) { return {std::move(p), std::nullopt}; }
  static Site derivative(DerivativeSpec d) { return {std::move(d.point), d.wrt_dimension}; }
  bool is_derivative() const noexcept { return wrt.has_value(); }
};

double se_ard_cov(const InputPoint& x1, const InputPoint& x2, const Hyperparameters& hp);

/// Cov[df(x1)/dx1_g, f(x2)].
double cov_deriv_value(const DerivativeSpec& d1, const InputPoint& x2, const Hyperparameters& hp);

/// Cov[df(x1)/dx1_g, df(x2)/dx2_h].
double cov_deriv_deriv(const DerivativeSpec& d1, const DerivativeSpec& d2,
                       const Hyperparameters& hp);

/// Dispatches to the three kernels above.
double site_cov(const Site& a, const Site& b, const Hyperparameters& hp);

Eigen::MatrixXd cov_matrix(std::span<const Site> sites, const Hyperparameters& hp);
Eigen::MatrixXd cross_cov(std::span<const Site> rows, std::span<const Site> cols,
                          const Hyperparameters& hp);

/// K_S (x) K_T over N spatial rows and T times, rows ordered (i, t) with t
/// fastest. The last dimension of `hp` is time; alpha sits on the spatial
/// factor and the temporal factor has unit scale.
Eigen::MatrixXd kronecker_cov(const std::vector<std::vector<double>>& spatial_inputs,
                              const std::vector<double>& temporal_inputs,
                              const Hyperparameters& hp);

struct JointCovariance
{
  Eigen::MatrixXd ff;
  Eigen::MatrixXd ffp;
  Eigen::MatrixXd fpf;
  Eigen::MatrixXd fpfp;
  /// Row/column order of the full matrix: value sites, then derivative sites.
  std::vector<Site> order;
  /// Diagonal jitter included in ff and fpfp.
  double jitter = 0.0;
  CholeskyFactor factor;

  Eigen::MatrixXd full() const;
};

/// Fills all four blocks, adds jitter to the diagonal and factorizes,
/// escalating the jitter along the ladder on failure.
JointCovariance assemble_joint(const std::vector<InputPoint>& train_points,
                               const std::vector<DerivativeSpec>& deriv_points,
                               const Hyperparameters& hp, double jitter = 1e-8);

}  // namespace monogp
