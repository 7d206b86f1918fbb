#include "monogp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "monogp/errors.hpp"

namespace monogp {

void Hyperparameters::validate() const
{
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DomainError("alpha must be positive and finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("sigma must be positive and finite");
  if (lengthscales.empty())
    throw DomainError("at least one lengthscale group is required");
  for (double rho : lengthscales)
    if (!(rho > 0.0) || !std::isfinite(rho))
      throw DomainError("lengthscales must be positive and finite");
  if (group_of_dim.empty())
    throw DomainError("lengthscale group map is empty");
  for (std::size_t g : group_of_dim)
    if (g >= lengthscales.size())
      throw DomainError("lengthscale group map references group " + std::to_string(g)
                        + " but only " + std::to_string(lengthscales.size()) + " exist");
}

Hyperparameters Hyperparameters::with_default_groups(double alpha, std::vector<double> lengthscales,
                                                     double sigma)
{
  Hyperparameters hp;
  hp.alpha = alpha;
  hp.lengthscales = std::move(lengthscales);
  hp.group_of_dim.assign(kDefaultGroups.begin(), kDefaultGroups.end());
  hp.sigma = sigma;
  return hp;
}

Hyperparameters Hyperparameters::isotropic_groups(std::size_t dims, double alpha,
                                                  std::vector<double> lengthscales, double sigma)
{
  Hyperparameters hp;
  hp.alpha = alpha;
  hp.lengthscales = std::move(lengthscales);
  hp.group_of_dim.resize(dims);
  for (std::size_t d = 0; d < dims; ++d)
    hp.group_of_dim[d] = d;
  hp.sigma = sigma;
  return hp;
}

namespace {

void check_point(const InputPoint& x, const Hyperparameters& hp)
{
  if (x.values.size() != hp.dimension())
    throw ShapeError("input point has " + std::to_string(x.values.size())
                     + " dimensions, hyperparameters expect " + std::to_string(hp.dimension()));
}

void check_wrt(std::size_t g, const Hyperparameters& hp)
{
  if (g >= hp.dimension())
    throw ShapeError("derivative dimension " + std::to_string(g) + " out of range");
}

// Precomputed 1/rho_d^2 per input dimension, so matrix assembly does no
// per-entry group lookups.
struct InvSq
{
  std::vector<double> w;
  explicit InvSq(const Hyperparameters& hp) : w(hp.dimension())
  {
    for (std::size_t d = 0; d < w.size(); ++d) {
      const double rho = hp.lengthscale_of_dim(d);
      w[d] = 1.0 / (rho * rho);
    }
  }
};

double base(const std::vector<double>& a, const std::vector<double>& b, const InvSq& inv,
            double alpha2)
{
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += inv.w[d] * diff * diff;
  }
  return alpha2 * std::exp(-0.5 * s);
}

double site_cov_impl(const Site& a, const Site& b, const InvSq& inv, double alpha2)
{
  const auto& xa = a.point.values;
  const auto& xb = b.point.values;
  const double k = base(xa, xb, inv, alpha2);
  if (!a.wrt && !b.wrt)
    return k;
  if (a.wrt && !b.wrt) {
    const std::size_t g = *a.wrt;
    return k * (-inv.w[g] * (xa[g] - xb[g]));
  }
  if (!a.wrt && b.wrt) {
    const std::size_t h = *b.wrt;
    return k * (inv.w[h] * (xa[h] - xb[h]));
  }
  const std::size_t g = *a.wrt;
  const std::size_t h = *b.wrt;
  const double delta = g == h ? 1.0 : 0.0;
  return k * inv.w[g] * (delta - inv.w[h] * (xa[h] - xb[h]) * (xa[g] - xb[g]));
}

}  // namespace

double se_ard_cov(const InputPoint& x1, const InputPoint& x2, const Hyperparameters& hp)
{
  hp.validate();
  check_point(x1, hp);
  check_point(x2, hp);
  return base(x1.values, x2.values, InvSq(hp), hp.alpha * hp.alpha);
}

double cov_deriv_value(const DerivativeSpec& d1, const InputPoint& x2, const Hyperparameters& hp)
{
  hp.validate();
  check_point(d1.point, hp);
  check_point(x2, hp);
  check_wrt(d1.wrt_dimension, hp);
  return site_cov_impl(Site::derivative(d1), Site::value(x2), InvSq(hp), hp.alpha * hp.alpha);
}

double cov_deriv_deriv(const DerivativeSpec& d1, const DerivativeSpec& d2, const Hyperparameters& hp)
{
  hp.validate();
  check_point(d1.point, hp);
  check_point(d2.point, hp);
  check_wrt(d1.wrt_dimension, hp);
  check_wrt(d2.wrt_dimension, hp);
  return site_cov_impl(Site::derivative(d1), Site::derivative(d2), InvSq(hp),
                       hp.alpha * hp.alpha);
}

double site_cov(const Site& a, const Site& b, const Hyperparameters& hp)
{
  hp.validate();
  check_point(a.point, hp);
  check_point(b.point, hp);
  if (a.wrt)
    check_wrt(*a.wrt, hp);
  if (b.wrt)
    check_wrt(*b.wrt, hp);
  return site_cov_impl(a, b, InvSq(hp), hp.alpha * hp.alpha);
}

namespace {

void check_sites(std::span<const Site> sites, const Hyperparameters& hp)
{
  for (const auto& s : sites) {
    check_point(s.point, hp);
    if (s.wrt)
      check_wrt(*s.wrt, hp);
  }
}

}  // namespace

Eigen::MatrixXd cov_matrix(std::span<const Site> sites, const Hyperparameters& hp)
{
  hp.validate();
  check_sites(sites, hp);
  const InvSq inv(hp);
  const double alpha2 = hp.alpha * hp.alpha;
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = site_cov_impl(sites[i], sites[j], inv, alpha2);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd cross_cov(std::span<const Site> rows, std::span<const Site> cols,
                          const Hyperparameters& hp)
{
  hp.validate();
  check_sites(rows, hp);
  check_sites(cols, hp);
  const InvSq inv(hp);
  const double alpha2 = hp.alpha * hp.alpha;
  Eigen::MatrixXd k(rows.size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      k(i, j) = site_cov_impl(rows[i], cols[j], inv, alpha2);
  return k;
}

Eigen::MatrixXd kronecker_cov(const std::vector<std::vector<double>>& spatial_inputs,
                              const std::vector<double>& temporal_inputs,
                              const Hyperparameters& hp)
{
  hp.validate();
  if (spatial_inputs.empty() || temporal_inputs.empty())
    throw DomainError("kronecker_cov needs at least one spatial row and one time value");
  const std::size_t dims = hp.dimension();
  if (dims < 2)
    throw ShapeError("kronecker_cov needs at least one spatial and one temporal dimension");
  const std::size_t ds = dims - 1;
  for (const auto& row : spatial_inputs)
    if (row.size() != ds)
      throw ShapeError("spatial input has " + std::to_string(row.size()) + " entries, expected "
                       + std::to_string(ds));

  const InvSq inv(hp);
  const auto n = static_cast<Eigen::Index>(spatial_inputs.size());
  const auto t = static_cast<Eigen::Index>(temporal_inputs.size());

  Eigen::MatrixXd ks(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < ds; ++d) {
        const double diff = spatial_inputs[i][d] - spatial_inputs[j][d];
        s += inv.w[d] * diff * diff;
      }
      ks(i, j) = hp.alpha * hp.alpha * std::exp(-0.5 * s);
    }

  Eigen::MatrixXd kt(t, t);
  const double wt = inv.w[ds];
  for (Eigen::Index a = 0; a < t; ++a)
    for (Eigen::Index b = 0; b < t; ++b) {
      const double diff = temporal_inputs[a] - temporal_inputs[b];
      kt(a, b) = std::exp(-0.5 * wt * diff * diff);
    }

  Eigen::MatrixXd k(n * t, n * t);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      k.block(i * t, j * t, t, t) = ks(i, j) * kt;
  return k;
}

Eigen::MatrixXd JointCovariance::full() const
{
  const Eigen::Index nf = ff.rows();
  const Eigen::Index nd = fpfp.rows();
  Eigen::MatrixXd k(nf + nd, nf + nd);
  k.topLeftCorner(nf, nf) = ff;
  k.topRightCorner(nf, nd) = ffp;
  k.bottomLeftCorner(nd, nf) = fpf;
  k.bottomRightCorner(nd, nd) = fpfp;
  return k;
}

JointCovariance assemble_joint(const std::vector<InputPoint>& train_points,
                               const std::vector<DerivativeSpec>& deriv_points,
                               const Hyperparameters& hp, double jitter)
{
  if (train_points.empty() && deriv_points.empty())
    throw DomainError("assemble_joint needs at least one value or derivative point");
  if (!(jitter >= 0.0))
    throw DomainError("jitter must be non-negative");

  JointCovariance joint;
  joint.order.reserve(train_points.size() + deriv_points.size());
  for (const auto& p : train_points)
    joint.order.push_back(Site::value(p));
  for (const auto& d : deriv_points)
    joint.order.push_back(Site::derivative(d));

  const Eigen::MatrixXd k = cov_matrix(joint.order, hp);
  JitterPolicy policy;
  policy.initial = jitter;
  policy.max = std::max(jitter, policy.max);
  joint.factor = robust_cholesky(k, policy);
  joint.jitter = joint.factor.jitter;

  const auto nf = static_cast<Eigen::Index>(train_points.size());
  const auto nd = static_cast<Eigen::Index>(deriv_points.size());
  joint.ff = k.topLeftCorner(nf, nf);
  joint.ffp = k.topRightCorner(nf, nd);
  joint.fpf = k.bottomLeftCorner(nd, nf);
  joint.fpfp = k.bottomRightCorner(nd, nd);
  joint.ff.diagonal().array() += joint.jitter;
  joint.fpfp.diagonal().array() += joint.jitter;
  return joint;
}

}  // namespace monogp
