#include "monogp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <tuple>

#include "monogp/errors.hpp"

namespace monogp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

bool same_location_order(const InputPoint& a, const InputPoint& b)
{
  return std::tie(a.spatial_index, a.time_index) < std::tie(b.spatial_index, b.time_index);
}

}  // namespace

std::size_t ObservationSet::input_dimension() const
{
  if (!regular.empty())
    return regular.front().point.values.size();
  if (!zero_start.empty())
    return zero_start.front().values.size();
  if (!saturation.empty())
    return saturation.front().point.values.size();
  if (!sign.empty())
    return sign.front().spec.point.values.size();
  return 0;
}

void ObservationSet::validate() const
{
  const std::size_t dims = input_dimension();
  auto check = [dims](const InputPoint& p) {
    if (p.values.size() != dims)
      throw ShapeError("observation set mixes input dimensions " + std::to_string(dims) + " and "
                       + std::to_string(p.values.size()));
  };
  for (const auto& r : regular)
    check(r.point);
  for (const auto& p : zero_start)
    check(p);
  for (const auto& d : saturation) {
    check(d.point);
    if (d.wrt_dimension >= dims)
      throw ShapeError("saturation derivative dimension out of range");
  }
  for (const auto& s : sign) {
    check(s.spec.point);
    if (s.spec.wrt_dimension >= dims)
      throw ShapeError("sign derivative dimension out of range");
    if (s.z != 1 && s.z != -1)
      throw DomainError("sign observations must be +1 or -1");
  }
  if (!(strictness > 0.0))
    throw DomainError("sign strictness v must be positive");
}

ObservationSet ObservationSet::without_derivatives() const
{
  ObservationSet out;
  out.regular = regular;
  out.zero_start = zero_start;
  out.strictness = strictness;
  return out;
}

void PriorSpec::validate() const
{
  if (!(alpha_scale > 0.0) || !(sigma_scale > 0.0))
    throw DomainError("half-normal prior scales must be positive");
  if (lengthscale_shape.empty() || lengthscale_rate.empty())
    throw DomainError("lengthscale prior needs at least one shape and rate");
  for (double v : lengthscale_shape)
    if (!(v > 0.0))
      throw DomainError("gamma shapes must be positive");
  for (double v : lengthscale_rate)
    if (!(v > 0.0))
      throw DomainError("gamma rates must be positive");
}

double PriorSpec::shape(std::size_t group) const
{
  return lengthscale_shape.size() == 1 ? lengthscale_shape.front() : lengthscale_shape.at(group);
}

double PriorSpec::rate(std::size_t group) const
{
  return lengthscale_rate.size() == 1 ? lengthscale_rate.front() : lengthscale_rate.at(group);
}

LatentLayout layout_latents(const ObservationSet& obs)
{
  LatentLayout layout;

  // Value sites: regular points and zero-start anchors, deduplicated by
  // their coordinates.
  {
    std::vector<InputPoint> candidates;
    for (const auto& r : obs.regular)
      candidates.push_back(r.point);
    for (const auto& p : obs.zero_start)
      candidates.push_back(p);
    std::stable_sort(candidates.begin(), candidates.end(), same_location_order);
    std::map<std::vector<double>, std::size_t> index;
    for (auto& p : candidates)
      if (index.emplace(p.values, layout.value_points.size()).second)
        layout.value_points.push_back(std::move(p));
    for (const auto& r : obs.regular)
      layout.regular_index.push_back(index.at(r.point.values));
    for (const auto& p : obs.zero_start)
      layout.zero_start_index.push_back(index.at(p.values));
  }

  {
    std::vector<DerivativeSpec> candidates;
    for (const auto& d : obs.saturation)
      candidates.push_back(d);
    for (const auto& s : obs.sign)
      candidates.push_back(s.spec);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const DerivativeSpec& a, const DerivativeSpec& b) {
                       return same_location_order(a.point, b.point);
                     });
    using Key = std::pair<std::vector<double>, std::size_t>;
    std::map<Key, std::size_t> index;
    for (auto& d : candidates)
      if (index.emplace(Key{d.point.values, d.wrt_dimension}, layout.derivative_points.size())
              .second)
        layout.derivative_points.push_back(std::move(d));
    for (const auto& d : obs.saturation)
      layout.saturation_index.push_back(index.at(Key{d.point.values, d.wrt_dimension}));
    for (const auto& s : obs.sign)
      layout.sign_index.push_back(index.at(Key{s.spec.point.values, s.spec.wrt_dimension}));
  }
  return layout;
}

Eigen::VectorXd ObservationSystem::noise(double sigma) const
{
  Eigen::VectorXd n(targets.size());
  for (Eigen::Index i = 0; i < n.size(); ++i)
    n[i] = anchored[i] ? kDiracVariance : sigma * sigma;
  return n;
}

ObservationSystem build_system(const ObservationSet& obs)
{
  obs.validate();

  struct Row
  {
    Site site;
    double target;
    bool anchored;
  };
  std::vector<Row> rows;
  rows.reserve(obs.regular.size() + obs.zero_start.size() + obs.saturation.size());
  for (const auto& r : obs.regular)
    rows.push_back({Site::value(r.point), r.y, false});
  for (const auto& p : obs.zero_start)
    rows.push_back({Site::value(p), 0.0, true});
  for (const auto& d : obs.saturation)
    rows.push_back({Site::derivative(d), 0.0, true});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return same_location_order(a.site.point, b.site.point);
  });

  ObservationSystem sys;
  sys.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sys.gaussian_sites.push_back(std::move(rows[i].site));
    sys.targets[static_cast<Eigen::Index>(i)] = rows[i].target;
    sys.anchored.push_back(rows[i].anchored);
  }
  sys.sign_z.resize(static_cast<Eigen::Index>(obs.sign.size()));
  for (std::size_t i = 0; i < obs.sign.size(); ++i) {
    sys.sign_sites.push_back(Site::derivative(obs.sign[i].spec));
    sys.sign_z[static_cast<Eigen::Index>(i)] = obs.sign[i].z;
  }
  sys.strictness = obs.strictness;
  return sys;
}

double log_normal_cdf(double x)
{
  if (std::isnan(x))
    return x;
  if (x > 0.0)
    return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x >= -8.0)
    return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Phi(x) = phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
  const double x2 = x * x;
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) / x2;
    series += term;
  }
  return -0.5 * x2 - std::log(-x) - 0.5 * kLog2Pi + std::log(series);
}

double log_lik_gaussian(std::span<const double> y, std::span<const double> f, double sigma)
{
  if (y.size() != f.size())
    throw ShapeError("log_lik_gaussian: y and f differ in length");
  if (!(sigma > 0.0))
    throw DomainError("log_lik_gaussian: sigma must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = (y[i] - f[i]) / sigma;
    s += -0.5 * r * r;
  }
  return s - static_cast<double>(y.size()) * (std::log(sigma) + 0.5 * kLog2Pi);
}

double log_lik_sign(std::span<const int> z, std::span<const double> f_prime, double v)
{
  if (z.size() != f_prime.size())
    throw ShapeError("log_lik_sign: z and f' differ in length");
  if (!(v > 0.0))
    throw DomainError("log_lik_sign: v must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    s += log_normal_cdf(z[i] * f_prime[i] / v);
  return s;
}

double log_half_normal(double x, double scale)
{
  if (x < 0.0)
    return -std::numeric_limits<double>::infinity();
  const double r = x / scale;
  return std::log(2.0) - std::log(scale) - 0.5 * kLog2Pi - 0.5 * r * r;
}

double log_gamma_density(double x, double shape, double rate)
{
  if (!(x > 0.0))
    return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_prior(const Hyperparameters& hp, const PriorSpec& ps)
{
  hp.validate();
  ps.validate();
  double s = log_half_normal(hp.alpha, ps.alpha_scale) + log_half_normal(hp.sigma, ps.sigma_scale);
  for (std::size_t g = 0; g < hp.lengthscales.size(); ++g)
    s += log_gamma_density(hp.lengthscales[g], ps.shape(g), ps.rate(g));
  return s;
}

LogJointTerms log_joint_terms(const ObservationSet& obs, std::span<const double> f,
                              std::span<const double> f_prime, const Hyperparameters& hp,
                              const PriorSpec& ps)
{
  obs.validate();
  const LatentLayout layout = layout_latents(obs);
  if (f.size() != layout.value_points.size())
    throw ShapeError("log_joint: f has " + std::to_string(f.size()) + " entries, layout has "
                     + std::to_string(layout.value_points.size()) + " value sites");
  if (f_prime.size() != layout.derivative_points.size())
    throw ShapeError("log_joint: f' has " + std::to_string(f_prime.size())
                     + " entries, layout has " + std::to_string(layout.derivative_points.size())
                     + " derivative sites");

  LogJointTerms terms;

  std::vector<double> y;
  std::vector<double> fy;
  for (std::size_t i = 0; i < obs.regular.size(); ++i) {
    y.push_back(obs.regular[i].y);
    fy.push_back(f[layout.regular_index[i]]);
  }
  if (!y.empty())
    terms.gaussian = log_lik_gaussian(y, fy, hp.sigma);

  const double dirac_sd = std::sqrt(kDiracVariance);
  std::vector<double> anchored;
  for (std::size_t idx : layout.zero_start_index)
    anchored.push_back(f[idx]);
  for (std::size_t idx : layout.saturation_index)
    anchored.push_back(f_prime[idx]);
  if (!anchored.empty()) {
    const std::vector<double> zeros(anchored.size(), 0.0);
    terms.dirac = log_lik_gaussian(zeros, anchored, dirac_sd);
  }

  if (obs.has_sign()) {
    std::vector<int> z;
    std::vector<double> fp;
    for (std::size_t i = 0; i < obs.sign.size(); ++i) {
      z.push_back(obs.sign[i].z);
      fp.push_back(f_prime[layout.sign_index[i]]);
    }
    terms.sign = log_lik_sign(z, fp, obs.strictness);
  }

  const JointCovariance joint = assemble_joint(layout.value_points, layout.derivative_points, hp);
  Eigen::VectorXd u(static_cast<Eigen::Index>(f.size() + f_prime.size()));
  for (std::size_t i = 0; i < f.size(); ++i)
    u[static_cast<Eigen::Index>(i)] = f[i];
  for (std::size_t i = 0; i < f_prime.size(); ++i)
    u[static_cast<Eigen::Index>(f.size() + i)] = f_prime[i];
  const Eigen::VectorXd w = joint.factor.solve_lower(u);
  terms.gp_prior = -0.5 * w.squaredNorm() - 0.5 * joint.factor.log_det()
                   - 0.5 * static_cast<double>(u.size()) * kLog2Pi;

  terms.hyper_prior = log_prior(hp, ps);
  return terms;
}

double log_joint(const ObservationSet& obs, std::span<const double> f,
                 std::span<const double> f_prime, const Hyperparameters& hp, const PriorSpec& ps)
{
  return log_joint_terms(obs, f, f_prime, hp, ps).total();
}

}  // namespace monogp
