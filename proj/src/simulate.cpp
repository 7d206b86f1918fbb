#include <cmath>
#include <random>

#include "monogp/data.hpp"
#include "monogp/errors.hpp"
#include "monogp/linalg.hpp"
#include "monogp/random.hpp"

namespace monogp {

namespace {

// Scaled feature means and spreads the generator targets.
constexpr double kHsiMean[3] = {5.255, 9.704, 5.155};
constexpr double kSxMean = 3.549;
constexpr double kSxSd = 0.732;
constexpr double kSyMean = 4.969;
constexpr double kSySd = 0.674;

Eigen::VectorXd draw_spatial_field(const std::vector<std::vector<double>>& features,
                                   double amplitude, double lengthscale, Rng& rng)
{
  const auto n = static_cast<Eigen::Index>(features.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (amplitude == 0.0)
    return out;
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      double d2 = 0.0;
      const auto& fa = features[static_cast<std::size_t>(a)];
      const auto& fb = features[static_cast<std::size_t>(b)];
      for (std::size_t d = 0; d < fa.size(); ++d)
        d2 += (fa[d] - fb[d]) * (fa[d] - fb[d]);
      k(a, b) = amplitude * amplitude * std::exp(-0.5 * d2 / (lengthscale * lengthscale));
    }
  const CholeskyFactor lf = robust_cholesky(k);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (Eigen::Index a = 0; a < n; ++a)
    z[a] = normal(rng);
  return lf.lower * z;
}

}  // namespace

void SimulateConfig::validate() const
{
  if (locations < 2)
    throw ConfigError("simulate needs at least 2 locations");
  if (time_points < 2)
    throw ConfigError("simulate needs at least 2 time points");
  if (!(noise_sd >= 0.0))
    throw ConfigError("noise_sd must be non-negative");
  if (!(base_rise > 0.0) || !(decay > 0.0) || !(feature_lengthscale > 0.0)
      || !(pixel_scale > 0.0))
    throw ConfigError("base_rise, decay, feature_lengthscale and pixel_scale must be positive");
  if (!(rise_log_sd >= 0.0) || !(decay_log_sd >= 0.0))
    throw ConfigError("rise_log_sd and decay_log_sd must be non-negative");
  for (double s : hsi_scale)
    if (!(s > 0.0))
      throw ConfigError("hsi_scale entries must be positive");
}

RawDataset simulate(const SimulateConfig& config, std::uint64_t seed)
{
  config.validate();
  Rng rng = make_rng(seed, 0x5171);
  std::normal_distribution<double> normal;

  std::vector<std::vector<double>> scaled(config.locations);
  for (auto& f : scaled) {
    f.resize(5);
    for (int k = 0; k < 3; ++k)
      f[static_cast<std::size_t>(k)] = kHsiMean[k] + normal(rng);
    f[3] = kSxMean + kSxSd * normal(rng);
    f[4] = kSyMean + kSySd * normal(rng);
  }
  const Eigen::VectorXd g =
      draw_spatial_field(scaled, config.rise_log_sd, config.feature_lengthscale, rng);
  const Eigen::VectorXd h =
      draw_spatial_field(scaled, config.decay_log_sd, config.feature_lengthscale, rng);

  RawDataset ds;
  for (std::size_t loc = 0; loc < config.locations; ++loc) {
    const auto& f = scaled[loc];
    const auto li = static_cast<Eigen::Index>(loc);
    const double rise = config.base_rise * std::exp(g[li]);
    const double lambda = config.decay * std::exp(h[li]);
    const double first = rise * (1.0 - std::exp(-lambda));
    double level = 0.0;
    for (std::size_t t = 0; t < config.time_points; ++t) {
      if (t > 0)
        level += first * std::exp(-lambda * static_cast<double>(t - 1));
      RawRow r;
      r.location_id = static_cast<long>(loc + 1);
      r.h = f[0] * config.hsi_scale[0];
      r.s = f[1] * config.hsi_scale[1];
      r.i = f[2] * config.hsi_scale[2];
      r.sx = f[3] * config.pixel_scale;
      r.sy = f[4] * config.pixel_scale;
      r.t = static_cast<double>(t);
      r.y = level;
      ds.rows.push_back(r);
    }
  }
  if (config.noise_sd > 0.0)
    for (auto& r : ds.rows)
      r.y += config.noise_sd * normal(rng);
  ds.validate();
  return ds;
}

StandardizedDataset simulate_gp_prior(std::size_t locations, std::size_t time_points,
                                      const Hyperparameters& hp, std::uint64_t seed)
{
  hp.validate();
  if (hp.dimension() != kInputDims)
    throw ShapeError("simulate_gp_prior expects " + std::to_string(kInputDims) + " input dims");
  if (locations < 2 || time_points < 2)
    throw ConfigError("simulate_gp_prior needs at least 2 locations and 2 time points");
  Rng rng = make_rng(seed, 0x9a1f);
  std::normal_distribution<double> normal;

  StandardizedDataset ds;
  for (std::size_t t = 0; t < time_points; ++t)
    ds.times.push_back(static_cast<double>(t));
  std::vector<Site> sites;
  for (std::size_t loc = 0; loc < locations; ++loc) {
    ds.locations.push_back(static_cast<long>(loc + 1));
    std::vector<double> feat(kInputDims - 1);
    for (double& v : feat)
      v = normal(rng);
    for (std::size_t t = 0; t < time_points; ++t) {
      StandardizedRow r;
      r.location_id = static_cast<long>(loc + 1);
      r.point.values = feat;
      r.point.values.push_back(static_cast<double>(t));
      r.point.spatial_index = loc;
      r.point.time_index = t;
      sites.push_back(Site::value(r.point));
      ds.rows.push_back(std::move(r));
    }
  }
  const CholeskyFactor lf = robust_cholesky(cov_matrix(sites, hp));
  Eigen::VectorXd z(lf.lower.rows());
  for (Eigen::Index k = 0; k < z.size(); ++k)
    z[k] = normal(rng);
  const Eigen::VectorXd f = lf.lower * z;
  for (std::size_t k = 0; k < ds.rows.size(); ++k)
    ds.rows[k].y = f[static_cast<Eigen::Index>(k)] + hp.sigma * normal(rng);
  return ds;
}

}  // namespace monogp
