#pragma once

// Dataset ingestion, input scaling, virtual observation sets and the
// synthetic generators used for testing.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "monogp/kernel.hpp"
#include "monogp/model.hpp"

namespace monogp {

/// Exact CSV header accepted by ingest and written by write_csv.
inline constexpr const char* kCsvHeader = "location_id,sx,sy,h,s,i,t,y";

struct RawRow
{
  long location_id = 0;
  double sx = 0.0;
  double sy = 0.0;
  double h = 0.0;
  double s = 0.0;
  double i = 0.0;
  double t = 0.0;
  double y = 0.0;
};

/// Rows sorted by (location, t). Every location carries the same time grid
/// starting at t = 0 and constant spatial features.
struct RawDataset
{
  std::vector<RawRow> rows;

  std::vector<long> locations() const;
  std::vector<double> times() const;
  std::size_t location_count() const { return locations().size(); }
  std::size_t time_count() const { return times().size(); }
  /// Sorts rows and throws DataError on any broken invariant.
  void validate();
};

RawDataset ingest(const std::filesystem::path& path);
RawDataset ingest(std::istream& in, const std::string& source = "<stream>");
void write_csv(std::ostream& out, const RawDataset& ds);

/// Divisors applied to the raw inputs; time is never scaled.
struct ScalingFactors
{
  double h = 1.0;
  double s = 1.0;
  double i = 1.0;
  /// Shared by sx and sy.
  double spatial = 1.0;

  /// Model input vector [h, s, i, sx, sy, t] for a raw row.
  std::vector<double> apply(const RawRow& row) const;
  /// Inverse of apply; y is left at zero.
  RawRow invert(long location_id, const std::vector<double>& values) const;
};

struct StandardizedRow
{
  long location_id = 0;
  InputPoint point;
  double y = 0.0;
};

struct StandardizedDataset
{
  std::vector<StandardizedRow> rows;
  ScalingFactors factors;
  std::vector<long> locations;
  std::vector<double> times;

  std::size_t location_count() const { return locations.size(); }
  std::size_t time_count() const { return times.size(); }
  /// Back to raw units; y carried through.
  RawDataset destandardize() const;
};

/// H, S, I by their own sample standard deviation; sx and sy by the sample
/// standard deviation of the two columns stacked. Statistics are taken over
/// one value per location. Throws DataError on a zero-variance column.
StandardizedDataset standardize(const RawDataset& raw);
/// Applies existing factors, e.g. to a query set.
StandardizedDataset standardize_with(const RawDataset& raw, const ScalingFactors& factors);

struct VirtualConfig
{
  /// Anchor every series at zero at t = 0; the observed t = 0 rows are then
  /// replaced by the anchors instead of entering as noisy observations.
  bool zero_start = true;
  /// Time values carrying a positive derivative sign observation.
  std::vector<double> monotone_times{6.0, 9.0};
  bool saturation = false;
  /// Time value of the saturation anchor; the last time point when unset.
  std::optional<double> saturation_time;
  double strictness = kDefaultStrictness;
};

/// Regular rows (t > 0 when anchored) plus zero-start anchors at t = 0, sign
/// observations at the configured times and optional saturation anchors. Throws ConfigError
/// when a configured time is not on the grid. Warnings are appended when
/// given a sink.
ObservationSet build_virtual_sets(const StandardizedDataset& ds, const VirtualConfig& config,
                                  std::vector<std::string>* warnings = nullptr);

struct SimulateConfig
{
  std::size_t locations = 13;
  std::size_t time_points = 11;
  double noise_sd = 0.3;
  /// Median total rise a location approaches.
  double base_rise = 3.0;
  /// Log-scale spread of the rise across locations (spatial GP amplitude).
  double rise_log_sd = 0.5;
  /// Per-step geometric decay rate of the increments.
  double decay = 0.25;
  /// Log-scale spread of the decay rate across locations; 0 keeps it fixed.
  double decay_log_sd = 0.0;
  /// Lengthscale of the spatial GP over the scaled features.
  double feature_lengthscale = 1.5;
  double pixel_scale = 100.0;
  std::array<double, 3> hsi_scale{40.0, 0.05, 20.0};

  void validate() const;
};

/// Monotone saturating curves starting at 0 plus Gaussian noise.
RawDataset simulate(const SimulateConfig& config, std::uint64_t seed);

/// Draw from the GP prior itself on an N x T grid with standard normal
/// spatial features and t = 0..T-1; unit scaling factors.
StandardizedDataset simulate_gp_prior(std::size_t locations, std::size_t time_points,
                                      const Hyperparameters& hp, std::uint64_t seed);

}  // namespace monogp
