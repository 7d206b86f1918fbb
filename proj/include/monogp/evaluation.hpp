#pragma once

// Cross-validation schemes and predictive checks: leave-one-observation,
// leave-one-location and leave-tail folds scored by ELPD, MSE and LOO-PIT.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "monogp/inference.hpp"
#include "monogp/model.hpp"

namespace monogp {

enum class CvKind
{
  cv1,  ///< leave one observation out
  cv2,  ///< leave one location out
  cv3,  ///< leave the last time points of one location out
};

struct CvScheme
{
  CvKind kind = CvKind::cv1;
  std::size_t tail_length = 7;

  std::string name() const;
  static CvScheme parse(const std::string& name, std::size_t tail_length = 7);
};

enum class ModelVariant
{
  with_derivatives,
  without_derivatives,
};

std::string to_string(ModelVariant v);

struct CvFold
{
  /// Indices into ObservationSet::regular.
  std::vector<std::size_t> held_out;
  /// Held-out rows that are scored (rows pinned by a zero-start anchor are not).
  std::vector<std::size_t> scored;
  ObservationSet train;
};

/// Folds of `obs` under `scheme`. Regular rows and virtual observations at
/// held-out (location, time) pairs are removed from the training set. A
/// left-out location keeps its t = 0 anchor, which is not held out.
/// Leave-tail makes one fold per location. Throws SchemeError on
/// an empty training remainder and ConfigError when the tail is not shorter
/// than the time grid.
std::vector<CvFold> make_folds(const ObservationSet& obs, const CvScheme& scheme);

struct PointRecord
{
  std::size_t row = 0;  ///< index into ObservationSet::regular
  std::size_t location = 0;
  double t = 0.0;
  double y = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double lower95 = 0.0;
  double upper95 = 0.0;
  double log_density = 0.0;
  double pit = 0.0;
};

struct FoldRecord
{
  std::size_t index = 0;
  std::vector<PointRecord> points;
  double elpd = 0.0;
  double mse = 0.0;
  /// Largest split-Rhat of the fold refit; 1 when reconditioned.
  double max_rhat = 1.0;
};

struct EvalReport
{
  CvScheme scheme;
  ModelVariant variant = ModelVariant::with_derivatives;
  double elpd = 0.0;
  double mse = 0.0;
  /// Filled for the leave-one-observation scheme only.
  std::vector<double> loo_pit;
  std::vector<FoldRecord> folds;
  std::map<std::string, std::string> metadata;

  std::size_t point_count() const;
};

enum class FoldFit
{
  /// Fresh chains per fold, warm-started from the full-data fit.
  refit,
  /// Hyperparameter draws of the full-data fit reused; sign latents
  /// re-sampled against the fold's training set.
  recondition,
};

struct CvOptions
{
  PriorSpec prior;
  std::vector<std::size_t> groups;
  std::size_t group_count = 0;
  SamplerConfig full;
  /// Chains and lengths for fold refits; warm start is filled in.
  SamplerConfig fold;
  FoldFit fit = FoldFit::refit;
  /// Elliptical slice sweeps per draw when reconditioning.
  std::size_t recondition_sweeps = 20;
  std::size_t max_draws = 400;
  std::uint64_t seed = 11;

  /// Kernel groups default to the standard six-input layout when empty.
  void resolve(std::size_t input_dimension);
};

/// Cross-validated ELPD, MSE and (leave-one-observation) LOO-PIT of one
/// model variant. A full-data fit of the same variant may be passed to
/// skip refitting it.
EvalReport run_cv(const ObservationSet& obs, const CvScheme& scheme, ModelVariant variant,
                  CvOptions options, const PosteriorSamples* full_fit = nullptr);

/// Both variants on identical folds and seeds.
std::pair<EvalReport, EvalReport> compare_variants(const ObservationSet& obs,
                                                   const CvScheme& scheme,
                                                   const CvOptions& options);

/// LOO-PIT values of the leave-one-observation scheme.
std::vector<double> loo_pit(const ObservationSet& obs, ModelVariant variant,
                            const CvOptions& options);

/// log (1/D) sum_d N(y | mean_d, var_d)
double mixture_log_density(double y, const Eigen::VectorXd& means,
                           const Eigen::VectorXd& variances);
/// Fraction of draws <= y. Throws ConfigError on no draws.
double pit_value(double y, const Eigen::VectorXd& draws);
double mean_squared_error(const std::vector<double>& y, const std::vector<double>& mean);

/// Kolmogorov-Smirnov distance of the sample to Uniform(0, 1).
double ks_distance_uniform(std::vector<double> values);
/// Asymptotic critical value at level 0.05 with the small-sample correction.
double ks_critical_value_05(std::size_t n);

/// Counts over `bins` equal-width bins of [0, 1].
std::vector<std::size_t> pit_histogram(const std::vector<double>& pit, std::size_t bins = 10);

void write_report_json(std::ostream& out, const EvalReport& report);
void write_folds_csv(std::ostream& out, const EvalReport& report);

}  // namespace monogp
