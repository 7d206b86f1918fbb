#pragma once

#include <string>
#include <vector>

#include "monogp/inference.hpp"

namespace monogp {

struct RhatResult
{
  double value = 1.0;
  /// Set when within- and between-chain variance are both zero; value is then 1.
  bool zero_variance = false;
};

/// Split-chain potential scale reduction (each chain halved, classic
/// between/within variance formulation). Needs >= 2 chains of >= 4 draws.
RhatResult split_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size over split chains, autocorrelations truncated by
/// Geyer's initial positive sequence.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

/// Histogram-peak mode with Freedman-Diaconis bin width.
double histogram_mode(const std::vector<double>& values);

struct ParameterSummary
{
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double mode = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double rhat = 1.0;
  double ess = 0.0;
  bool zero_variance = false;
};

std::vector<ParameterSummary> summarize_parameters(const PosteriorSamples& samples);

double sample_quantile(std::vector<double> values, double q);

}  // namespace monogp
