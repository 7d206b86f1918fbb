#pragma once

// On-disk model archive: the dataset, scaling, model settings, posterior
// draws and their summaries in one directory.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "monogp/data.hpp"
#include "monogp/diagnostics.hpp"
#include "monogp/evaluation.hpp"
#include "monogp/inference.hpp"

namespace monogp {

inline constexpr const char* kArchiveVersion = "1";

struct ModelArchive
{
  RawDataset data;
  ScalingFactors factors;
  VirtualConfig virtual_sets;
  ModelVariant variant = ModelVariant::with_derivatives;
  PriorSpec prior;
  std::vector<std::size_t> groups;
  std::size_t group_count = 0;
  PosteriorSamples samples;

  StandardizedDataset standardized() const;
  /// Observation set the draws were fitted to.
  ObservationSet observations() const;
};

/// Writes to a temporary sibling and renames over `path`.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);

void write_summary_csv(std::ostream& out, const std::vector<ParameterSummary>& summary);
void write_diagnostics_csv(std::ostream& out, const std::vector<ParameterSummary>& summary);

/// Creates `dir` if needed; writes data.csv, model.json, draws.csv,
/// summary.csv and diagnostics.csv.
void save_archive(const std::filesystem::path& dir, const ModelArchive& archive,
                  const std::vector<ParameterSummary>& summary);
/// Throws DataError when the directory or a required file is missing or
/// malformed.
ModelArchive load_archive(const std::filesystem::path& dir);

}  // namespace monogp
