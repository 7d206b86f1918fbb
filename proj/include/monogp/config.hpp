#pragma once

// INI run configuration shared by the command-line tool and the bindings.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "monogp/data.hpp"
#include "monogp/evaluation.hpp"
#include "monogp/inference.hpp"

namespace monogp {

struct RunConfig
{
  std::filesystem::path data_path;
  VirtualConfig virtual_sets;
  PriorSpec prior;
  SamplerConfig sampler;
  std::size_t max_draws = 400;

  CvScheme scheme;
  /// "deriv", "noderiv" or "both".
  std::string variant = "deriv";
  FoldFit fold_fit = FoldFit::refit;
  SamplerConfig fold_sampler;
  std::size_t recondition_sweeps = 20;

  SimulateConfig simulate;
  std::uint64_t simulate_seed = 1;

  std::filesystem::path output_dir;

  /// Flat "section.key" -> value view of every setting, for manifests.
  std::map<std::string, std::string> snapshot() const;
  CvOptions cv_options() const;
};

/// Parses an INI file with sections [data] [model] [inference] [cv]
/// [simulate] [output]. Unknown sections or keys and malformed values raise
/// ConfigError; a missing file raises DataError. A relative data path is
/// taken relative to the config file.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Parses "deriv" / "noderiv".
ModelVariant parse_variant(const std::string& name);
std::string variant_flag(ModelVariant v);

}  // namespace monogp
