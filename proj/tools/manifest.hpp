#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace monogp::cli {

std::string sha256_file(const std::filesystem::path& path);

struct RunRecord
{
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::string> outputs;
  double runtime_seconds = 0.0;
};

/// Adds the run to `dir`/manifest.json, keeping a single manifest per
/// output directory.
void append_manifest(const std::filesystem::path& dir, const RunRecord& run);

}  // namespace monogp::cli
