#include "manifest.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "monogp/archive.hpp"
#include "monogp/errors.hpp"
#include "monogp/version.hpp"

namespace monogp::cli {

std::string sha256_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot hash missing file " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("sha256 initialization failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0)
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
  return hex.str();
}

void append_manifest(const std::filesystem::path& dir, const RunRecord& run)
{
  using nlohmann::json;
  const auto path = dir / "manifest.json";
  json m;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      m = json::parse(in);
    } catch (const json::exception&) {
      m = json::object();
    }
  }
  m["tool"] = "monogp";
  m["version"] = kVersion;
  if (!m.contains("runs") || !m["runs"].is_array())
    m["runs"] = json::array();

  json inputs = json::array();
  for (const auto& p : run.inputs)
    inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  m["runs"].push_back({{"command", run.command},
                       {"config", run.config},
                       {"seed", run.seed},
                       {"inputs", inputs},
                       {"outputs", run.outputs},
                       {"runtime_seconds", run.runtime_seconds}});
  write_atomic(path, [&](std::ostream& out) { out << m.dump(2) << '\n'; });
}

}  // namespace monogp::cli
