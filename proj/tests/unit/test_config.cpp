#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "monogp/archive.hpp"
#include "monogp/config.hpp"
#include "monogp/errors.hpp"

using namespace monogp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("monogp_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing")
{
  const auto c = parse_config(R"(
[data]
path = data.csv
monotone_times = 3, 5
saturation = true
strictness = 0.01
[inference]
chains = 4
draws = 50
warmup = 20
seed = 99
[cv]
scheme = cv3
tail_length = 4
variant = both
[output]
dir = out
)",
                              "/base");
  CHECK(c.data_path == fs::path("/base/data.csv"));
  CHECK(c.output_dir == fs::path("/base/out"));
  CHECK(c.virtual_sets.monotone_times == std::vector<double>{3.0, 5.0});
  CHECK(c.virtual_sets.saturation);
  CHECK(c.virtual_sets.zero_start);
  CHECK(c.virtual_sets.strictness == 0.01);
  CHECK(c.sampler.chains == 4);
  CHECK(c.sampler.seed == 99);
  CHECK(c.scheme.kind == CvKind::cv3);
  CHECK(c.scheme.tail_length == 4);
  CHECK(c.variant == "both");
  CHECK(c.snapshot().at("inference.chains") == "4");

  const auto d = parse_config("");
  CHECK(d.sampler.chains == 3);
  CHECK(d.virtual_sets.monotone_times == std::vector<double>{6.0, 9.0});
  CHECK(!d.virtual_sets.saturation);
  CHECK(d.virtual_sets.strictness == 1e-4);
}

TEST_CASE("config errors")
{
  CHECK_THROWS_AS(parse_config("[inference]\nchains = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[inference]\nchain = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sampler]\nchains = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[inference]\nchains = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[cv]\nscheme = cv9\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[cv]\nvariant = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[data]\nstrictness = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nalpha_scale = -1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), DataError);
}

TEST_CASE("archive round trip")
{
  const fs::path dir = scratch("archive");
  ModelArchive a;
  a.data = simulate(SimulateConfig{}, 4);
  const auto ds = standardize(a.data);
  a.factors = ds.factors;
  a.variant = ModelVariant::with_derivatives;
  a.groups.assign(kDefaultGroups.begin(), kDefaultGroups.end());
  a.group_count = kDefaultGroupCount;
  const auto obs = a.observations();
  CHECK(obs.sign.size() == 26);

  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 30;
  cfg.draws = 10;
  a.samples = sample_hyperparameters(obs, a.prior, a.groups, a.group_count, cfg);
  save_archive(dir, a, summarize_parameters(a.samples));
  for (const char* f : {"data.csv", "model.json", "draws.csv", "summary.csv", "diagnostics.csv"})
    CHECK(fs::exists(dir / f));

  const auto b = load_archive(dir);
  CHECK(b.data.rows.size() == 143);
  CHECK(b.factors.spatial == a.factors.spatial);
  CHECK(b.samples.draw_count() == 20);
  const auto& x = a.samples.chains[1][7];
  const auto& y = b.samples.chains[1][7];
  CHECK(x.hp.alpha == y.hp.alpha);
  CHECK(x.hp.lengthscales == y.hp.lengthscales);
  CHECK(x.latent_f_prime == y.latent_f_prime);
  CHECK(b.samples.proposal_chol.isApprox(a.samples.proposal_chol));

  std::ifstream summary(dir / "summary.csv");
  std::string header;
  std::getline(summary, header);
  CHECK(header == "parameter,mean,sd,mode,q05,q50,q95");
  int rows = 0;
  for (std::string line; std::getline(summary, line);)
    ++rows;
  CHECK(rows == 7);

  CHECK_THROWS_AS(load_archive(dir / "missing"), DataError);
  fs::remove(dir / "draws.csv");
  CHECK_THROWS_AS(load_archive(dir), DataError);
  fs::remove_all(dir);
}
