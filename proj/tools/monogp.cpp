// monogp command-line tool: fit, predict, cv, diagnose, simulate.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "manifest.hpp"
#include "monogp/archive.hpp"
#include "monogp/config.hpp"
#include "monogp/data.hpp"
#include "monogp/diagnostics.hpp"
#include "monogp/errors.hpp"
#include "monogp/evaluation.hpp"
#include "monogp/inference.hpp"
#include "monogp/version.hpp"

namespace fs = std::filesystem;
using namespace monogp;

namespace {

enum ExitCode
{
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kData = 3,
  kNumerical = 4,
  kConvergence = 5,
};

constexpr double kRhatThreshold = 1.05;

struct Overrides
{
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> draws;
  std::optional<std::size_t> warmup;
  std::string scheme;
  std::string variant;
  std::string model;
  std::string query;
  bool latent = false;
};

class Timer
{
public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

RunConfig load_with_overrides(const Overrides& o)
{
  if (o.config.empty())
    throw ConfigError("--config is required");
  RunConfig c = load_config(o.config);
  if (o.seed) {
    c.sampler.seed = *o.seed;
    c.simulate_seed = *o.seed;
  }
  if (o.chains)
    c.sampler.chains = *o.chains;
  if (o.draws)
    c.sampler.draws = *o.draws;
  if (o.warmup)
    c.sampler.warmup = *o.warmup;
  if (!o.scheme.empty())
    c.scheme = CvScheme::parse(o.scheme, c.scheme.tail_length);
  if (!o.variant.empty()) {
    if (o.variant != "both")
      parse_variant(o.variant);
    c.variant = o.variant;
  }
  if (!o.out.empty())
    c.output_dir = o.out;
  c.sampler.validate();
  return c;
}

fs::path require_output(const RunConfig& c)
{
  if (c.output_dir.empty())
    throw ConfigError("no output directory: pass --out or set [output] dir");
  fs::create_directories(c.output_dir);
  return c.output_dir;
}

void print_warnings(const std::vector<std::string>& warnings)
{
  for (const auto& w : warnings)
    std::cerr << "warning: " << w << '\n';
}

double worst_rhat(const std::vector<ParameterSummary>& summary)
{
  double worst = 1.0;
  for (const auto& s : summary)
    worst = std::max(worst, s.rhat);
  return worst;
}

int cmd_fit(const Overrides& o)
{
  Timer timer;
  RunConfig c = load_with_overrides(o);
  if (c.variant == "both")
    throw ConfigError("fit takes a single variant (deriv or noderiv)");
  if (c.data_path.empty())
    throw ConfigError("[data] path is required for fit");
  const fs::path out = require_output(c);

  ModelArchive a;
  a.data = ingest(c.data_path);
  const StandardizedDataset ds = standardize(a.data);
  a.factors = ds.factors;
  a.virtual_sets = c.virtual_sets;
  a.variant = parse_variant(c.variant);
  a.prior = c.prior;
  a.groups.assign(kDefaultGroups.begin(), kDefaultGroups.end());
  a.group_count = kDefaultGroupCount;
  std::vector<std::string> warnings;
  ObservationSet obs = build_virtual_sets(ds, c.virtual_sets, &warnings);
  print_warnings(warnings);
  if (a.variant == ModelVariant::without_derivatives)
    obs = obs.without_derivatives();

  a.samples = sample_hyperparameters(obs, a.prior, a.groups, a.group_count, c.sampler);
  const auto summary = summarize_parameters(a.samples);
  save_archive(out, a, summary);

  cli::RunRecord run{"fit", c.snapshot(), c.sampler.seed, {c.data_path},
                     {"data.csv", "model.json", "draws.csv", "summary.csv", "diagnostics.csv"},
                     timer.seconds()};
  cli::append_manifest(out, run);

  const double worst = worst_rhat(summary);
  std::cout << "fitted " << a.samples.draw_count() << " draws over "
            << a.samples.chains.size() << " chains; max split-Rhat " << worst << '\n';
  if (worst > kRhatThreshold) {
    std::cerr << "error: not converged (split-Rhat " << worst << " > " << kRhatThreshold
              << "); see " << (out / "diagnostics.csv").string() << '\n';
    return kConvergence;
  }
  return kOk;
}

struct Query
{
  std::vector<Site> sites;
};

Query read_query(const fs::path& path, const ScalingFactors& factors)
{
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open query file '" + path.string() + "'");
  Query q;
  std::string line;
  if (!std::getline(in, line))
    return q;
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  std::map<std::string, std::size_t> col;
  {
    std::stringstream ss(line);
    std::string name;
    std::size_t k = 0;
    while (std::getline(ss, name, ','))
      col[name] = k++;
  }
  for (const char* need : {"sx", "sy", "h", "s", "i", "t"})
    if (!col.count(need))
      throw ShapeError("query header lacks column '" + std::string(need)
                       + "'; the model expects sx,sy,h,s,i,t");
  for (const auto& [name, idx] : col)
    if (name != "sx" && name != "sy" && name != "h" && name != "s" && name != "i" && name != "t"
        && name != "location_id" && name != "y" && name != "derivative")
      throw ShapeError("query column '" + name + "' does not match the model inputs");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (cells.size() != col.size())
      throw ShapeError(path.string() + ":" + std::to_string(lineno) + ": expected "
                       + std::to_string(col.size()) + " columns");
    auto num = [&](const std::string& name) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[col.at(name)], &used);
        if (used != cells[col.at(name)].size())
          throw std::invalid_argument(name);
        return v;
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": non-numeric " + name);
      }
    };
    RawRow r;
    r.sx = num("sx");
    r.sy = num("sy");
    r.h = num("h");
    r.s = num("s");
    r.i = num("i");
    r.t = num("t");
    InputPoint p;
    p.values = factors.apply(r);
    const bool deriv = col.count("derivative") && num("derivative") != 0.0;
    q.sites.push_back(deriv ? Site::derivative({p, kTimeDim}) : Site::value(p));
  }
  return q;
}

int cmd_predict(const Overrides& o)
{
  Timer timer;
  if (o.model.empty() || o.query.empty())
    throw ConfigError("predict needs --model and --query");
  const ModelArchive a = load_archive(o.model);
  const Query q = read_query(o.query, a.factors);
  const fs::path out_file = o.out.empty() ? fs::path(o.model) / "predictions.csv" : fs::path(o.out);
  if (out_file.has_parent_path())
    fs::create_directories(out_file.parent_path());

  PredictiveDistribution pd;
  if (!q.sites.empty()) {
    const ObservationSet obs = a.observations();
    PredictOptions po;
    po.target = o.latent ? PredictTarget::latent : PredictTarget::observation;
    if (o.seed)
      po.seed = *o.seed;
    pd = predict(a.samples, obs, q.sites, po);
  }
  write_atomic(out_file, [&](std::ostream& out) {
    out << "mean,lower95,upper95\n";
    out.precision(10);
    for (Eigen::Index k = 0; k < pd.mean.size(); ++k)
      out << pd.mean[k] << ',' << pd.lower95[k] << ',' << pd.upper95[k] << '\n';
  });
  cli::RunRecord run{"predict",
                     {{"model", o.model}, {"query", o.query}, {"latent", o.latent ? "1" : "0"}},
                     o.seed.value_or(7),
                     {fs::path(o.model) / "draws.csv", fs::path(o.query)},
                     {out_file.filename().string()},
                     timer.seconds()};
  cli::append_manifest(out_file.has_parent_path() ? out_file.parent_path() : fs::path("."), run);
  return kOk;
}

void write_report(const fs::path& dir, const EvalReport& r, std::vector<std::string>& outputs)
{
  const std::string stem = "cv_" + r.scheme.name() + "_" + variant_flag(r.variant);
  write_atomic(dir / (stem + ".json"), [&](std::ostream& out) { write_report_json(out, r); });
  write_atomic(dir / (stem + "_folds.csv"), [&](std::ostream& out) { write_folds_csv(out, r); });
  outputs.push_back(stem + ".json");
  outputs.push_back(stem + "_folds.csv");
}

int cmd_cv(const Overrides& o)
{
  Timer timer;
  RunConfig c;
  std::optional<ModelArchive> archive;
  ObservationSet full_obs;
  std::vector<fs::path> inputs;
  if (!o.model.empty()) {
    archive = load_archive(o.model);
    c = o.config.empty() ? RunConfig{} : load_with_overrides(o);
    if (o.config.empty()) {
      c.fold_sampler.chains = 2;
      c.fold_sampler.warmup = 150;
      c.fold_sampler.draws = 250;
      if (!o.scheme.empty())
        c.scheme = CvScheme::parse(o.scheme, c.scheme.tail_length);
      c.variant = o.variant.empty() ? variant_flag(archive->variant) : o.variant;
      if (o.seed)
        c.sampler.seed = *o.seed;
    }
    c.output_dir = o.out.empty() ? fs::path(o.model) : fs::path(o.out);
    c.virtual_sets = archive->virtual_sets;
    c.prior = archive->prior;
    full_obs = build_virtual_sets(archive->standardized(), archive->virtual_sets);
    inputs.push_back(fs::path(o.model) / "data.csv");
  } else {
    c = load_with_overrides(o);
    if (c.data_path.empty())
      throw ConfigError("[data] path is required for cv");
    std::vector<std::string> warnings;
    full_obs = build_virtual_sets(standardize(ingest(c.data_path)), c.virtual_sets, &warnings);
    print_warnings(warnings);
    inputs.push_back(c.data_path);
  }
  const fs::path out = require_output(c);

  std::vector<ModelVariant> variants;
  if (c.variant == "both")
    variants = {ModelVariant::with_derivatives, ModelVariant::without_derivatives};
  else
    variants = {parse_variant(c.variant)};

  CvOptions options = c.cv_options();
  std::vector<std::string> outputs;
  std::vector<EvalReport> reports;
  for (ModelVariant v : variants) {
    const PosteriorSamples* full = nullptr;
    if (archive && archive->variant == v)
      full = &archive->samples;
    reports.push_back(run_cv(full_obs, c.scheme, v, options, full));
    write_report(out, reports.back(), outputs);
    std::cout << c.scheme.name() << ' ' << variant_flag(v) << ": elpd " << reports.back().elpd
              << " mse " << reports.back().mse << " (" << reports.back().point_count()
              << " held-out points, " << reports.back().folds.size() << " folds)\n";
  }
  if (reports.size() == 2) {
    const std::string name = "table_" + c.scheme.name() + ".csv";
    write_atomic(out / name, [&](std::ostream& os) {
      os << "scheme,variant,elpd,mse\n";
      os.precision(10);
      for (const auto& r : reports)
        os << r.scheme.name() << ',' << to_string(r.variant) << ',' << r.elpd << ',' << r.mse
           << '\n';
    });
    outputs.push_back(name);
  }
  cli::RunRecord run{"cv", c.snapshot(), c.sampler.seed, inputs, outputs, timer.seconds()};
  cli::append_manifest(out, run);
  return kOk;
}

int cmd_diagnose(const Overrides& o)
{
  Timer timer;
  if (o.model.empty())
    throw ConfigError("diagnose needs --model");
  const fs::path dir = o.model;
  const ModelArchive a = load_archive(dir);
  fs::path folds = dir / ("cv_cv1_" + variant_flag(a.variant) + "_folds.csv");
  if (!fs::exists(folds))
    throw ConfigError("archive " + dir.string()
                      + " has no leave-one-observation results; run `monogp cv --scheme cv1 "
                        "--model "
                      + dir.string() + "` first");
  const fs::path out = o.out.empty() ? dir : fs::path(o.out);
  fs::create_directories(out);

  std::ifstream in(folds);
  std::string line;
  std::getline(in, line);
  std::vector<double> pit;
  std::vector<std::string> keys;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (cells.size() != 10)
      throw DataError(folds.string() + ": malformed row");
    pit.push_back(std::stod(cells[9]));
    keys.push_back(cells[0] + "," + cells[1] + "," + cells[2]);
  }
  if (pit.empty())
    throw DataError(folds.string() + " holds no LOO-PIT values");

  write_atomic(out / "loo_pit.csv", [&](std::ostream& os) {
    os << "fold,location,t,pit\n";
    os.precision(10);
    for (std::size_t k = 0; k < pit.size(); ++k)
      os << keys[k] << ',' << pit[k] << '\n';
  });
  const auto counts = pit_histogram(pit, 10);
  write_atomic(out / "pit_histogram.csv", [&](std::ostream& os) {
    os << "bin_lower,bin_upper,count\n";
    for (std::size_t b = 0; b < counts.size(); ++b)
      os << b / 10.0 << ',' << (b + 1) / 10.0 << ',' << counts[b] << '\n';
  });
  const auto summary = summarize_parameters(a.samples);
  write_atomic(out / "rhat_ess.csv",
               [&](std::ostream& os) { write_diagnostics_csv(os, summary); });
  const double ks = ks_distance_uniform(pit);
  const double crit = ks_critical_value_05(pit.size());
  write_atomic(out / "calibration.json", [&](std::ostream& os) {
    nlohmann::json j{{"n", pit.size()},
                     {"ks_distance", ks},
                     {"ks_critical_05", crit},
                     {"uniform_at_05", ks < crit},
                     {"max_rhat", worst_rhat(summary)}};
    os << j.dump(2) << '\n';
  });
  std::cout << "LOO-PIT: n=" << pit.size() << " KS " << ks << " (5% critical " << crit << ")\n";
  cli::RunRecord run{"diagnose",
                     {{"model", o.model}},
                     a.samples.seed,
                     {folds},
                     {"loo_pit.csv", "pit_histogram.csv", "rhat_ess.csv", "calibration.json"},
                     timer.seconds()};
  cli::append_manifest(out, run);
  return kOk;
}

int cmd_simulate(const Overrides& o)
{
  Timer timer;
  const RunConfig c = load_with_overrides(o);
  const fs::path out = require_output(c);
  const RawDataset ds = simulate(c.simulate, c.simulate_seed);
  write_atomic(out / "simulated.csv", [&](std::ostream& os) { write_csv(os, ds); });
  cli::RunRecord run{"simulate", c.snapshot(),      c.simulate_seed, {fs::path(o.config)},
                     {"simulated.csv"}, timer.seconds()};
  cli::append_manifest(out, run);
  std::cout << "wrote " << ds.rows.size() << " rows to " << (out / "simulated.csv").string()
            << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Monotone spatio-temporal Gaussian-process regression"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Overrides o;

  auto common = [&o](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", o.config, "INI configuration file");
    if (config_required)
      opt->required();
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed");
  };
  auto sampling = [&o](CLI::App* sub) {
    sub->add_option("--chains", o.chains, "Number of chains (>= 2)");
    sub->add_option("--draws", o.draws, "Post-warmup draws per chain");
    sub->add_option("--warmup", o.warmup, "Warmup iterations per chain");
  };

  auto* fit = app.add_subcommand("fit", "Fit the model and write a model archive");
  common(fit, true);
  sampling(fit);
  fit->add_option("--variant", o.variant, "deriv or noderiv")
      ->check(CLI::IsMember({"deriv", "noderiv"}));

  auto* pred = app.add_subcommand("predict", "Predict at query inputs from a model archive");
  pred->add_option("--model", o.model, "Model archive directory")->required();
  pred->add_option("--query", o.query, "Query CSV (sx,sy,h,s,i,t[,derivative])")->required();
  pred->add_option("--out", o.out, "Predictions CSV path");
  pred->add_option("--seed", o.seed, "Random seed");
  pred->add_flag("--latent", o.latent, "Intervals for the latent function, without noise");

  auto* cv = app.add_subcommand("cv", "Cross-validate one or both model variants");
  common(cv, false);
  sampling(cv);
  cv->add_option("--model", o.model, "Reuse the fit stored in this archive");
  cv->add_option("--scheme", o.scheme, "cv1, cv2 or cv3")
      ->check(CLI::IsMember({"cv1", "cv2", "cv3"}));
  cv->add_option("--variant", o.variant, "deriv, noderiv or both")
      ->check(CLI::IsMember({"deriv", "noderiv", "both"}));

  auto* diag = app.add_subcommand("diagnose", "LOO-PIT and convergence tables for an archive");
  diag->add_option("--model", o.model, "Model archive directory")->required();
  diag->add_option("--out", o.out, "Output directory (default: the archive)");

  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset");
  common(sim, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*fit)
      return cmd_fit(o);
    if (*pred)
      return cmd_predict(o);
    if (*cv)
      return cmd_cv(o);
    if (*diag)
      return cmd_diagnose(o);
    if (*sim)
      return cmd_simulate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const SchemeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DiagnosticError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << " (jitter " << e.jitter() << ")\n";
    return kNumerical;
  } catch (const InitializationError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const DomainError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
