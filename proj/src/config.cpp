#include "monogp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "monogp/errors.hpp"

namespace monogp {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys()
{
  static const std::map<std::string, std::set<std::string>> keys{
      {"data", {"path", "zero_start", "monotone_times", "saturation", "saturation_time", "strictness"}},
      {"model", {"alpha_scale", "sigma_scale", "lengthscale_shape", "lengthscale_rate"}},
      {"inference",
       {"chains", "warmup", "draws", "seed", "ess_steps", "parallel", "max_draws", "mode_jumps"}},
      {"cv",
       {"scheme", "tail_length", "variant", "fit", "fold_chains", "fold_warmup", "fold_draws",
        "recondition_sweeps"}},
      {"simulate",
       {"locations", "time_points", "noise_sd", "base_rise", "rise_log_sd", "decay",
        "decay_log_sd", "feature_lengthscale", "pixel_scale", "seed"}},
      {"output", {"dir"}},
  };
  return keys;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text)
{
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof())
    throw ConfigError("config key " + key + ": cannot parse '" + text + "'");
  return value;
}

template <>
bool parse_value<bool>(const std::string& key, const std::string& text)
{
  if (text == "true" || text == "1" || text == "yes" || text == "on")
    return true;
  if (text == "false" || text == "0" || text == "no" || text == "off")
    return false;
  throw ConfigError("config key " + key + ": expected a boolean, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_value<double>(key, item));
  if (out.empty())
    throw ConfigError("config key " + key + ": empty list");
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& text)
{
  const long v = parse_value<long>(key, text);
  if (v < 0)
    throw ConfigError("config key " + key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

std::string join(const std::vector<double>& v)
{
  std::ostringstream out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out << (k ? "," : "") << v[k];
  return out.str();
}

}  // namespace

ModelVariant parse_variant(const std::string& name)
{
  if (name == "deriv")
    return ModelVariant::with_derivatives;
  if (name == "noderiv")
    return ModelVariant::without_derivatives;
  throw ConfigError("unknown model variant '" + name + "' (expected deriv or noderiv)");
}

std::string variant_flag(ModelVariant v)
{
  return v == ModelVariant::with_derivatives ? "deriv" : "noderiv";
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line "
                      + std::to_string(e.line()) + ")");
  }

  RunConfig c;
  c.fold_sampler.chains = 2;
  c.fold_sampler.warmup = 150;
  c.fold_sampler.draws = 250;

  for (const auto& [section, body] : tree) {
    const auto known = allowed_keys().find(section);
    if (known == allowed_keys().end())
      throw ConfigError("unknown config section [" + section + "]");
    if (!body.data().empty())
      throw ConfigError("config key '" + section + "' outside any section");
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      if (!known->second.count(key))
        throw ConfigError("unknown config key " + name);
      const std::string v = node.data();

      if (name == "data.path")
        c.data_path = v;
      else if (name == "data.monotone_times")
        c.virtual_sets.monotone_times = v.empty() ? std::vector<double>{} : parse_list(name, v);
      else if (name == "data.zero_start")
        c.virtual_sets.zero_start = parse_value<bool>(name, v);
      else if (name == "data.saturation")
        c.virtual_sets.saturation = parse_value<bool>(name, v);
      else if (name == "data.saturation_time")
        c.virtual_sets.saturation_time = parse_value<double>(name, v);
      else if (name == "data.strictness")
        c.virtual_sets.strictness = parse_value<double>(name, v);
      else if (name == "model.alpha_scale")
        c.prior.alpha_scale = parse_value<double>(name, v);
      else if (name == "model.sigma_scale")
        c.prior.sigma_scale = parse_value<double>(name, v);
      else if (name == "model.lengthscale_shape")
        c.prior.lengthscale_shape = parse_list(name, v);
      else if (name == "model.lengthscale_rate")
        c.prior.lengthscale_rate = parse_list(name, v);
      else if (name == "inference.chains")
        c.sampler.chains = parse_count(name, v);
      else if (name == "inference.warmup")
        c.sampler.warmup = parse_count(name, v);
      else if (name == "inference.draws")
        c.sampler.draws = parse_count(name, v);
      else if (name == "inference.seed")
        c.sampler.seed = parse_value<std::uint64_t>(name, v);
      else if (name == "inference.ess_steps")
        c.sampler.ess_steps = parse_count(name, v);
      else if (name == "inference.parallel")
        c.sampler.parallel = parse_value<bool>(name, v);
      else if (name == "inference.mode_jumps")
        c.sampler.mode_jumps = parse_value<bool>(name, v);
      else if (name == "inference.max_draws")
        c.max_draws = parse_count(name, v);
      else if (name == "cv.scheme")
        c.scheme = CvScheme::parse(v, c.scheme.tail_length);
      else if (name == "cv.tail_length")
        c.scheme.tail_length = parse_count(name, v);
      else if (name == "cv.variant") {
        if (v != "both")
          parse_variant(v);
        c.variant = v;
      } else if (name == "cv.fit") {
        if (v == "refit")
          c.fold_fit = FoldFit::refit;
        else if (v == "recondition")
          c.fold_fit = FoldFit::recondition;
        else
          throw ConfigError("cv.fit must be refit or recondition, got '" + v + "'");
      } else if (name == "cv.fold_chains")
        c.fold_sampler.chains = parse_count(name, v);
      else if (name == "cv.fold_warmup")
        c.fold_sampler.warmup = parse_count(name, v);
      else if (name == "cv.fold_draws")
        c.fold_sampler.draws = parse_count(name, v);
      else if (name == "cv.recondition_sweeps")
        c.recondition_sweeps = parse_count(name, v);
      else if (name == "simulate.locations")
        c.simulate.locations = parse_count(name, v);
      else if (name == "simulate.time_points")
        c.simulate.time_points = parse_count(name, v);
      else if (name == "simulate.noise_sd")
        c.simulate.noise_sd = parse_value<double>(name, v);
      else if (name == "simulate.base_rise")
        c.simulate.base_rise = parse_value<double>(name, v);
      else if (name == "simulate.rise_log_sd")
        c.simulate.rise_log_sd = parse_value<double>(name, v);
      else if (name == "simulate.decay")
        c.simulate.decay = parse_value<double>(name, v);
      else if (name == "simulate.decay_log_sd")
        c.simulate.decay_log_sd = parse_value<double>(name, v);
      else if (name == "simulate.feature_lengthscale")
        c.simulate.feature_lengthscale = parse_value<double>(name, v);
      else if (name == "simulate.pixel_scale")
        c.simulate.pixel_scale = parse_value<double>(name, v);
      else if (name == "simulate.seed")
        c.simulate_seed = parse_value<std::uint64_t>(name, v);
      else if (name == "output.dir")
        c.output_dir = v;
    }
  }

  if (!c.data_path.empty() && c.data_path.is_relative() && !base_dir.empty())
    c.data_path = base_dir / c.data_path;
  if (!c.output_dir.empty() && c.output_dir.is_relative() && !base_dir.empty())
    c.output_dir = base_dir / c.output_dir;

  try {
    c.sampler.validate();
    c.fold_sampler.validate();
    c.prior.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!(c.virtual_sets.strictness > 0.0))
    throw ConfigError("data.strictness must be positive");
  c.simulate.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::map<std::string, std::string> RunConfig::snapshot() const
{
  std::map<std::string, std::string> m;
  m["data.path"] = data_path.string();
  m["data.monotone_times"] = join(virtual_sets.monotone_times);
  m["data.zero_start"] = virtual_sets.zero_start ? "true" : "false";
  m["data.saturation"] = virtual_sets.saturation ? "true" : "false";
  if (virtual_sets.saturation_time)
    m["data.saturation_time"] = std::to_string(*virtual_sets.saturation_time);
  m["data.strictness"] = std::to_string(virtual_sets.strictness);
  m["model.alpha_scale"] = std::to_string(prior.alpha_scale);
  m["model.sigma_scale"] = std::to_string(prior.sigma_scale);
  m["model.lengthscale_shape"] = join(prior.lengthscale_shape);
  m["model.lengthscale_rate"] = join(prior.lengthscale_rate);
  m["inference.chains"] = std::to_string(sampler.chains);
  m["inference.warmup"] = std::to_string(sampler.warmup);
  m["inference.draws"] = std::to_string(sampler.draws);
  m["inference.seed"] = std::to_string(sampler.seed);
  m["inference.ess_steps"] = std::to_string(sampler.ess_steps);
  m["inference.parallel"] = sampler.parallel ? "true" : "false";
  m["inference.mode_jumps"] = sampler.mode_jumps ? "true" : "false";
  m["inference.max_draws"] = std::to_string(max_draws);
  m["cv.scheme"] = scheme.name();
  m["cv.tail_length"] = std::to_string(scheme.tail_length);
  m["cv.variant"] = variant;
  m["cv.fit"] = fold_fit == FoldFit::refit ? "refit" : "recondition";
  m["cv.fold_chains"] = std::to_string(fold_sampler.chains);
  m["cv.fold_warmup"] = std::to_string(fold_sampler.warmup);
  m["cv.fold_draws"] = std::to_string(fold_sampler.draws);
  m["cv.recondition_sweeps"] = std::to_string(recondition_sweeps);
  m["simulate.locations"] = std::to_string(simulate.locations);
  m["simulate.time_points"] = std::to_string(simulate.time_points);
  m["simulate.noise_sd"] = std::to_string(simulate.noise_sd);
  m["simulate.base_rise"] = std::to_string(simulate.base_rise);
  m["simulate.rise_log_sd"] = std::to_string(simulate.rise_log_sd);
  m["simulate.decay"] = std::to_string(simulate.decay);
  m["simulate.decay_log_sd"] = std::to_string(simulate.decay_log_sd);
  m["simulate.feature_lengthscale"] = std::to_string(simulate.feature_lengthscale);
  m["simulate.pixel_scale"] = std::to_string(simulate.pixel_scale);
  m["simulate.seed"] = std::to_string(simulate_seed);
  m["output.dir"] = output_dir.string();
  return m;
}

CvOptions RunConfig::cv_options() const
{
  CvOptions o;
  o.prior = prior;
  o.full = sampler;
  o.fold = fold_sampler;
  o.fold.parallel = sampler.parallel;
  o.fold.mode_jumps = sampler.mode_jumps;
  o.fit = fold_fit;
  o.recondition_sweeps = recondition_sweeps;
  o.max_draws = max_draws;
  o.seed = sampler.seed + 11;
  return o;
}

}  // namespace monogp
