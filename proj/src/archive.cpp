#include "monogp/archive.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "monogp/config.hpp"
#include "monogp/errors.hpp"

namespace monogp {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw DataError("archive file missing: " + path.string());
  return in;
}

std::vector<double> parse_row(const std::string& line, const std::string& where)
{
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size())
        throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw DataError(where + ": malformed number '" + cell + "'");
    }
  }
  return out;
}

}  // namespace

StandardizedDataset ModelArchive::standardized() const { return standardize_with(data, factors); }

ObservationSet ModelArchive::observations() const
{
  const ObservationSet obs = build_virtual_sets(standardized(), virtual_sets);
  return variant == ModelVariant::with_derivatives ? obs : obs.without_derivatives();
}

void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer)
{
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out)
      throw DataError("cannot write " + tmp.string());
    writer(out);
    out.flush();
    if (!out)
      throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_summary_csv(std::ostream& out, const std::vector<ParameterSummary>& summary)
{
  out << "parameter,mean,sd,mode,q05,q50,q95\n";
  out.precision(8);
  for (const auto& s : summary)
    out << s.name << ',' << s.mean << ',' << s.sd << ',' << s.mode << ',' << s.q05 << ','
        << s.q50 << ',' << s.q95 << '\n';
}

void write_diagnostics_csv(std::ostream& out, const std::vector<ParameterSummary>& summary)
{
  out << "parameter,rhat,ess,zero_variance\n";
  out.precision(8);
  for (const auto& s : summary)
    out << s.name << ',' << s.rhat << ',' << s.ess << ',' << (s.zero_variance ? 1 : 0) << '\n';
}

void save_archive(const std::filesystem::path& dir, const ModelArchive& a,
                  const std::vector<ParameterSummary>& summary)
{
  std::filesystem::create_directories(dir);
  write_atomic(dir / "data.csv", [&](std::ostream& out) { write_csv(out, a.data); });

  json m;
  m["version"] = kArchiveVersion;
  m["variant"] = variant_flag(a.variant);
  m["factors"] = {{"h", a.factors.h}, {"s", a.factors.s}, {"i", a.factors.i},
                  {"spatial", a.factors.spatial}};
  m["virtual"] = {{"monotone_times", a.virtual_sets.monotone_times},
                  {"zero_start", a.virtual_sets.zero_start},
                  {"saturation", a.virtual_sets.saturation},
                  {"strictness", a.virtual_sets.strictness}};
  if (a.virtual_sets.saturation_time)
    m["virtual"]["saturation_time"] = *a.virtual_sets.saturation_time;
  m["prior"] = {{"alpha_scale", a.prior.alpha_scale},
                {"sigma_scale", a.prior.sigma_scale},
                {"lengthscale_shape", a.prior.lengthscale_shape},
                {"lengthscale_rate", a.prior.lengthscale_rate}};
  m["groups"] = a.groups;
  m["group_count"] = a.group_count;
  m["sampler"] = {{"chains", a.samples.chains.size()},
                  {"warmup", a.samples.warmup_count},
                  {"seed", a.samples.seed},
                  {"acceptance_rate", a.samples.acceptance_rate},
                  {"log_scale", a.samples.log_scale}};
  std::vector<std::vector<double>> chol;
  for (Eigen::Index r = 0; r < a.samples.proposal_chol.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < a.samples.proposal_chol.cols(); ++c)
      row.push_back(a.samples.proposal_chol(r, c));
    chol.push_back(std::move(row));
  }
  m["sampler"]["proposal_chol"] = chol;
  write_atomic(dir / "model.json", [&](std::ostream& out) { out << m.dump(2) << '\n'; });

  write_atomic(dir / "draws.csv", [&](std::ostream& out) {
    out << "chain,draw";
    for (const auto& n : a.samples.parameter_names())
      out << ',' << n;
    std::size_t n_sign = 0;
    if (!a.samples.chains.empty() && !a.samples.chains.front().empty())
      n_sign = static_cast<std::size_t>(a.samples.chains.front().front().latent_f_prime.size());
    for (std::size_t k = 0; k < n_sign; ++k)
      out << ",c" << k + 1;
    out << '\n';
    out.precision(17);
    for (std::size_t c = 0; c < a.samples.chains.size(); ++c)
      for (std::size_t d = 0; d < a.samples.chains[c].size(); ++d) {
        const PosteriorDraw& draw = a.samples.chains[c][d];
        out << c << ',' << d << ',' << draw.hp.alpha;
        for (double l : draw.hp.lengthscales)
          out << ',' << l;
        out << ',' << draw.hp.sigma;
        for (Eigen::Index k = 0; k < draw.latent_f_prime.size(); ++k)
          out << ',' << draw.latent_f_prime[k];
        out << '\n';
      }
  });
  write_atomic(dir / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, summary); });
  write_atomic(dir / "diagnostics.csv",
               [&](std::ostream& out) { write_diagnostics_csv(out, summary); });
}

ModelArchive load_archive(const std::filesystem::path& dir)
{
  if (!std::filesystem::is_directory(dir))
    throw DataError("model archive not found: " + dir.string());
  ModelArchive a;
  a.data = ingest(dir / "data.csv");

  json m;
  try {
    auto in = open_input(dir / "model.json");
    m = json::parse(in);
    a.variant = parse_variant(m.at("variant").get<std::string>());
    const auto& f = m.at("factors");
    a.factors = {f.at("h").get<double>(), f.at("s").get<double>(), f.at("i").get<double>(),
                 f.at("spatial").get<double>()};
    const auto& v = m.at("virtual");
    a.virtual_sets.monotone_times = v.at("monotone_times").get<std::vector<double>>();
    a.virtual_sets.zero_start = v.value("zero_start", true);
    a.virtual_sets.saturation = v.at("saturation").get<bool>();
    a.virtual_sets.strictness = v.at("strictness").get<double>();
    if (v.contains("saturation_time"))
      a.virtual_sets.saturation_time = v.at("saturation_time").get<double>();
    const auto& p = m.at("prior");
    a.prior.alpha_scale = p.at("alpha_scale").get<double>();
    a.prior.sigma_scale = p.at("sigma_scale").get<double>();
    a.prior.lengthscale_shape = p.at("lengthscale_shape").get<std::vector<double>>();
    a.prior.lengthscale_rate = p.at("lengthscale_rate").get<std::vector<double>>();
    a.groups = m.at("groups").get<std::vector<std::size_t>>();
    a.group_count = m.at("group_count").get<std::size_t>();
    const auto& s = m.at("sampler");
    a.samples.warmup_count = s.at("warmup").get<std::size_t>();
    a.samples.seed = s.at("seed").get<std::uint64_t>();
    a.samples.acceptance_rate = s.at("acceptance_rate").get<std::vector<double>>();
    a.samples.log_scale = s.at("log_scale").get<double>();
    const auto chol = s.at("proposal_chol").get<std::vector<std::vector<double>>>();
    a.samples.proposal_chol.resize(static_cast<Eigen::Index>(chol.size()),
                                   static_cast<Eigen::Index>(chol.size()));
    for (std::size_t r = 0; r < chol.size(); ++r) {
      if (chol[r].size() != chol.size())
        throw DataError("model.json: proposal matrix is not square");
      for (std::size_t c = 0; c < chol.size(); ++c)
        a.samples.proposal_chol(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            chol[r][c];
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("model.json: ") + e.what());
  }

  auto in = open_input(dir / "draws.csv");
  std::string line;
  std::getline(in, line);
  const std::size_t n_param = a.group_count + 2;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    const auto row = parse_row(line, "draws.csv:" + std::to_string(lineno));
    if (row.size() < 2 + n_param)
      throw DataError("draws.csv:" + std::to_string(lineno) + ": too few columns");
    const auto chain = static_cast<std::size_t>(row[0]);
    if (chain >= a.samples.chains.size())
      a.samples.chains.resize(chain + 1);
    PosteriorDraw d;
    d.hp.alpha = row[2];
    d.hp.lengthscales.assign(row.begin() + 3, row.begin() + 3 + static_cast<long>(a.group_count));
    d.hp.sigma = row[2 + n_param - 1];
    d.hp.group_of_dim = a.groups;
    const std::size_t n_sign = row.size() - 2 - n_param;
    d.latent_f_prime.resize(static_cast<Eigen::Index>(n_sign));
    for (std::size_t k = 0; k < n_sign; ++k)
      d.latent_f_prime[static_cast<Eigen::Index>(k)] = row[2 + n_param + k];
    a.samples.chains[chain].push_back(std::move(d));
  }
  if (a.samples.draw_count() == 0)
    throw DataError("draws.csv holds no draws");
  return a;
}

}  // namespace monogp
