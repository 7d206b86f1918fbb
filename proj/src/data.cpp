#include "monogp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "monogp/errors.hpp"

namespace monogp {

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ','))
    out.push_back(field);
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

std::string trim(std::string s)
{
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

template <typename T>
T parse_cell(const std::string& cell, const std::string& where)
{
  const std::string c = trim(cell);
  T value{};
  const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), value);
  if (c.empty() || ec != std::errc() || ptr != c.data() + c.size())
    throw DataError(where + ": non-numeric cell '" + cell + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(value))
      throw DataError(where + ": non-finite cell '" + cell + "'");
  return value;
}

double sample_sd(const std::vector<double>& v)
{
  double mean = 0.0;
  for (double x : v)
    mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v)
    ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<long> RawDataset::locations() const
{
  std::set<long> ids;
  for (const auto& r : rows)
    ids.insert(r.location_id);
  return {ids.begin(), ids.end()};
}

std::vector<double> RawDataset::times() const
{
  std::set<double> ts;
  for (const auto& r : rows)
    ts.insert(r.t);
  return {ts.begin(), ts.end()};
}

void RawDataset::validate()
{
  if (rows.empty())
    throw DataError("dataset has no rows");
  std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
    return a.location_id != b.location_id ? a.location_id < b.location_id : a.t < b.t;
  });
  std::map<long, std::vector<const RawRow*>> by_loc;
  for (const auto& r : rows)
    by_loc[r.location_id].push_back(&r);

  const std::vector<double> grid = times();
  for (const auto& [loc, rs] : by_loc) {
    for (std::size_t k = 1; k < rs.size(); ++k)
      if (rs[k]->t == rs[k - 1]->t)
        throw DataError("duplicate key (location " + std::to_string(loc) + ", t="
                        + std::to_string(rs[k]->t) + ")");
    if (rs.front()->t != 0.0)
      throw DataError("location " + std::to_string(loc) + " has no t=0 row");
    if (rs.size() != grid.size()) {
      for (double t : grid)
        if (std::none_of(rs.begin(), rs.end(), [t](const RawRow* r) { return r->t == t; }))
          throw DataError("location " + std::to_string(loc) + " is missing t="
                          + std::to_string(t));
    }
    const RawRow& f = *rs.front();
    for (const RawRow* r : rs)
      if (r->sx != f.sx || r->sy != f.sy || r->h != f.h || r->s != f.s || r->i != f.i)
        throw DataError("location " + std::to_string(loc)
                        + " has spatial features that change over time");
  }
}

RawDataset ingest(std::istream& in, const std::string& source)
{
  std::string line;
  if (!std::getline(in, line))
    throw DataError(source + ": empty file");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (trim(line) != kCsvHeader)
    throw DataError(source + ": header must be '" + std::string(kCsvHeader) + "', got '" + line
                    + "'");

  RawDataset ds;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (trim(line).empty())
      continue;
    const auto f = split_fields(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (f.size() != 8)
      throw DataError(where + ": expected 8 columns, got " + std::to_string(f.size()));
    RawRow r;
    r.location_id = parse_cell<long>(f[0], where);
    r.sx = parse_cell<double>(f[1], where);
    r.sy = parse_cell<double>(f[2], where);
    r.h = parse_cell<double>(f[3], where);
    r.s = parse_cell<double>(f[4], where);
    r.i = parse_cell<double>(f[5], where);
    r.t = parse_cell<double>(f[6], where);
    r.y = parse_cell<double>(f[7], where);
    ds.rows.push_back(r);
  }
  ds.validate();
  return ds;
}

RawDataset ingest(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open dataset file '" + path.string() + "'");
  return ingest(in, path.string());
}

void write_csv(std::ostream& out, const RawDataset& ds)
{
  out << kCsvHeader << '\n';
  out.precision(17);
  for (const auto& r : ds.rows)
    out << r.location_id << ',' << r.sx << ',' << r.sy << ',' << r.h << ',' << r.s << ','
        << r.i << ',' << r.t << ',' << r.y << '\n';
}

std::vector<double> ScalingFactors::apply(const RawRow& row) const
{
  return {row.h / h, row.s / s, row.i / i, row.sx / spatial, row.sy / spatial, row.t};
}

RawRow ScalingFactors::invert(long location_id, const std::vector<double>& v) const
{
  if (v.size() != kInputDims)
    throw ShapeError("expected " + std::to_string(kInputDims) + " inputs, got "
                     + std::to_string(v.size()));
  RawRow r;
  r.location_id = location_id;
  r.h = v[0] * h;
  r.s = v[1] * s;
  r.i = v[2] * i;
  r.sx = v[3] * spatial;
  r.sy = v[4] * spatial;
  r.t = v[5];
  return r;
}

RawDataset StandardizedDataset::destandardize() const
{
  RawDataset raw;
  for (const auto& r : rows) {
    RawRow row = factors.invert(r.location_id, r.point.values);
    row.y = r.y;
    raw.rows.push_back(row);
  }
  return raw;
}

StandardizedDataset standardize_with(const RawDataset& raw, const ScalingFactors& factors)
{
  StandardizedDataset ds;
  ds.factors = factors;
  ds.locations = raw.locations();
  ds.times = raw.times();
  std::map<long, std::size_t> loc_index;
  for (std::size_t k = 0; k < ds.locations.size(); ++k)
    loc_index[ds.locations[k]] = k;
  for (const auto& r : raw.rows) {
    StandardizedRow s;
    s.location_id = r.location_id;
    s.point.values = factors.apply(r);
    s.point.spatial_index = loc_index.at(r.location_id);
    s.point.time_index = static_cast<std::size_t>(
        std::lower_bound(ds.times.begin(), ds.times.end(), r.t) - ds.times.begin());
    s.y = r.y;
    ds.rows.push_back(std::move(s));
  }
  return ds;
}

StandardizedDataset standardize(const RawDataset& raw)
{
  std::map<long, const RawRow*> first;
  for (const auto& r : raw.rows)
    first.emplace(r.location_id, &r);
  if (first.size() < 2)
    throw DataError("standardization needs at least 2 locations");

  std::vector<double> h, s, i, xy;
  for (const auto& [loc, r] : first) {
    h.push_back(r->h);
    s.push_back(r->s);
    i.push_back(r->i);
    xy.push_back(r->sx);
  }
  for (const auto& [loc, r] : first)
    xy.push_back(r->sy);

  ScalingFactors f;
  const std::pair<const char*, double*> targets[] = {
      {"h", &f.h}, {"s", &f.s}, {"i", &f.i}, {"sx/sy", &f.spatial}};
  const std::vector<double>* columns[] = {&h, &s, &i, &xy};
  for (std::size_t k = 0; k < 4; ++k) {
    const double sd = sample_sd(*columns[k]);
    if (!(sd > 0.0))
      throw DataError(std::string("column ") + targets[k].first + " has zero variance");
    *targets[k].second = sd;
  }
  return standardize_with(raw, f);
}

ObservationSet build_virtual_sets(const StandardizedDataset& ds, const VirtualConfig& config,
                                  std::vector<std::string>* warnings)
{
  auto time_index_of = [&ds](double t, const char* what) {
    const auto it = std::find(ds.times.begin(), ds.times.end(), t);
    if (it == ds.times.end())
      throw ConfigError(std::string(what) + " time " + std::to_string(t)
                        + " is not on the dataset time grid");
    return static_cast<std::size_t>(it - ds.times.begin());
  };

  std::set<std::size_t> sign_times;
  for (double t : config.monotone_times)
    sign_times.insert(time_index_of(t, "monotonicity"));
  std::optional<std::size_t> sat_index;
  if (config.saturation)
    sat_index = config.saturation_time ? time_index_of(*config.saturation_time, "saturation")
                                       : ds.times.size() - 1;
  if (warnings && sign_times.size() * 2 > ds.times.size())
    warnings->push_back("sign observations at " + std::to_string(sign_times.size()) + " of "
                        + std::to_string(ds.times.size())
                        + " time points; many inducing points tend to over-smooth the posterior");

  ObservationSet obs;
  obs.strictness = config.strictness;
  for (const auto& r : ds.rows) {
    const std::size_t ti = r.point.time_index;
    if (config.zero_start && ds.times[ti] == 0.0)
      obs.zero_start.push_back(r.point);
    else
      obs.regular.push_back({r.point, r.y});
    if (sign_times.count(ti))
      obs.sign.push_back({DerivativeSpec{r.point, kTimeDim}, 1});
    if (sat_index && ti == *sat_index)
      obs.saturation.push_back(DerivativeSpec{r.point, kTimeDim});
  }
  obs.validate();
  return obs;
}

}  // namespace monogp
