#include "monogp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "monogp/errors.hpp"

namespace monogp {

namespace {

std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains)
{
  if (chains.size() < 2)
    throw DiagnosticError("split-Rhat needs at least 2 chains");
  std::size_t len = chains.front().size();
  for (const auto& c : chains)
    len = std::min(len, c.size());
  if (len < 4)
    throw DiagnosticError("chains need at least 4 draws for split diagnostics");
  const std::size_t half = len / 2;
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(len - half),
                     c.begin() + static_cast<std::ptrdiff_t>(len));
  }
  return out;
}

struct VarianceParts
{
  double within = 0.0;
  double between = 0.0;
  double var_plus = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
};

VarianceParts variance_parts(const std::vector<std::vector<double>>& split)
{
  VarianceParts vp;
  vp.m = split.size();
  vp.n = split.front().size();
  const double n = static_cast<double>(vp.n);
  std::vector<double> means;
  double grand = 0.0;
  for (const auto& c : split) {
    double mean = 0.0;
    for (double x : c)
      mean += x;
    mean /= n;
    means.push_back(mean);
    grand += mean;
    double ss = 0.0;
    for (double x : c)
      ss += (x - mean) * (x - mean);
    vp.within += ss / (n - 1.0);
  }
  grand /= static_cast<double>(vp.m);
  vp.within /= static_cast<double>(vp.m);
  for (double mean : means)
    vp.between += (mean - grand) * (mean - grand);
  vp.between *= n / static_cast<double>(vp.m - 1);
  vp.var_plus = (n - 1.0) / n * vp.within + vp.between / n;
  return vp;
}

}  // namespace

RhatResult split_rhat(const std::vector<std::vector<double>>& chains)
{
  const auto vp = variance_parts(split_chains(chains));
  if (vp.within <= 0.0) {
    if (vp.between <= 0.0)
      return {1.0, true};
    return {std::numeric_limits<double>::infinity(), false};
  }
  return {std::sqrt(vp.var_plus / vp.within), false};
}

double effective_sample_size(const std::vector<std::vector<double>>& chains)
{
  const auto split = split_chains(chains);
  const auto vp = variance_parts(split);
  const double total = static_cast<double>(vp.m * vp.n);
  if (vp.var_plus <= 0.0)
    return total;

  auto rho = [&](std::size_t lag) {
    double v = 0.0;
    for (const auto& c : split)
      for (std::size_t i = lag; i < c.size(); ++i) {
        const double d = c[i] - c[i - lag];
        v += d * d;
      }
    v /= static_cast<double>(vp.m * (vp.n - lag));
    return 1.0 - v / (2.0 * vp.var_plus);
  };

  // Geyer: sum pairs (rho_{2k-1} + rho_{2k}) while positive.
  double sum = 0.0;
  for (std::size_t lag = 1; lag + 1 < vp.n; lag += 2) {
    const double pair = rho(lag) + rho(lag + 1);
    if (pair < 0.0)
      break;
    sum += pair;
  }
  return total / std::max(1.0 + 2.0 * sum, 1.0 / total);
}

double sample_quantile(std::vector<double> values, double q)
{
  if (values.empty())
    throw DiagnosticError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double histogram_mode(const std::vector<double>& values)
{
  if (values.empty())
    throw DiagnosticError("mode of an empty sample");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi <= lo)
    return lo;
  const double iqr = sample_quantile(values, 0.75) - sample_quantile(values, 0.25);
  double width = 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
  if (!(width > 0.0))
    width = (hi - lo) / 10.0;
  const auto bins = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil((hi - lo) / width)), 1, 10000);
  width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(b, bins - 1)] += 1;
  }
  const auto peak = static_cast<std::size_t>(
      std::distance(counts.begin(), std::max_element(counts.begin(), counts.end())));
  return lo + (static_cast<double>(peak) + 0.5) * width;
}

std::vector<ParameterSummary> summarize_parameters(const PosteriorSamples& samples)
{
  std::vector<ParameterSummary> out;
  const auto names = samples.parameter_names();
  for (std::size_t p = 0; p < names.size(); ++p) {
    const auto chains = samples.parameter_chains(p);
    std::vector<double> all;
    for (const auto& c : chains)
      all.insert(all.end(), c.begin(), c.end());
    ParameterSummary s;
    s.name = names[p];
    double mean = 0.0;
    for (double v : all)
      mean += v;
    mean /= static_cast<double>(all.size());
    double ss = 0.0;
    for (double v : all)
      ss += (v - mean) * (v - mean);
    s.mean = mean;
    s.sd = all.size() > 1 ? std::sqrt(ss / static_cast<double>(all.size() - 1)) : 0.0;
    s.mode = histogram_mode(all);
    s.q05 = sample_quantile(all, 0.05);
    s.q50 = sample_quantile(all, 0.5);
    s.q95 = sample_quantile(all, 0.95);
    const RhatResult r = split_rhat(chains);
    s.rhat = r.value;
    s.zero_variance = r.zero_variance;
    s.ess = effective_sample_size(chains);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace monogp
