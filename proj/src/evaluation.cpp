#include "monogp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>

#include "json.hpp"

#include "elliptical_slice.hpp"
#include "monogp/diagnostics.hpp"
#include "monogp/errors.hpp"
#include "monogp/random.hpp"

namespace monogp {

namespace {

using Key = std::pair<std::size_t, std::size_t>;

Key key_of(const InputPoint& p) { return {p.spatial_index, p.time_index}; }

std::vector<std::size_t> even_subset(std::size_t total, std::size_t max_count)
{
  std::vector<std::size_t> idx;
  const std::size_t n = (max_count == 0 || total <= max_count) ? total : max_count;
  for (std::size_t k = 0; k < n; ++k)
    idx.push_back(k * total / n);
  return idx;
}

struct FoldPlan
{
  CvFold fold;
  std::vector<std::size_t> kept_sign;
};

FoldPlan plan_fold(const ObservationSet& obs, const std::set<std::size_t>& held,
                   const std::set<Key>& anchored)
{
  FoldPlan plan;
  std::set<Key> keys;
  for (std::size_t r : held) {
    keys.insert(key_of(obs.regular[r].point));
    plan.fold.held_out.push_back(r);
    if (!anchored.count(key_of(obs.regular[r].point)))
      plan.fold.scored.push_back(r);
  }
  ObservationSet& train = plan.fold.train;
  train.strictness = obs.strictness;
  for (std::size_t r = 0; r < obs.regular.size(); ++r)
    if (!held.count(r) && !keys.count(key_of(obs.regular[r].point)))
      train.regular.push_back(obs.regular[r]);
  const auto removed = [&](const InputPoint& p) {
    return keys.count(key_of(p)) > 0;
  };
  for (const auto& p : obs.zero_start)
    if (!removed(p))
      train.zero_start.push_back(p);
  for (const auto& d : obs.saturation)
    if (!removed(d.point))
      train.saturation.push_back(d);
  for (std::size_t k = 0; k < obs.sign.size(); ++k)
    if (!removed(obs.sign[k].spec.point)) {
      train.sign.push_back(obs.sign[k]);
      plan.kept_sign.push_back(k);
    }
  if (train.regular.empty())
    throw SchemeError("fold leaves no regular observations for training");
  return plan;
}

std::vector<FoldPlan> plan_folds(const ObservationSet& obs, const CvScheme& scheme)
{
  if (obs.regular.empty())
    throw SchemeError("no regular observations to cross-validate");
  std::set<Key> anchored;
  for (const auto& p : obs.zero_start)
    anchored.insert(key_of(p));

  std::set<std::size_t> locations;
  std::size_t time_count = 0;
  for (const auto& r : obs.regular) {
    locations.insert(r.point.spatial_index);
    time_count = std::max(time_count, r.point.time_index + 1);
  }

  std::vector<FoldPlan> plans;
  switch (scheme.kind) {
  case CvKind::cv1:
    for (std::size_t r = 0; r < obs.regular.size(); ++r)
      if (!anchored.count(key_of(obs.regular[r].point)))
        plans.push_back(plan_fold(obs, {r}, anchored));
    break;
  case CvKind::cv2:
    if (locations.size() < 2)
      throw SchemeError("leave-one-location needs at least 2 locations");
    for (std::size_t loc : locations) {
      std::set<std::size_t> held;
      for (std::size_t r = 0; r < obs.regular.size(); ++r)
        if (obs.regular[r].point.spatial_index == loc)
          held.insert(r);
      plans.push_back(plan_fold(obs, held, anchored));
    }
    break;
  case CvKind::cv3: {
    if (scheme.tail_length == 0 || scheme.tail_length >= time_count)
      throw ConfigError("tail length " + std::to_string(scheme.tail_length)
                        + " must be positive and shorter than the " + std::to_string(time_count)
                        + " time points");
    const std::size_t first = time_count - scheme.tail_length;
    for (std::size_t loc : locations) {
      std::set<std::size_t> held;
      for (std::size_t r = 0; r < obs.regular.size(); ++r)
        if (obs.regular[r].point.spatial_index == loc && obs.regular[r].point.time_index >= first)
          held.insert(r);
      plans.push_back(plan_fold(obs, held, anchored));
    }
    break;
  }
  }
  if (plans.empty())
    throw SchemeError("scheme " + scheme.name() + " produced no folds");
  return plans;
}

// Fold predictive moments from the full-data hyperparameter draws.
PredictiveMoments recondition(const PosteriorSamples& full, const FoldPlan& plan,
                              const std::vector<Site>& test, const CvOptions& options,
                              std::uint64_t seed)
{
  const auto draws = full.flat();
  const ObservationSystem sys = build_system(plan.fold.train);
  const auto chosen = even_subset(draws.size(), options.max_draws);
  const auto rows = static_cast<Eigen::Index>(chosen.size());
  const auto cols = static_cast<Eigen::Index>(test.size());
  PredictiveMoments out;
  out.mean.resize(rows, cols);
  out.variance.resize(rows, cols);
  out.noise.resize(rows, cols);
  Rng rng = make_rng(seed, 0xec0d);

  for (Eigen::Index r = 0; r < rows; ++r) {
    const PosteriorDraw& d = *draws[chosen[static_cast<std::size_t>(r)]];
    const ConditionedSystem cs(sys, d.hp);
    Eigen::VectorXd nu(0);
    if (sys.sign_count() > 0) {
      Eigen::VectorXd c(sys.sign_count());
      for (std::size_t k = 0; k < plan.kept_sign.size(); ++k)
        c[static_cast<Eigen::Index>(k)] =
            d.latent_f_prime[static_cast<Eigen::Index>(plan.kept_sign[k])];
      nu = cs.whiten(c);
      double ll = cs.sign_log_lik(nu);
      auto eval = [&cs](const Eigen::VectorXd& x) { return cs.sign_log_lik(x); };
      for (std::size_t k = 0; k < options.recondition_sweeps; ++k)
        nu = detail::elliptical_slice(nu, ll, eval, rng);
    }
    const auto m = cs.moments(test, nu);
    out.mean.row(r) = m.mean.transpose();
    out.variance.row(r) = m.variance.transpose();
    out.noise.row(r).setConstant(d.hp.sigma * d.hp.sigma);
  }
  return out;
}

double max_rhat(const PosteriorSamples& s)
{
  double worst = 1.0;
  for (std::size_t p = 0; p < s.parameter_count(); ++p)
    worst = std::max(worst, split_rhat(s.parameter_chains(p)).value);
  return worst;
}

}  // namespace

std::string CvScheme::name() const
{
  switch (kind) {
  case CvKind::cv1:
    return "cv1";
  case CvKind::cv2:
    return "cv2";
  case CvKind::cv3:
    return "cv3";
  }
  return "?";
}

CvScheme CvScheme::parse(const std::string& name, std::size_t tail_length)
{
  if (name == "cv1")
    return {CvKind::cv1, tail_length};
  if (name == "cv2")
    return {CvKind::cv2, tail_length};
  if (name == "cv3")
    return {CvKind::cv3, tail_length};
  throw ConfigError("unknown cross-validation scheme '" + name + "' (expected cv1, cv2 or cv3)");
}

std::string to_string(ModelVariant v)
{
  return v == ModelVariant::with_derivatives ? "with_derivatives" : "without_derivatives";
}

std::size_t EvalReport::point_count() const
{
  std::size_t n = 0;
  for (const auto& f : folds)
    n += f.points.size();
  return n;
}

void CvOptions::resolve(std::size_t input_dimension)
{
  if (!groups.empty())
    return;
  if (input_dimension == kInputDims) {
    groups.assign(kDefaultGroups.begin(), kDefaultGroups.end());
    group_count = kDefaultGroupCount;
  } else {
    groups.resize(input_dimension);
    for (std::size_t d = 0; d < input_dimension; ++d)
      groups[d] = d;
    group_count = input_dimension;
  }
}

std::vector<CvFold> make_folds(const ObservationSet& obs, const CvScheme& scheme)
{
  std::vector<CvFold> out;
  for (auto& p : plan_folds(obs, scheme))
    out.push_back(std::move(p.fold));
  return out;
}

double mixture_log_density(double y, const Eigen::VectorXd& means,
                           const Eigen::VectorXd& variances)
{
  if (means.size() == 0 || means.size() != variances.size())
    throw ShapeError("mixture needs matching, non-empty means and variances");
  Eigen::VectorXd terms(means.size());
  for (Eigen::Index d = 0; d < means.size(); ++d) {
    const double v = variances[d];
    if (!(v > 0.0))
      throw DomainError("mixture component variance must be positive");
    const double r = y - means[d];
    terms[d] = -0.5 * (std::log(2.0 * std::numbers::pi * v) + r * r / v);
  }
  const double top = terms.maxCoeff();
  return top + std::log((terms.array() - top).exp().sum()) - std::log(double(means.size()));
}

double pit_value(double y, const Eigen::VectorXd& draws)
{
  if (draws.size() == 0)
    throw ConfigError("no predictive draws for LOO-PIT");
  return static_cast<double>((draws.array() <= y).count()) / static_cast<double>(draws.size());
}

double mean_squared_error(const std::vector<double>& y, const std::vector<double>& mean)
{
  if (y.size() != mean.size() || y.empty())
    throw ShapeError("MSE needs matching, non-empty vectors");
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k)
    s += (y[k] - mean[k]) * (y[k] - mean[k]);
  return s / static_cast<double>(y.size());
}

double ks_distance_uniform(std::vector<double> values)
{
  if (values.empty())
    throw DomainError("KS distance of an empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double u = std::clamp(values[k], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(k) + 1.0) / n - u, u - static_cast<double>(k) / n});
  }
  return d;
}

double ks_critical_value_05(std::size_t n)
{
  const double sn = std::sqrt(static_cast<double>(n));
  return 1.358 / (sn + 0.12 + 0.11 / sn);
}

std::vector<std::size_t> pit_histogram(const std::vector<double>& pit, std::size_t bins)
{
  if (bins == 0)
    throw DomainError("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (double p : pit) {
    auto b = static_cast<std::size_t>(std::clamp(p, 0.0, 1.0) * static_cast<double>(bins));
    counts[std::min(b, bins - 1)] += 1;
  }
  return counts;
}

EvalReport run_cv(const ObservationSet& obs, const CvScheme& scheme, ModelVariant variant,
                  CvOptions options, const PosteriorSamples* full_fit)
{
  options.resolve(obs.input_dimension());
  const ObservationSet model_obs =
      variant == ModelVariant::with_derivatives ? obs : obs.without_derivatives();
  const auto plans = plan_folds(model_obs, scheme);

  std::optional<PosteriorSamples> own_fit;
  if (!full_fit) {
    own_fit = sample_hyperparameters(model_obs, options.prior, options.groups,
                                     options.group_count, options.full);
    full_fit = &*own_fit;
  }

  EvalReport report;
  report.scheme = scheme;
  report.variant = variant;
  report.metadata["scheme"] = scheme.name();
  report.metadata["variant"] = to_string(variant);
  report.metadata["fold_fit"] = options.fit == FoldFit::refit ? "refit" : "recondition";
  report.metadata["folds"] = std::to_string(plans.size());
  if (scheme.kind == CvKind::cv3)
    report.metadata["held_out"] = "last " + std::to_string(scheme.tail_length) + " time points of one location per fold";

  std::vector<double> all_y, all_mean;
  double log_density_sum = 0.0;
  for (std::size_t f = 0; f < plans.size(); ++f) {
    const FoldPlan& plan = plans[f];
    const std::uint64_t fold_seed = options.seed + 7919 * (f + 1);
    std::vector<Site> test;
    for (std::size_t r : plan.fold.scored)
      test.push_back(Site::value(model_obs.regular[r].point));
    if (test.empty())
      continue;

    FoldRecord rec;
    rec.index = f;
    PredictiveMoments m;
    if (options.fit == FoldFit::refit) {
      // A single fold gets a full-length cold fit.
      SamplerConfig cfg = plans.size() == 1 ? options.full : options.fold;
      cfg.seed = fold_seed;
      if (plans.size() > 1)
        cfg.warm_start = full_fit->warm_start();
      const PosteriorSamples s = sample_hyperparameters(plan.fold.train, options.prior,
                                                        options.groups, options.group_count, cfg);
      rec.max_rhat = max_rhat(s);
      PredictOptions po;
      po.target = PredictTarget::observation;
      po.max_draws = options.max_draws;
      m = predictive_moments(s, plan.fold.train, test, po);
    } else {
      m = recondition(*full_fit, plan, test, options, fold_seed);
    }
    const PredictiveDistribution pd =
        summarize_moments(m, plan.fold.train.has_sign(), fold_seed, true);

    std::vector<double> fy, fm;
    for (std::size_t k = 0; k < plan.fold.scored.size(); ++k) {
      const auto j = static_cast<Eigen::Index>(k);
      const auto& row = model_obs.regular[plan.fold.scored[k]];
      PointRecord p;
      p.row = plan.fold.scored[k];
      p.location = row.point.spatial_index;
      p.t = row.point.values[row.point.values.size() - 1];
      p.y = row.y;
      p.mean = pd.mean[j];
      p.sd = pd.sd[j];
      p.lower95 = pd.lower95[j];
      p.upper95 = pd.upper95[j];
      p.log_density = mixture_log_density(row.y, m.mean.col(j), m.variance.col(j) + m.noise.col(j));
      p.pit = pit_value(row.y, pd.draws->col(j));
      rec.elpd += p.log_density;
      log_density_sum += p.log_density;
      fy.push_back(p.y);
      fm.push_back(p.mean);
      if (scheme.kind == CvKind::cv1)
        report.loo_pit.push_back(p.pit);
      rec.points.push_back(p);
    }
    rec.elpd /= static_cast<double>(rec.points.size());
    rec.mse = mean_squared_error(fy, fm);
    all_y.insert(all_y.end(), fy.begin(), fy.end());
    all_mean.insert(all_mean.end(), fm.begin(), fm.end());
    report.folds.push_back(std::move(rec));
  }
  if (all_y.empty())
    throw SchemeError("scheme " + scheme.name() + " has no scored observations");
  report.elpd = log_density_sum / static_cast<double>(all_y.size());
  report.mse = mean_squared_error(all_y, all_mean);
  return report;
}

std::pair<EvalReport, EvalReport> compare_variants(const ObservationSet& obs,
                                                   const CvScheme& scheme,
                                                   const CvOptions& options)
{
  return {run_cv(obs, scheme, ModelVariant::with_derivatives, options),
          run_cv(obs, scheme, ModelVariant::without_derivatives, options)};
}

std::vector<double> loo_pit(const ObservationSet& obs, ModelVariant variant,
                            const CvOptions& options)
{
  return run_cv(obs, {CvKind::cv1}, variant, options).loo_pit;
}

void write_report_json(std::ostream& out, const EvalReport& report)
{
  nlohmann::json j;
  j["scheme"] = report.scheme.name();
  j["tail_length"] = report.scheme.tail_length;
  j["variant"] = to_string(report.variant);
  j["elpd"] = report.elpd;
  j["mse"] = report.mse;
  j["points"] = report.point_count();
  j["loo_pit"] = report.loo_pit;
  j["metadata"] = report.metadata;
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds)
    folds.push_back({{"fold", f.index},
                     {"elpd", f.elpd},
                     {"mse", f.mse},
                     {"points", f.points.size()},
                     {"max_rhat", f.max_rhat}});
  j["folds"] = folds;
  out << j.dump(2) << '\n';
}

void write_folds_csv(std::ostream& out, const EvalReport& report)
{
  out << "fold,location,t,y,mean,sd,lower95,upper95,log_density,pit\n";
  out.precision(10);
  for (const auto& f : report.folds)
    for (const auto& p : f.points)
      out << f.index << ',' << p.location << ',' << p.t << ',' << p.y << ',' << p.mean << ','
          << p.sd << ',' << p.lower95 << ',' << p.upper95 << ',' << p.log_density << ','
          << p.pit << '\n';
}

}  // namespace monogp
