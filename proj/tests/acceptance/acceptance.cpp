// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// if any fails. Arguments select criteria by number (default: all).

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "monogp/data.hpp"
#include "monogp/diagnostics.hpp"
#include "monogp/evaluation.hpp"
#include "monogp/inference.hpp"
#include "monogp/kernel.hpp"
#include "oracles.hpp"

using namespace monogp;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Hyperparameters random_hp(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(0.5, 2.0);
  return Hyperparameters::with_default_groups(u(rng), {u(rng), u(rng), u(rng), u(rng), u(rng)},
                                              0.1);
}

Outcome derivative_kernels()
{
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> dim(0, kInputDims - 1);
  double worst1 = 0.0, worst2 = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto hp = random_hp(rng);
    const auto a = oracle::uniform_vector(rng, kInputDims, -1, 1);
    const auto b = oracle::uniform_vector(rng, kInputDims, -1, 1);
    const std::size_t g = dim(rng), h = dim(rng);
    const double f1 = oracle::fd_first(a, b, g, hp);
    worst1 = std::max(worst1, std::abs(cov_deriv_value({{a}, g}, {b}, hp) - f1) / std::abs(f1));
    const double f2 = oracle::fd_mixed(a, b, g, h, hp);
    worst2 = std::max(worst2,
                      std::abs(cov_deriv_deriv({{a}, g}, {{b}, h}, hp) - f2) / std::abs(f2));
  }
  return {worst1 < 1e-5 && worst2 < 1e-4,
          "200 pairs, max rel err first " + fmt("%.2e", worst1) + " second " + fmt("%.2e", worst2)};
}

Outcome kronecker()
{
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> size(1, 10);
  double err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto hp = random_hp(rng);
    const std::size_t n = size(rng), t = size(rng);
    std::vector<std::vector<double>> xs;
    for (std::size_t i = 0; i < n; ++i)
      xs.push_back(oracle::uniform_vector(rng, kInputDims - 1, -2, 2));
    const auto ts = oracle::uniform_vector(rng, t, 0, 10);
    const auto k = kronecker_cov(xs, ts, hp);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < t; ++a)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t b = 0; b < t; ++b) {
            auto p = xs[i];
            p.push_back(ts[a]);
            auto q = xs[j];
            q.push_back(ts[b]);
            err = std::max(err, std::abs(k(static_cast<Eigen::Index>(i * t + a),
                                           static_cast<Eigen::Index>(j * t + b))
                                         - oracle::se(p, q, hp)));
          }
  }
  return {err < 1e-12, "20 shapes, max abs err " + fmt("%.2e", err)};
}

Outcome conditioning()
{
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> count(1, 20);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  double err = 0.0;
  std::size_t largest = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto hp = Hyperparameters::with_default_groups(
        u(rng), {u(rng), u(rng), u(rng), u(rng), 2 * u(rng)}, 0.05 + 0.3 * u(rng));
    ObservationSet obs;
    std::vector<Site> train;
    std::vector<double> noise, y;
    const double jitter = JitterPolicy{}.initial;
    for (int i = 0, n = count(rng); i < n; ++i) {
      obs.regular.push_back({{oracle::uniform_vector(rng, kInputDims, -2, 2)}, u(rng)});
      train.push_back(Site::value(obs.regular.back().point));
      noise.push_back(hp.sigma * hp.sigma + jitter);
      y.push_back(obs.regular.back().y);
    }
    for (int i = 0, n = count(rng) / 4; i < n; ++i) {
      obs.zero_start.push_back({oracle::uniform_vector(rng, kInputDims, -2, 2)});
      train.push_back(Site::value(obs.zero_start.back()));
      noise.push_back(kDiracVariance + jitter);
      y.push_back(0.0);
    }
    for (int i = 0, n = count(rng) / 4; i < n; ++i) {
      obs.saturation.push_back({{oracle::uniform_vector(rng, kInputDims, -2, 2)}, kTimeDim});
      train.push_back(Site::derivative(obs.saturation.back()));
      noise.push_back(kDiracVariance + jitter);
      y.push_back(0.0);
    }
    std::vector<Site> test;
    for (int i = 0, n = count(rng) / 3; i < n; ++i)
      test.push_back(Site::value({oracle::uniform_vector(rng, kInputDims, -2, 2)}));
    test.push_back(Site::derivative({{oracle::uniform_vector(rng, kInputDims, -2, 2)}, kTimeDim}));
    largest = std::max(largest, train.size() + test.size());

    const auto got = condition_gaussian(obs, test, hp);
    const auto ref = oracle::condition(train, Eigen::Map<Eigen::VectorXd>(noise.data(), noise.size()),
                                       Eigen::Map<Eigen::VectorXd>(y.data(), y.size()), test, hp);
    err = std::max({err, (got.mean - ref.mean).cwiseAbs().maxCoeff(),
                    (got.covariance - ref.cov).cwiseAbs().maxCoeff()});
  }
  return {err < 1e-8 && largest <= 40, "20 problems up to " + std::to_string(largest)
                                           + " points, max abs err " + fmt("%.2e", err)};
}

CvOptions cv_options(std::uint64_t seed)
{
  CvOptions o;
  o.full.chains = 3;
  o.full.warmup = 1000;
  o.full.draws = 1000;
  o.full.seed = seed;
  o.fold.chains = 2;
  o.fold.warmup = 150;
  o.fold.draws = 250;
  o.max_draws = 300;
  o.seed = seed + 11;
  o.resolve(kInputDims);
  return o;
}

ObservationSet default_layout(std::uint64_t seed)
{
  return build_virtual_sets(standardize(simulate(SimulateConfig{}, seed)), VirtualConfig{});
}

Outcome constraint_satisfaction()
{
  const auto obs = default_layout(4000);
  const auto opts = cv_options(4);
  const auto full = sample_hyperparameters(obs, opts.prior, opts.groups, opts.group_count, opts.full);
  const auto folds = make_folds(obs, CvScheme::parse("cv2"));
  std::size_t monotone = 0, anchored = 0;
  double worst_step = 0.0, worst_zero = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    const std::size_t loc = obs.regular[fold.held_out.front()].point.spatial_index;
    std::vector<InputPoint> series;
    for (const auto& p : obs.zero_start)
      if (p.spatial_index == loc)
        series.push_back(p);
    for (const auto& r : obs.regular)
      if (r.point.spatial_index == loc)
        series.push_back(r.point);
    std::sort(series.begin(), series.end(),
              [](const InputPoint& a, const InputPoint& b) { return a.time_index < b.time_index; });

    SamplerConfig cfg = opts.fold;
    cfg.seed = opts.seed + 7919 * (f + 1);
    cfg.warm_start = full.warm_start();
    const auto fit = sample_hyperparameters(fold.train, opts.prior, opts.groups, opts.group_count, cfg);
    std::vector<Site> test;
    for (const auto& p : series)
      test.push_back(Site::value(p));
    PredictOptions po;
    po.target = PredictTarget::latent;
    po.max_draws = opts.max_draws;
    po.seed = cfg.seed;
    const auto pred = predict(fit, fold.train, test, po);

    double step = 0.0;
    for (Eigen::Index k = 1; k < pred.mean.size(); ++k)
      step = std::min(step, pred.mean[k] - pred.mean[k - 1]);
    worst_step = std::min(worst_step, step);
    if (step >= 0.0)
      ++monotone;
    const double zero = series.front().time_index == 0 ? std::abs(pred.mean[0]) : INFINITY;
    worst_zero = std::max(worst_zero, zero);
    if (zero < 1e-3)
      ++anchored;
  }
  const std::size_t n = folds.size();
  return {monotone * 100 >= 95 * n && anchored == n,
          std::to_string(monotone) + "/" + std::to_string(n) + " non-decreasing (worst step "
              + fmt("%.2e", worst_step) + "), " + std::to_string(anchored) + "/"
              + std::to_string(n) + " with |mean(t=0)| < 1e-3 (worst " + fmt("%.2e", worst_zero)
              + ")"};
}

Outcome variant_ordering()
{
  const char* schemes[] = {"cv1", "cv2", "cv3"};
  int elpd_wins[3] = {0, 0, 0};
  int mse_wins_cv2 = 0;
  const int runs = 10;
  for (int s = 0; s < runs; ++s) {
    const auto obs = default_layout(5000 + s);
    auto opts = cv_options(500 + s);
    opts.full.warmup = 2000;
    opts.full.draws = 2000;
    opts.fit = FoldFit::recondition;
    const auto with = sample_hyperparameters(obs, opts.prior, opts.groups, opts.group_count, opts.full);
    const auto without = sample_hyperparameters(obs.without_derivatives(), opts.prior, opts.groups,
                                                opts.group_count, opts.full);
    std::ostringstream line;
    line << "  dataset " << s;
    for (int k = 0; k < 3; ++k) {
      const auto scheme = CvScheme::parse(schemes[k]);
      const auto a = run_cv(obs, scheme, ModelVariant::with_derivatives, opts, &with);
      const auto b = run_cv(obs, scheme, ModelVariant::without_derivatives, opts, &without);
      if (a.elpd > b.elpd)
        ++elpd_wins[k];
      if (k == 1 && a.mse <= b.mse)
        ++mse_wins_cv2;
      line << " | " << schemes[k] << " elpd " << fmt("%.3f", a.elpd) << " vs "
           << fmt("%.3f", b.elpd) << " mse " << fmt("%.3f", a.mse) << " vs " << fmt("%.3f", b.mse);
    }
    std::cout << line.str() << std::endl;
  }
  const bool pass = elpd_wins[1] >= 9 && elpd_wins[0] >= 8 && elpd_wins[2] >= 8 && mse_wins_cv2 >= 8;
  return {pass, "ELPD wins cv1 " + std::to_string(elpd_wins[0]) + "/10, cv2 "
                    + std::to_string(elpd_wins[1]) + "/10, cv3 " + std::to_string(elpd_wins[2])
                    + "/10; MSE wins cv2 " + std::to_string(mse_wins_cv2) + "/10"};
}

Outcome pit_calibration()
{
  const auto truth = Hyperparameters::with_default_groups(1.0, {2, 2, 2, 2, 3}, 0.3);
  VirtualConfig plain;
  plain.zero_start = false;
  plain.monotone_times.clear();
  int calibrated = 0;
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    const auto obs = build_virtual_sets(simulate_gp_prior(10, 10, truth, 600 + s), plain);
    const auto opts = cv_options(60 + s);
    const auto report = run_cv(obs, CvScheme::parse("cv1"), ModelVariant::without_derivatives, opts);
    const double d = ks_distance_uniform(report.loo_pit);
    const double crit = ks_critical_value_05(report.loo_pit.size());
    worst = std::max(worst, d / crit);
    if (d < crit)
      ++calibrated;
  }
  return {calibrated >= 8, std::to_string(calibrated) + "/10 below the KS 5% critical value "
                               + "(worst distance/critical " + fmt("%.2f", worst) + ")"};
}

Outcome sampler_coverage()
{
  const auto truth = Hyperparameters::with_default_groups(1.0, {2, 2, 2, 2, 2}, 0.1);
  const std::size_t time_param = 1 + truth.group_of_dim[kTimeDim];
  const std::size_t sigma_param = 1 + truth.lengthscales.size();
  VirtualConfig plain;
  plain.zero_start = false;
  plain.monotone_times.clear();
  int covered[3] = {0, 0, 0};
  int all_three = 0;
  double worst_rhat = 0.0;
  for (int s = 0; s < 20; ++s) {
    const auto obs = build_virtual_sets(simulate_gp_prior(5, 8, truth, 700 + s), plain);
    auto opts = cv_options(70 + s);
    opts.full.chains = 4;
    opts.full.warmup = 5000;
    opts.full.draws = 5000;
    const auto fit = sample_hyperparameters(obs, opts.prior, opts.groups, opts.group_count, opts.full);
    const auto summary = summarize_parameters(fit);
    for (const auto& p : summary)
      worst_rhat = std::max(worst_rhat, p.rhat);
    const std::size_t idx[3] = {0, time_param, sigma_param};
    const double value[3] = {truth.alpha, truth.lengthscales[truth.group_of_dim[kTimeDim]],
                             truth.sigma};
    bool all = true;
    for (int k = 0; k < 3; ++k) {
      const auto& p = summary[idx[k]];
      const bool in = p.q05 <= value[k] && value[k] <= p.q95;
      covered[k] += in;
      all = all && in;
    }
    all_three += all;
  }
  const bool pass =
      covered[0] >= 16 && covered[1] >= 16 && covered[2] >= 16 && worst_rhat < 1.05;
  return {pass, "90% coverage alpha " + std::to_string(covered[0]) + "/20, rho_time "
                    + std::to_string(covered[1]) + "/20, sigma " + std::to_string(covered[2])
                    + "/20 (jointly " + std::to_string(all_three) + "/20); max split-Rhat "
                    + fmt("%.3f", worst_rhat)};
}

Outcome v_limit()
{
  const auto hp = Hyperparameters::with_default_groups(1.0, {1, 1, 1, 1, 2}, 0.2);
  const InputPoint p{{0.0, 0.2, -0.1, 0.5, -0.3, 3.0}, 0, 3};

  ObservationSet strict;
  strict.sign = {{{p, kTimeDim}, 1}};
  strict.strictness = 1e-4;
  const auto s = sample_latents_constrained(strict, hp, 4000, 81);
  const double positive = (s.f_prime.col(0).array() > 0.0).cast<double>().mean();

  // Loose constraint on a small data set: compare means and variances of
  // every latent with the unconstrained Gaussian conditional.
  ObservationSet loose;
  std::mt19937_64 rng(82);
  std::normal_distribution<double> z;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t t = 1; t < 5; ++t) {
      const InputPoint q{{0.7 * static_cast<double>(i), 0.2, -0.1, 0.5, -0.3, static_cast<double>(t)},
                         i, t};
      loose.regular.push_back({q, 1.0 - std::exp(-0.4 * static_cast<double>(t)) + 0.1 * z(rng)});
    }
  loose.sign = {{{loose.regular[1].point, kTimeDim}, 1}, {{loose.regular[6].point, kTimeDim}, 1}};
  loose.strictness = 1e3;
  const auto draws = sample_latents_constrained(loose, hp, 8000, 83);
  std::vector<Site> sites;
  for (const auto& q : draws.layout.value_points)
    sites.push_back(Site::value(q));
  for (const auto& d : draws.layout.derivative_points)
    sites.push_back(Site::derivative(d));
  auto bare = loose;
  bare.sign.clear();
  const auto exact = condition_gaussian(bare, sites, hp);

  Eigen::MatrixXd all(draws.f.rows(), draws.f.cols() + draws.f_prime.cols());
  all << draws.f, draws.f_prime;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < all.cols(); ++j) {
    std::vector<std::vector<double>> x(4), sq(4);
    const double mu = exact.mean[j];
    for (Eigen::Index r = 0; r < all.rows(); ++r) {
      const auto c = static_cast<std::size_t>(4 * r / all.rows());
      x[c].push_back(all(r, j));
      sq[c].push_back((all(r, j) - mu) * (all(r, j) - mu));
    }
    const Eigen::ArrayXd col = all.col(j).array();
    const Eigen::ArrayXd dev = (col - mu).square();
    const double n = static_cast<double>(col.size());
    const double se_mean =
        std::sqrt((col - col.mean()).square().mean() / std::max(effective_sample_size(x), 1.0));
    const double se_var =
        std::sqrt((dev - dev.mean()).square().mean() / std::max(effective_sample_size(sq), 1.0));
    const double var = exact.sd[j] * exact.sd[j];
    worst = std::max({worst, std::abs(col.mean() - mu) / se_mean,
                      std::abs(dev.sum() / n - var) / se_var});
  }
  return {positive >= 0.95 && worst < 3.0,
          "Pr(f'>0) " + fmt("%.4f", positive) + " at v=1e-4; at v=1e3 largest moment gap "
              + fmt("%.2f", worst) + " MC standard errors"};
}

struct Criterion
{
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv)
{
  const std::vector<Criterion> criteria{
      {1, "derivative kernels vs finite differences", 5, derivative_kernels},
      {2, "Kronecker equivalence", 5, kronecker},
      {3, "exact conditioning vs dense oracle", 10, conditioning},
      {4, "constraint satisfaction (CV2)", 600, constraint_satisfaction},
      {5, "ELPD/MSE ordering over 10 datasets", 7200, variant_ordering},
      {6, "LOO-PIT calibration", 1800, pit_calibration},
      {7, "sampler coverage and split-Rhat", 3600, sampler_coverage},
      {8, "strictness limits", 60, v_limit},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i)
    selected.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id))
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = sec < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << ": " << c.name << ": "
              << o.detail << "; " << fmt("%.1f", sec) << " s (limit " << fmt("%.0f", c.budget_s)
              << " s)" << (in_time ? "" : " over time") << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
