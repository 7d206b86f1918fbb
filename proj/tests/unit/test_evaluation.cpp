#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "monogp/data.hpp"
#include "monogp/errors.hpp"
#include "monogp/evaluation.hpp"

#include "json.hpp"

using namespace monogp;

namespace {

ObservationSet default_layout(std::uint64_t seed)
{
  return build_virtual_sets(standardize(simulate(SimulateConfig{}, seed)), VirtualConfig{});
}

using Key = std::pair<std::size_t, std::size_t>;

Key key(const InputPoint& p)
{
  return {p.spatial_index, p.time_index};
}

CvOptions quick_options()
{
  CvOptions o;
  o.full.chains = 2;
  o.full.warmup = 150;
  o.full.draws = 150;
  o.fold = o.full;
  o.fold.warmup = 50;
  o.fold.draws = 50;
  o.max_draws = 100;
  return o;
}

}  // namespace

TEST_CASE("scheme names")
{
  CHECK(CvScheme::parse("cv2").kind == CvKind::cv2);
  CHECK(CvScheme::parse("cv3", 4).tail_length == 4);
  CHECK(CvScheme::parse("cv1").name() == "cv1");
  CHECK_THROWS_AS(CvScheme::parse("cv4"), ConfigError);
}

TEST_CASE("fold counts")
{
  const auto obs = default_layout(1);
  CHECK(make_folds(obs, CvScheme::parse("cv1")).size() == 130);
  const auto cv2 = make_folds(obs, CvScheme::parse("cv2"));
  REQUIRE(cv2.size() == 13);
  for (const auto& f : cv2) {
    CHECK(f.held_out.size() == 10);
    CHECK(f.train.regular.size() == 120);
    CHECK(f.train.zero_start.size() == 13);
    CHECK(f.train.sign.size() == 24);
  }
  const auto cv3 = make_folds(obs, CvScheme::parse("cv3"));
  REQUIRE(cv3.size() == 13);
  for (const auto& f : cv3) {
    CHECK(f.held_out.size() == 7);
    for (std::size_t r : f.held_out)
      CHECK(obs.regular[r].point.time_index >= 4);
    CHECK(f.train.regular.size() == 123);
    CHECK(f.train.zero_start.size() == 13);
    CHECK(f.train.sign.size() == 24);
  }

  CHECK_THROWS_AS(make_folds(obs, CvScheme::parse("cv3", 11)), ConfigError);
  CHECK_THROWS_AS(make_folds(obs, CvScheme::parse("cv3", 0)), ConfigError);
}

TEST_CASE("held-out points never reach their fold's training set")
{
  const auto obs = default_layout(2);
  for (const char* name : {"cv1", "cv2", "cv3"}) {
    for (const auto& f : make_folds(obs, CvScheme::parse(name))) {
      std::set<Key> held;
      for (std::size_t r : f.held_out)
        held.insert(key(obs.regular[r].point));
      for (const auto& r : f.train.regular)
        CHECK(!held.count(key(r.point)));
      for (const auto& p : f.train.zero_start)
        CHECK(!held.count(key(p)));
      for (const auto& s : f.train.sign)
        CHECK(!held.count(key(s.spec.point)));
      for (const auto& b : f.train.saturation)
        CHECK(!held.count(key(b.point)));
    }
  }
}

TEST_CASE("anchored rows are held out but not scored")
{
  VirtualConfig cfg;
  cfg.zero_start = false;
  auto obs = build_virtual_sets(standardize(simulate(SimulateConfig{}, 3)), cfg);
  // Anchors added on top of the t = 0 rows.
  for (const auto& r : obs.regular)
    if (r.point.time_index == 0)
      obs.zero_start.push_back(r.point);
  CHECK(make_folds(obs, CvScheme::parse("cv1")).size() == 130);
  for (const auto& f : make_folds(obs, CvScheme::parse("cv2"))) {
    CHECK(f.held_out.size() == 11);
    CHECK(f.scored.size() == 10);
  }
}

TEST_CASE("mixture log density")
{
  Eigen::VectorXd m(1), v(1);
  m << 0.0;
  v << 1.0;
  CHECK(mixture_log_density(0.0, m, v) == doctest::Approx(-0.918938533));
  Eigen::VectorXd m2(2), v2(2);
  m2 << -1.0, 1.0;
  v2 << 0.25, 4.0;
  const double ref = std::log(0.5 * (std::exp(-0.5 * 1.69 / 0.25) / std::sqrt(2 * M_PI * 0.25)
                                     + std::exp(-0.5 * 0.49 / 4.0) / std::sqrt(2 * M_PI * 4.0)));
  CHECK(mixture_log_density(0.3, m2, v2) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(std::isfinite(mixture_log_density(1e4, m2, v2)));
  CHECK_THROWS_AS(mixture_log_density(0.0, Eigen::VectorXd(0), Eigen::VectorXd(0)), ShapeError);
}

TEST_CASE("ELPD drops under inflated spread, MSE ignores spread")
{
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z;
  std::vector<double> y, mean;
  double tight = 0.0, loose = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double mu = z(rng);
    const double obs = mu + 0.5 * z(rng);
    y.push_back(obs);
    mean.push_back(mu);
    Eigen::VectorXd m(1), v(1), w(1);
    m << mu;
    v << 0.25;
    w << 25.0;
    tight += mixture_log_density(obs, m, v);
    loose += mixture_log_density(obs, m, w);
  }
  CHECK(loose < tight);
  const double mse = mean_squared_error(y, mean);
  CHECK(mse >= 0.0);
  CHECK(mean_squared_error(y, y) == 0.0);
  CHECK_THROWS_AS(mean_squared_error({}, {}), ShapeError);
}

TEST_CASE("PIT values")
{
  Eigen::VectorXd draws(1001);
  for (Eigen::Index k = 0; k < draws.size(); ++k)
    draws[k] = static_cast<double>(k);
  CHECK(pit_value(500.0, draws) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(pit_value(1e6, draws) == 1.0);
  CHECK(pit_value(-1.0, draws) == 0.0);
  CHECK_THROWS_AS(pit_value(0.0, Eigen::VectorXd(0)), ConfigError);
}

TEST_CASE("KS distance and histogram")
{
  std::vector<double> grid;
  for (int k = 0; k < 100; ++k)
    grid.push_back((k + 0.5) / 100.0);
  CHECK(ks_distance_uniform(grid) == doctest::Approx(0.005));
  CHECK(ks_distance_uniform(grid) < ks_critical_value_05(100));
  CHECK(ks_critical_value_05(100) == doctest::Approx(0.1340).epsilon(1e-3));
  std::vector<double> piled(100, 0.9);
  CHECK(ks_distance_uniform(piled) > ks_critical_value_05(100));

  const auto h = pit_histogram({0.0, 0.05, 0.5, 0.99, 1.0}, 10);
  CHECK(h[0] == 2);
  CHECK(h[5] == 1);
  CHECK(h[9] == 2);
}

TEST_CASE("near-noiseless duplicated training point predicts exactly")
{
  ObservationSet obs;
  const InputPoint p{{0.1, 0.2, 0.3, 0.4, 0.5, 3.0}, 0, 3};
  obs.regular = {{p, 1.234}, {{{0.9, 0.2, 0.3, 0.4, 0.5, 1.0}, 1, 1}, -0.5}};
  const auto hp = Hyperparameters::with_default_groups(1.0, {1, 1, 1, 1, 1}, 1e-4);
  const auto pred = condition_gaussian(obs, {Site::value(p)}, hp);
  CHECK(mean_squared_error({1.234}, {pred.mean[0]}) < 1e-6);
}

TEST_CASE("run_cv reports on small problems")
{
  const auto hp = Hyperparameters::with_default_groups(1.0, {2, 2, 2, 2, 2}, 0.2);
  const auto ds = simulate_gp_prior(4, 5, hp, 1);
  VirtualConfig vc;
  vc.monotone_times = {2.0};
  const auto obs = build_virtual_sets(ds, vc);
  auto opts = quick_options();

  const auto cv2 = run_cv(obs, CvScheme::parse("cv2"), ModelVariant::with_derivatives, opts);
  CHECK(cv2.folds.size() == 4);
  CHECK(cv2.point_count() == 16);
  CHECK(std::isfinite(cv2.elpd));
  CHECK(cv2.mse >= 0.0);
  CHECK(cv2.loo_pit.empty());

  opts.fit = FoldFit::recondition;
  const auto cv1 = run_cv(obs, CvScheme::parse("cv1"), ModelVariant::without_derivatives, opts);
  CHECK(cv1.folds.size() == 16);
  CHECK(cv1.loo_pit.size() == 16);
  for (double p : cv1.loo_pit) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }

  std::ostringstream js, csv;
  write_report_json(js, cv1);
  const auto parsed = nlohmann::json::parse(js.str());
  CHECK(parsed.at("scheme").get<std::string>() == "cv1");
  CHECK(parsed.at("loo_pit").size() == 16);
  write_folds_csv(csv, cv1);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "fold,location,t,y,mean,sd,lower95,upper95,log_density,pit");
}
