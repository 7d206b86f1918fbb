#include <doctest.h>

#include <cmath>
#include <random>

#include "monogp/errors.hpp"
#include "monogp/kernel.hpp"
#include "oracles.hpp"

using namespace monogp;

namespace {

Hyperparameters one_dim(double alpha, double rho)
{
  return Hyperparameters::isotropic_groups(1, alpha, {rho}, 0.1);
}

Hyperparameters random_hp(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(0.5, 2.0);
  return Hyperparameters::with_default_groups(u(rng), {u(rng), u(rng), u(rng), u(rng), u(rng)},
                                              0.1);
}

}  // namespace

TEST_CASE("se_ard_cov closed-form values")
{
  const auto hp2 = Hyperparameters::with_default_groups(2.0, {1, 2, 3, 4, 5}, 0.1);
  const InputPoint x{{0.3, -1, 2, 0.1, 0.2, 4}, 0, 0};
  CHECK(se_ard_cov(x, x, hp2) == doctest::Approx(4.0).epsilon(1e-15));

  const auto hp = one_dim(1.0, 1.0);
  CHECK(se_ard_cov({{0.0}}, {{1.0}}, hp) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(se_ard_cov({{0.0}}, {{1.0}}, hp) == doctest::Approx(0.606531).epsilon(1e-6));

  const double far = se_ard_cov({{0.0}}, {{100.0}}, hp);
  CHECK(std::isfinite(far));
  CHECK(far >= 0.0);
  CHECK(far < 1e-300);
}

TEST_CASE("se_ard_cov is symmetric and scales with alpha squared")
{
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    auto hp = random_hp(rng);
    const InputPoint a{oracle::uniform_vector(rng, 6, -1, 1)};
    const InputPoint b{oracle::uniform_vector(rng, 6, -1, 1)};
    CHECK(se_ard_cov(a, b, hp) == se_ard_cov(b, a, hp));
    const double base = se_ard_cov(a, b, hp);
    hp.alpha *= 3.0;
    CHECK(se_ard_cov(a, b, hp) == doctest::Approx(9.0 * base).epsilon(1e-13));
  }
}

TEST_CASE("input validation")
{
  const auto hp = Hyperparameters::with_default_groups(1.0, {1, 1, 1, 1, 1}, 0.1);
  CHECK_THROWS_AS(se_ard_cov({{1.0, 2.0}}, {{1.0, 2.0}}, hp), ShapeError);
  auto bad = hp;
  bad.alpha = 0.0;
  const InputPoint x{{0, 0, 0, 0, 0, 0}};
  CHECK_THROWS_AS(se_ard_cov(x, x, bad), DomainError);
  bad = hp;
  bad.lengthscales[2] = -1.0;
  CHECK_THROWS_AS(se_ard_cov(x, x, bad), DomainError);
  CHECK_THROWS_AS(cov_deriv_value({x, 6}, x, hp), ShapeError);
}

TEST_CASE("cov_deriv_value closed-form values")
{
  const auto hp = one_dim(1.0, 1.0);
  CHECK(cov_deriv_value({{{0.7}}, 0}, {{0.7}}, hp) == 0.0);
  CHECK(cov_deriv_value({{{1.0}}, 0}, {{0.0}}, hp)
        == doctest::Approx(-std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("cov_deriv_deriv closed-form values")
{
  const auto hp = Hyperparameters::isotropic_groups(2, 1.0, {2.0, 1.0}, 0.1);
  const InputPoint x{{0.4, -0.2}};
  CHECK(cov_deriv_deriv({x, 0}, {x, 0}, hp) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(cov_deriv_deriv({x, 0}, {x, 1}, hp) == 0.0);
}

TEST_CASE("derivative kernels match finite differences of the base kernel")
{
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(0, 5);
  double worst1 = 0.0, worst2 = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto hp = random_hp(rng);
    const auto a = oracle::uniform_vector(rng, 6, -1, 1);
    const auto b = oracle::uniform_vector(rng, 6, -1, 1);
    const std::size_t g = dim(rng), h = dim(rng);

    const double d1 = cov_deriv_value({{a}, g}, {b}, hp);
    const double f1 = oracle::fd_first(a, b, g, hp);
    worst1 = std::max(worst1, std::abs(d1 - f1) / std::abs(f1));

    const double d2 = cov_deriv_deriv({{a}, g}, {{b}, h}, hp);
    const double f2 = oracle::fd_mixed(a, b, g, h, hp);
    worst2 = std::max(worst2, std::abs(d2 - f2) / std::abs(f2));
  }
  CHECK(worst1 < 1e-5);
  CHECK(worst2 < 1e-4);
}

TEST_CASE("derivative on the second argument flips sign")
{
  std::mt19937_64 rng(5);
  const auto hp = random_hp(rng);
  const auto a = oracle::uniform_vector(rng, 6, -1, 1);
  const auto b = oracle::uniform_vector(rng, 6, -1, 1);
  const Site da = Site::derivative({{a}, 5});
  const Site vb = Site::value({b});
  const Site db = Site::derivative({{b}, 5});
  const Site va = Site::value({a});
  CHECK(site_cov(da, vb, hp) == doctest::Approx(-site_cov(va, db, hp)).epsilon(1e-14));
  CHECK(site_cov(vb, da, hp) == doctest::Approx(site_cov(da, vb, hp)).epsilon(1e-14));
}

TEST_CASE("kronecker_cov small cases")
{
  const auto hp = Hyperparameters::isotropic_groups(2, 1.7, {1.0, 1.0}, 0.1);
  const auto k11 = kronecker_cov({{0.3}}, {2.0}, hp);
  REQUIRE(k11.rows() == 1);
  CHECK(k11(0, 0) == doctest::Approx(1.7 * 1.7).epsilon(1e-15));

  const auto k = kronecker_cov({{0.5}, {0.5}}, {0.0, 1.0}, hp);
  CHECK((k.block(0, 0, 2, 2) - k.block(2, 2, 2, 2)).cwiseAbs().maxCoeff() == 0.0);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  CHECK(lu.rank() < 4);

  CHECK_THROWS_AS(kronecker_cov({}, {0.0}, hp), DomainError);
  CHECK_THROWS_AS(kronecker_cov({{0.0}}, {}, hp), DomainError);
}

TEST_CASE("kronecker_cov equals the combined ARD form")
{
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> size(1, 10);
  for (int rep = 0; rep < 20; ++rep) {
    const auto hp = random_hp(rng);
    const std::size_t n = size(rng), t = size(rng);
    std::vector<std::vector<double>> xs;
    for (std::size_t i = 0; i < n; ++i)
      xs.push_back(oracle::uniform_vector(rng, 5, -2, 2));
    const auto ts = oracle::uniform_vector(rng, t, 0, 10);
    const auto k = kronecker_cov(xs, ts, hp);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < t; ++a)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t b = 0; b < t; ++b) {
            auto p = xs[i];
            p.push_back(ts[a]);
            auto q = xs[j];
            q.push_back(ts[b]);
            err = std::max(err, std::abs(k(i * t + a, j * t + b) - oracle::se(p, q, hp)));
          }
    CHECK(err < 1e-12);
  }
}

TEST_CASE("assemble_joint blocks")
{
  const auto hp = Hyperparameters::isotropic_groups(1, 1.0, {1.0}, 0.1);
  const double jitter = 1e-8;
  const auto j1 = assemble_joint({{{0.2}}}, {}, hp, jitter);
  CHECK(j1.ff(0, 0) == doctest::Approx(1.0 + jitter).epsilon(1e-15));
  const auto j2 = assemble_joint({}, {{{{0.2}}, 0}}, hp, jitter);
  CHECK(j2.fpfp(0, 0) == doctest::Approx(1.0 + jitter).epsilon(1e-15));
  CHECK_THROWS_AS(assemble_joint({}, {}, hp), DomainError);
}

TEST_CASE("assemble_joint matches elementwise kernel calls and is symmetric")
{
  std::mt19937_64 rng(23);
  const auto hp = random_hp(rng);
  std::vector<InputPoint> pts{{oracle::uniform_vector(rng, 6, -1, 1)},
                              {oracle::uniform_vector(rng, 6, -1, 1)}};
  std::vector<DerivativeSpec> ds{{{oracle::uniform_vector(rng, 6, -1, 1)}, 5}};
  const auto j = assemble_joint(pts, ds, hp, 0.0);
  const Eigen::MatrixXd full = j.full();
  REQUIRE(full.rows() == 3);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      CHECK(full(a, b) == se_ard_cov(pts[a], pts[b], hp));
  for (int a = 0; a < 2; ++a) {
    CHECK(full(2, a) == cov_deriv_value(ds[0], pts[a], hp));
    CHECK(full(a, 2) == full(2, a));
  }
  CHECK(full(2, 2) == cov_deriv_deriv(ds[0], ds[0], hp));
  CHECK(full == full.transpose());
}

TEST_CASE("joint covariance is positive semi-definite")
{
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<std::size_t> size(1, 25);
  for (int rep = 0; rep < 20; ++rep) {
    const auto hp = random_hp(rng);
    std::vector<InputPoint> pts;
    std::vector<DerivativeSpec> ds;
    const std::size_t nf = size(rng), nd = size(rng);
    for (std::size_t i = 0; i < nf; ++i)
      pts.push_back({oracle::uniform_vector(rng, 6, -2, 2)});
    for (std::size_t i = 0; i < nd; ++i)
      ds.push_back({{oracle::uniform_vector(rng, 6, -2, 2)}, 5});
    const auto j = assemble_joint(pts, ds, hp, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j.full());
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("robust_cholesky escalates jitter and reports the last rung")
{
  Eigen::MatrixXd rank1 = Eigen::MatrixXd::Ones(3, 3);
  const auto f = robust_cholesky(rank1);
  CHECK(f.jitter >= 1e-8);
  CHECK(f.jitter <= 1e-4);

  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(2, 2);
  try {
    robust_cholesky(neg);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.jitter() == doctest::Approx(1e-4));
  }
}
