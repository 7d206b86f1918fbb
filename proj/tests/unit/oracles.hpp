#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's kernel or conditioning code.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "monogp/kernel.hpp"

namespace oracle {

inline double se(const std::vector<double>& a, const std::vector<double>& b,
                 const monogp::Hyperparameters& hp)
{
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double r = hp.lengthscales[hp.group_of_dim[d]];
    s += (a[d] - b[d]) * (a[d] - b[d]) / (r * r);
  }
  return hp.alpha * hp.alpha * std::exp(-0.5 * s);
}

/// d/da_g of se(a, b) by central differences.
inline double fd_first(std::vector<double> a, const std::vector<double>& b, std::size_t g,
                       const monogp::Hyperparameters& hp, double h = 1e-4)
{
  const double a0 = a[g];
  a[g] = a0 + h;
  const double up = se(a, b, hp);
  a[g] = a0 - h;
  const double dn = se(a, b, hp);
  return (up - dn) / (2.0 * h);
}

/// d^2/(da_g db_h) of se(a, b) by nested central differences.
inline double fd_mixed(const std::vector<double>& a, std::vector<double> b, std::size_t g,
                       std::size_t h_dim, const monogp::Hyperparameters& hp, double h = 1e-4)
{
  const double b0 = b[h_dim];
  b[h_dim] = b0 + h;
  const double up = fd_first(a, b, g, hp, h);
  b[h_dim] = b0 - h;
  const double dn = fd_first(a, b, g, hp, h);
  return (up - dn) / (2.0 * h);
}

/// Covariance between two sites via the closed forms, written out directly.
inline double site(const monogp::Site& x, const monogp::Site& y, const monogp::Hyperparameters& hp)
{
  const auto& a = x.point.values;
  const auto& b = y.point.values;
  const double k = se(a, b, hp);
  auto inv = [&](std::size_t d) {
    const double r = hp.lengthscales[hp.group_of_dim[d]];
    return 1.0 / (r * r);
  };
  if (!x.wrt && !y.wrt)
    return k;
  if (x.wrt && !y.wrt)
    return -k * inv(*x.wrt) * (a[*x.wrt] - b[*x.wrt]);
  if (!x.wrt && y.wrt)
    return k * inv(*y.wrt) * (a[*y.wrt] - b[*y.wrt]);
  const std::size_t g = *x.wrt, h = *y.wrt;
  return k * inv(g) * ((g == h ? 1.0 : 0.0) - inv(h) * (a[h] - b[h]) * (a[g] - b[g]));
}

inline Eigen::MatrixXd matrix(const std::vector<monogp::Site>& r, const std::vector<monogp::Site>& c,
                              const monogp::Hyperparameters& hp)
{
  Eigen::MatrixXd m(r.size(), c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j)
      m(i, j) = site(r[i], c[j], hp);
  return m;
}

struct Gaussian
{
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Dense conditional: K*(K + S)^-1 y and K** - K*(K + S)^-1 K*^T, solved by
/// full-pivot LU.
inline Gaussian condition(const std::vector<monogp::Site>& train, const Eigen::VectorXd& noise,
                          const Eigen::VectorXd& y, const std::vector<monogp::Site>& test,
                          const monogp::Hyperparameters& hp)
{
  Eigen::MatrixXd k = matrix(train, train, hp);
  k.diagonal() += noise;
  const Eigen::MatrixXd ks = matrix(test, train, hp);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  Gaussian g;
  g.mean = ks * lu.solve(y);
  g.cov = matrix(test, test, hp) - ks * lu.solve(Eigen::MatrixXd(ks.transpose()));
  return g;
}

inline monogp::InputPoint point(std::vector<double> v, std::size_t i = 0, std::size_t t = 0)
{
  return {std::move(v), i, t};
}

inline std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo,
                                          double hi)
{
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v)
    x = u(rng);
  return v;
}

}  // namespace oracle
