#include <random>
#include <set>

#include "elliptical_slice.hpp"
#include "monogp/errors.hpp"
#include "monogp/inference.hpp"
#include "monogp/random.hpp"

namespace monogp {

LatentDraws sample_latents_constrained(const ObservationSet& obs, const Hyperparameters& hp,
                                       std::size_t n_draws, std::uint64_t seed,
                                       const LatentSamplerOptions& options)
{
  if (!obs.has_sign())
    throw DomainError("sample_latents_constrained needs a sign set; use condition_gaussian");
  if (options.thin == 0)
    throw DomainError("thin must be positive");

  const ObservationSystem sys = build_system(obs);
  const ConditionedSystem cs(sys, hp);

  LatentDraws out;
  out.layout = layout_latents(obs);
  const auto& layout = out.layout;

  // Every latent other than the sign sites is Gaussian given (y_G, c):
  // mean = V^T [w; nu], covariance fixed.
  std::set<std::size_t> sign_derivs(layout.sign_index.begin(), layout.sign_index.end());
  std::vector<Site> rest;
  std::vector<std::pair<bool, std::size_t>> rest_slot;  // (is_derivative, index)
  for (std::size_t i = 0; i < layout.value_points.size(); ++i) {
    rest.push_back(Site::value(layout.value_points[i]));
    rest_slot.emplace_back(false, i);
  }
  for (std::size_t i = 0; i < layout.derivative_points.size(); ++i) {
    if (sign_derivs.count(i))
      continue;
    rest.push_back(Site::derivative(layout.derivative_points[i]));
    rest_slot.emplace_back(true, i);
  }

  const Eigen::Index n_sign = cs.sign_count();
  const auto base = cs.moments(rest, Eigen::VectorXd::Zero(n_sign), true);
  // Linear response of the conditional mean to nu, one column per sign site.
  Eigen::MatrixXd response(static_cast<Eigen::Index>(rest.size()), n_sign);
  for (Eigen::Index j = 0; j < n_sign; ++j)
    response.col(j) = cs.moments(rest, Eigen::VectorXd::Unit(n_sign, j)).mean - base.mean;
  const CholeskyFactor rest_factor = robust_cholesky(base.covariance);

  Rng rng = make_rng(seed, 0x1a7e);
  std::normal_distribution<double> normal;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(n_sign);
  auto eval = [&cs](const Eigen::VectorXd& x) { return cs.sign_log_lik(x); };
  double ll = eval(nu);

  const auto n_rows = static_cast<Eigen::Index>(n_draws);
  out.f.resize(n_rows, static_cast<Eigen::Index>(layout.value_points.size()));
  out.f_prime.resize(n_rows, static_cast<Eigen::Index>(layout.derivative_points.size()));

  for (std::size_t it = 0; it < options.warmup; ++it)
    nu = detail::elliptical_slice(nu, ll, eval, rng);

  Eigen::VectorXd eps(static_cast<Eigen::Index>(rest.size()));
  for (Eigen::Index d = 0; d < n_rows; ++d) {
    for (std::size_t k = 0; k < options.thin; ++k)
      nu = detail::elliptical_slice(nu, ll, eval, rng);

    const Eigen::VectorXd c = cs.sign_values(nu);
    for (std::size_t i = 0; i < obs.sign.size(); ++i)
      out.f_prime(d, static_cast<Eigen::Index>(layout.sign_index[i])) =
          c[static_cast<Eigen::Index>(i)];

    for (Eigen::Index i = 0; i < eps.size(); ++i)
      eps[i] = normal(rng);
    const Eigen::VectorXd draw = base.mean + response * nu + rest_factor.lower * eps;
    for (std::size_t i = 0; i < rest_slot.size(); ++i) {
      const auto [is_deriv, idx] = rest_slot[i];
      if (is_deriv)
        out.f_prime(d, static_cast<Eigen::Index>(idx)) = draw[static_cast<Eigen::Index>(i)];
      else
        out.f(d, static_cast<Eigen::Index>(idx)) = draw[static_cast<Eigen::Index>(i)];
    }
  }
  return out;
}

}  // namespace monogp
