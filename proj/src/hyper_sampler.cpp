#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <thread>

#include "elliptical_slice.hpp"
#include "monogp/errors.hpp"
#include "monogp/inference.hpp"
#include "monogp/random.hpp"

namespace monogp {

void SamplerConfig::validate() const
{
  if (chains < 2)
    throw ConfigError("at least 2 chains are required for split-Rhat");
  if (draws < 4)
    throw ConfigError("at least 4 post-warmup draws per chain are required");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw ConfigError("target acceptance must lie in (0, 1)");
  if (!(init_spread >= 0.0))
    throw ConfigError("init_spread must be non-negative");
}

Eigen::VectorXd to_log_params(const Hyperparameters& hp)
{
  const auto g = static_cast<Eigen::Index>(hp.lengthscales.size());
  Eigen::VectorXd phi(g + 2);
  phi[0] = std::log(hp.alpha);
  for (Eigen::Index i = 0; i < g; ++i)
    phi[1 + i] = std::log(hp.lengthscales[static_cast<std::size_t>(i)]);
  phi[g + 1] = std::log(hp.sigma);
  return phi;
}

Hyperparameters from_log_params(const Eigen::VectorXd& phi, const std::vector<std::size_t>& groups)
{
  if (phi.size() < 3)
    throw ShapeError("log-parameter vector needs alpha, at least one lengthscale and sigma");
  Hyperparameters hp;
  hp.alpha = std::exp(phi[0]);
  for (Eigen::Index i = 1; i + 1 < phi.size(); ++i)
    hp.lengthscales.push_back(std::exp(phi[i]));
  hp.sigma = std::exp(phi[phi.size() - 1]);
  hp.group_of_dim = groups;
  return hp;
}

std::size_t PosteriorSamples::draw_count() const
{
  std::size_t n = 0;
  for (const auto& c : chains)
    n += c.size();
  return n;
}

std::size_t PosteriorSamples::parameter_count() const
{
  for (const auto& c : chains)
    if (!c.empty())
      return c.front().hp.lengthscales.size() + 2;
  return 0;
}

std::vector<std::string> PosteriorSamples::parameter_names() const
{
  std::vector<std::string> names{"alpha"};
  const std::size_t p = parameter_count();
  for (std::size_t g = 1; g + 1 < p; ++g)
    names.push_back("rho" + std::to_string(g));
  names.emplace_back("sigma");
  return names;
}

std::vector<std::vector<double>> PosteriorSamples::parameter_chains(std::size_t p) const
{
  const std::size_t np = parameter_count();
  if (p >= np)
    throw ShapeError("parameter index out of range");
  std::vector<std::vector<double>> out;
  for (const auto& chain : chains) {
    std::vector<double> trace;
    trace.reserve(chain.size());
    for (const auto& d : chain) {
      if (p == 0)
        trace.push_back(d.hp.alpha);
      else if (p + 1 == np)
        trace.push_back(d.hp.sigma);
      else
        trace.push_back(d.hp.lengthscales[p - 1]);
    }
    out.push_back(std::move(trace));
  }
  return out;
}

std::vector<const PosteriorDraw*> PosteriorSamples::flat() const
{
  std::vector<const PosteriorDraw*> out;
  for (const auto& c : chains)
    for (const auto& d : c)
      out.push_back(&d);
  return out;
}

WarmStart PosteriorSamples::warm_start() const
{
  WarmStart ws;
  for (const auto& c : chains)
    if (!c.empty())
      ws.log_params.push_back(to_log_params(c.back().hp));
  ws.proposal_chol = proposal_chol;
  ws.log_scale = log_scale;
  return ws;
}

double log_marginal_posterior(const ObservationSet& obs, const Hyperparameters& hp,
                              const PriorSpec& ps)
{
  if (obs.has_sign())
    throw DomainError("the marginal hyperparameter density is only available without a sign set");
  const ObservationSystem sys = build_system(obs);
  const ConditionedSystem cs(sys, hp);
  return log_prior(hp, ps) + to_log_params(hp).sum() + cs.log_marginal();
}

namespace {

struct Problem
{
  const ObservationSet& obs;
  const ObservationSystem& sys;
  const PriorSpec& ps;
  const std::vector<std::size_t>& groups;
  std::size_t group_count;
};

struct Evaluated
{
  Hyperparameters hp;
  ConditionedSystem cs;
  /// prior + Jacobian + Gaussian marginal; the sign term is added separately.
  double base;
};

std::optional<Evaluated> evaluate(const Problem& pb, const Eigen::VectorXd& phi)
{
  if (!phi.allFinite() || phi.cwiseAbs().maxCoeff() > 30.0)
    return std::nullopt;
  Hyperparameters hp = from_log_params(phi, pb.groups);
  try {
    ConditionedSystem cs(pb.sys, hp);
    const double base = log_prior(hp, pb.ps) + phi.sum() + cs.log_marginal();
    if (!std::isfinite(base))
      return std::nullopt;
    return Evaluated{std::move(hp), std::move(cs), base};
  } catch (const NumericalError&) {
    return std::nullopt;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

Eigen::VectorXd initial_guess(const Problem& pb)
{
  const auto& sys = pb.sys;
  std::vector<double> ys;
  for (Eigen::Index i = 0; i < sys.targets.size(); ++i)
    if (!sys.anchored[static_cast<std::size_t>(i)])
      ys.push_back(sys.targets[i]);
  double sd = 1.0;
  if (ys.size() > 1) {
    double mean = 0.0;
    for (double y : ys)
      mean += y;
    mean /= static_cast<double>(ys.size());
    double ss = 0.0;
    for (double y : ys)
      ss += (y - mean) * (y - mean);
    // Uncentered spread: the prior mean is zero.
    sd = std::sqrt((ss + static_cast<double>(ys.size()) * mean * mean)
                   / static_cast<double>(ys.size()));
  }
  sd = std::max(sd, 0.1);

  Eigen::VectorXd phi(static_cast<Eigen::Index>(pb.group_count) + 2);
  phi[0] = std::log(sd);
  phi[phi.size() - 1] = std::log(std::max(0.25 * sd, 0.05));

  // Lengthscale guess: spread of the inputs in each group.
  std::vector<double> spread(pb.group_count, 0.0);
  std::vector<int> members(pb.group_count, 0);
  const auto& sites = sys.gaussian_sites;
  for (std::size_t d = 0; d < pb.groups.size(); ++d) {
    if (sites.empty())
      break;
    double mean = 0.0;
    for (const auto& s : sites)
      mean += s.point.values[d];
    mean /= static_cast<double>(sites.size());
    double ss = 0.0;
    for (const auto& s : sites)
      ss += (s.point.values[d] - mean) * (s.point.values[d] - mean);
    spread[pb.groups[d]] += std::sqrt(ss / static_cast<double>(sites.size()));
    members[pb.groups[d]] += 1;
  }
  for (std::size_t g = 0; g < pb.group_count; ++g) {
    const double s = members[g] > 0 ? spread[g] / members[g] : 1.0;
    phi[static_cast<Eigen::Index>(g) + 1] = std::log(std::max(s, 0.1));
  }
  return phi;
}

// Crude search for a high-density start on the Gaussian part of the
// posterior: random lengthscales around the guess, then coordinate steps.
Eigen::VectorXd find_start(const Problem& pb, std::uint64_t seed)
{
  Rng rng = make_rng(seed, 0x57a7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd best = initial_guess(pb);
  auto score = [&pb](const Eigen::VectorXd& phi) {
    const auto ev = evaluate(pb, phi);
    return ev ? ev->base : -std::numeric_limits<double>::infinity();
  };
  double best_score = score(best);
  const Eigen::VectorXd guess = best;
  for (int k = 0; k < 48; ++k) {
    Eigen::VectorXd phi = guess;
    for (std::size_t g = 0; g < pb.group_count; ++g)
      phi[static_cast<Eigen::Index>(g) + 1] = std::log(0.3) + unif(rng) * std::log(100.0);
    const double sc = score(phi);
    if (sc > best_score) {
      best_score = sc;
      best = phi;
    }
  }
  for (double step : {1.0, 0.3, 0.1}) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < best.size(); ++i)
        for (double dir : {-1.0, 1.0}) {
          Eigen::VectorXd phi = best;
          phi[i] += dir * step;
          const double sc = score(phi);
          if (sc > best_score) {
            best_score = sc;
            best = phi;
          }
        }
  }
  return best;
}

struct ChainResult
{
  std::vector<PosteriorDraw> draws;
  double acceptance = 0.0;
  Eigen::MatrixXd proposal_chol;
  double log_scale = 0.0;
};

Eigen::VectorXd value_latent_draw(const Evaluated& ev, const std::vector<Site>& value_sites,
                                  const Eigen::VectorXd& nu, Rng& rng)
{
  const auto m = ev.cs.moments(value_sites, nu, true);
  const CholeskyFactor f = robust_cholesky(m.covariance);
  std::normal_distribution<double> normal;
  Eigen::VectorXd eps(m.mean.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i)
    eps[i] = normal(rng);
  return m.mean + f.lower * eps;
}

ChainResult run_chain(const Problem& pb, const SamplerConfig& cfg, const Eigen::VectorXd& guess,
                      std::size_t chain)
{
  Rng rng = make_rng(cfg.seed, 1000 + chain);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool sign = pb.sys.sign_count() > 0;
  const auto dim = static_cast<Eigen::Index>(pb.group_count) + 2;

  // Initialization: search result perturbed per chain, or a warm start.
  std::optional<Evaluated> cur;
  Eigen::VectorXd phi;
  if (cfg.warm_start && !cfg.warm_start->log_params.empty()) {
    phi = cfg.warm_start->log_params[chain % cfg.warm_start->log_params.size()];
    if (phi.size() == dim)
      cur = evaluate(pb, phi);
  }
  for (int attempt = 0; !cur && attempt < 60; ++attempt) {
    const double spread = cfg.init_spread * (1.0 + attempt / 10);
    phi = guess;
    for (Eigen::Index i = 0; i < dim; ++i)
      phi[i] += spread * (2.0 * unif(rng) - 1.0);
    cur = evaluate(pb, phi);
  }
  if (!cur)
    throw InitializationError(
        "log-joint is not finite at any initial value tried; widen init_spread or check the data");

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(pb.sys.sign_count());
  auto sign_ll = [](const Evaluated& ev, const Eigen::VectorXd& x) {
    return x.size() > 0 ? ev.cs.sign_log_lik(x) : 0.0;
  };
  double cur_sign = sign_ll(*cur, nu);

  Eigen::MatrixXd prop_chol = Eigen::MatrixXd::Identity(dim, dim);
  double log_scale = std::log(0.1);
  const bool warm = cfg.warm_start && cfg.warm_start->proposal_chol.rows() == dim;
  if (warm) {
    prop_chol = cfg.warm_start->proposal_chol;
    log_scale = cfg.warm_start->log_scale;
  }

  // Covariance checkpoints during warmup; the step-size adaptation restarts
  // after each.
  std::vector<std::size_t> checkpoints;
  if (!warm && cfg.warmup >= 50)
    checkpoints = {cfg.warmup * 2 / 5, cfg.warmup * 7 / 10};
  const std::size_t window_start = cfg.warmup / 5;
  std::vector<Eigen::VectorXd> history;
  std::size_t adapt_counter = 0;

  std::vector<Site> value_sites;
  if (cfg.store_value_latents)
    for (const auto& p : layout_latents(pb.obs).value_points)
      value_sites.push_back(Site::value(p));

  ChainResult result;
  result.draws.reserve(cfg.draws);
  std::size_t accepted = 0;
  const std::size_t total = cfg.warmup + cfg.draws;
  Eigen::VectorXd z(dim);

  // Metropolis step to `target`. With a sign set the move either keeps nu
  // fixed or, when `centered`, keeps c = f'_C fixed, in which case the
  // Gaussian density of c given the other rows enters the ratio.
  auto sign_density = [](const Evaluated& ev, const Eigen::VectorXd& x) {
    return -0.5 * x.squaredNorm() - ev.cs.sign_factor().diagonal().array().log().sum();
  };
  auto try_move = [&](const Eigen::VectorXd& target, bool likelihood_only, bool centered,
                      double* accept_prob = nullptr) {
    std::optional<Evaluated> next = evaluate(pb, target);
    if (!next)
      return false;
    auto level = [likelihood_only](const Evaluated& ev) {
      return likelihood_only ? ev.cs.log_marginal() : ev.base;
    };
    Eigen::VectorXd next_nu = nu;
    double log_ratio = 0.0;
    if (centered && sign) {
      next_nu = next->cs.whiten(cur->cs.sign_values(nu));
      log_ratio = (level(*next) + sign_density(*next, next_nu))
                  - (level(*cur) + sign_density(*cur, nu));
    } else {
      log_ratio = (level(*next) + sign_ll(*next, nu)) - (level(*cur) + cur_sign);
    }
    if (accept_prob)
      *accept_prob = std::isfinite(log_ratio) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
    if (!(std::isfinite(log_ratio) && std::log(unif(rng)) < log_ratio))
      return false;
    phi = target;
    nu = std::move(next_nu);
    cur = std::move(next);
    cur_sign = sign_ll(*cur, nu);
    return true;
  };

  for (std::size_t it = 0; it < total; ++it) {
    for (Eigen::Index i = 0; i < dim; ++i)
      z[i] = normal(rng);
    double accept_prob = 0.0;
    const bool accept =
        try_move(phi + std::exp(log_scale) * (prop_chol * z), false, sign, &accept_prob);

    if (cfg.mode_jumps && pb.group_count > 1) {
      // Redraw one lengthscale from its prior; prior and Jacobian cancel.
      const std::size_t g = std::uniform_int_distribution<std::size_t>(0, pb.group_count - 1)(rng);
      std::gamma_distribution<double> gamma(pb.ps.shape(g), 1.0 / pb.ps.rate(g));
      Eigen::VectorXd jump = phi;
      jump[static_cast<Eigen::Index>(g) + 1] = std::log(std::max(gamma(rng), 1e-300));
      try_move(jump, true, sign);

      // Exchange two lengthscales.
      std::size_t a = std::uniform_int_distribution<std::size_t>(0, pb.group_count - 1)(rng);
      std::size_t b = std::uniform_int_distribution<std::size_t>(0, pb.group_count - 2)(rng);
      if (b >= a)
        ++b;
      jump = phi;
      std::swap(jump[static_cast<Eigen::Index>(a) + 1], jump[static_cast<Eigen::Index>(b) + 1]);
      try_move(jump, false, sign);
    }
    if (cfg.mode_jumps) {
      // Redraw sigma from its half-normal prior.
      Eigen::VectorXd jump = phi;
      jump[dim - 1] = std::log(std::max(std::abs(pb.ps.sigma_scale * normal(rng)), 1e-300));
      try_move(jump, true, sign);

      // Wide random-walk step.
      for (Eigen::Index i = 0; i < dim; ++i)
        z[i] = normal(rng);
      try_move(phi + 4.0 * std::exp(log_scale) * (prop_chol * z), false, sign);
    }

    if (sign) {
      auto eval = [&](const Eigen::VectorXd& x) { return cur->cs.sign_log_lik(x); };
      for (std::size_t k = 0; k < cfg.ess_steps; ++k)
        nu = detail::elliptical_slice(nu, cur_sign, eval, rng);
    }

    if (it < cfg.warmup) {
      const bool checkpoint =
          std::find(checkpoints.begin(), checkpoints.end(), it + 1) != checkpoints.end();
      ++adapt_counter;
      log_scale += std::pow(static_cast<double>(adapt_counter), -0.6)
                   * (accept_prob - cfg.target_accept);
      log_scale = std::clamp(log_scale, -12.0, 3.0);
      if (it >= window_start)
        history.push_back(phi);
      if (checkpoint && history.size() > static_cast<std::size_t>(2 * dim)) {
        Eigen::MatrixXd h(static_cast<Eigen::Index>(history.size()), dim);
        for (std::size_t r = 0; r < history.size(); ++r)
          h.row(static_cast<Eigen::Index>(r)) = history[r].transpose();
        const Eigen::RowVectorXd mean = h.colwise().mean();
        const Eigen::MatrixXd centered = h.rowwise() - mean;
        Eigen::MatrixXd cov =
            centered.transpose() * centered / static_cast<double>(history.size() - 1);
        cov.diagonal().array() += 1e-6;
        try {
          prop_chol = robust_cholesky(cov).lower;
          log_scale = std::log(2.38 / std::sqrt(static_cast<double>(dim)));
          adapt_counter = 0;
        } catch (const NumericalError&) {
        }
      }
      continue;
    }

    if (accept)
      ++accepted;
    PosteriorDraw draw;
    draw.hp = cur->hp;
    if (sign)
      draw.latent_f_prime = cur->cs.sign_values(nu);
    if (cfg.store_value_latents)
      draw.latent_f = value_latent_draw(*cur, value_sites, nu, rng);
    result.draws.push_back(std::move(draw));
  }

  result.acceptance = cfg.draws > 0 ? static_cast<double>(accepted) / cfg.draws : 0.0;
  result.proposal_chol = prop_chol;
  result.log_scale = log_scale;
  return result;
}

}  // namespace

PosteriorSamples sample_hyperparameters(const ObservationSet& obs, const PriorSpec& ps,
                                        const std::vector<std::size_t>& groups,
                                        std::size_t group_count, const SamplerConfig& config)
{
  config.validate();
  ps.validate();
  obs.validate();
  if (groups.size() != obs.input_dimension())
    throw ShapeError("lengthscale group map covers " + std::to_string(groups.size())
                     + " dimensions, observations have " + std::to_string(obs.input_dimension()));
  for (std::size_t g : groups)
    if (g >= group_count)
      throw ConfigError("lengthscale group map references a missing group");
  const ObservationSystem sys = build_system(obs);
  check_dense_dimension(sys.gaussian_count() + sys.sign_count());

  const Problem pb{obs, sys, ps, groups, group_count};
  std::vector<ChainResult> results(config.chains);
  const bool warm = config.warm_start && !config.warm_start->log_params.empty();
  const Eigen::VectorXd start = warm ? initial_guess(pb) : find_start(pb, config.seed);

  if (config.parallel && config.chains > 1) {
    std::vector<std::exception_ptr> errors(config.chains);
    std::vector<std::thread> workers;
    for (std::size_t c = 0; c < config.chains; ++c)
      workers.emplace_back([&, c] {
        try {
          results[c] = run_chain(pb, config, start, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    for (auto& w : workers)
      w.join();
    for (const auto& e : errors)
      if (e)
        std::rethrow_exception(e);
  } else {
    for (std::size_t c = 0; c < config.chains; ++c)
      results[c] = run_chain(pb, config, start, c);
  }

  PosteriorSamples samples;
  samples.warmup_count = config.warmup;
  samples.seed = config.seed;
  for (auto& r : results) {
    samples.chains.push_back(std::move(r.draws));
    samples.acceptance_rate.push_back(r.acceptance);
  }
  samples.proposal_chol = results.front().proposal_chol;
  samples.log_scale = results.front().log_scale;
  return samples;
}

}  // namespace monogp
