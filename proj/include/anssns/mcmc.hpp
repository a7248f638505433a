#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anssns/errors.hpp"
#include "anssns/likelihood.hpp"
#include "anssns/model.hpp"
#include "anssns/rng.hpp"
#include "anssns/simulate.hpp"

namespace anssns {

/// How sigma intercepts are exposed to the sampler: `Natural` proposes and
/// places priors on sigma = exp(coef); `Log` works on the coefficient itself.
enum class SigmaScale { Natural, Log };

/// Which scalar of (alpha, omega) a chain coordinate refers to.
struct ParamTarget {
  enum class Kind { Alpha, SigmaX, SigmaY, Theta };
  Kind kind = Kind::Alpha;
  std::size_t index = 0;

  friend bool operator==(const ParamTarget&, const ParamTarget&) = default;
};

struct ParameterInfo {
  std::string name;
  ParamTarget target;
  bool exp_scale = false;  // coordinate = exp(coefficient)
};

/// Chain coordinates in update order: alpha, sigma_x block, sigma_y block, theta block.
/// Intercepts on the natural scale are named `sigma_x` / `sigma_y`, on the
/// log scale `sigma_x_0` / `sigma_y_0`; slopes are `sigma_x_<i>` etc.
inline std::vector<ParameterInfo> chain_parameters(const OmegaParams& omega, SigmaScale scale) {
  std::vector<ParameterInfo> out;
  out.push_back({"alpha", {ParamTarget::Kind::Alpha, 0}, false});
  const auto sigma_block = [&](const std::string& base, ParamTarget::Kind kind, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool natural = i == 0 && scale == SigmaScale::Natural;
      out.push_back({natural ? base : base + "_" + std::to_string(i), {kind, i}, natural});
    }
  };
  sigma_block("sigma_x", ParamTarget::Kind::SigmaX, omega.sigma_x_coefs.size());
  sigma_block("sigma_y", ParamTarget::Kind::SigmaY, omega.sigma_y_coefs.size());
  for (std::size_t i = 0; i < omega.theta_coefs.size(); ++i)
    out.push_back({"theta_" + std::to_string(i), {ParamTarget::Kind::Theta, i}, false});
  return out;
}

inline double& coefficient(OmegaParams& omega, const ParamTarget& t) {
  switch (t.kind) {
    case ParamTarget::Kind::SigmaX:
      return omega.sigma_x_coefs.at(t.index);
    case ParamTarget::Kind::SigmaY:
      return omega.sigma_y_coefs.at(t.index);
    case ParamTarget::Kind::Theta:
      return omega.theta_coefs.at(t.index);
    case ParamTarget::Kind::Alpha:
      break;
  }
  throw std::invalid_argument("alpha is not an omega coefficient");
}

inline double coefficient(const OmegaParams& omega, const ParamTarget& t) {
  return coefficient(const_cast<OmegaParams&>(omega), t);
}

using PriorSet = std::map<std::string, Prior>;

struct McmcConfig {
  std::size_t n_steps = 20000;
  std::size_t burn_in = 10000;
  std::size_t thin = 100;
  std::map<std::string, double> proposal_sd;
  double move_sd = 0.025;
  double p_birth = 1.0 / 3.0;
  double p_death = 1.0 / 3.0;
  double p_move = 1.0 / 3.0;
  std::uint64_t seed = 1;
  std::size_t center_updates = 1;
  SigmaScale sigma_scale = SigmaScale::Natural;
  bool use_likelihood = true;
  std::optional<double> init_center_scale;  // default 1 / alpha_init
  std::optional<double> init_bandwidth;     // default 1/8 of the shorter side of W
#ifdef NDEBUG
  std::size_t audit_every = 0;
#else
  std::size_t audit_every = 1000;
#endif

  void validate(const std::vector<ParameterInfo>& params, const PriorSet& priors) const {
    if (thin < 1) throw ConfigError("thin must be >= 1");
    if (burn_in >= n_steps) throw ConfigError("burn_in must be smaller than n_steps");
    if (!(move_sd > 0.0)) throw ConfigError("move SD must be positive");
    if (p_birth < 0.0 || p_death < 0.0 || p_move < 0.0 ||
        std::abs(p_birth + p_death + p_move - 1.0) > 1e-12)
      throw ConfigError("birth/death/move probabilities must be nonnegative and sum to 1");
    if ((p_birth > 0.0) != (p_death > 0.0))
      throw ConfigError("birth and death must both be enabled or both disabled");
    for (const auto& p : params) {
      const auto sd = proposal_sd.find(p.name);
      if (sd == proposal_sd.end()) throw ConfigError("missing proposal SD for '" + p.name + "'");
      if (!(sd->second > 0.0) || !std::isfinite(sd->second))
        throw ConfigError("proposal SD for '" + p.name + "' must be positive");
      if (!priors.count(p.name)) throw ConfigError("missing prior for '" + p.name + "'");
    }
    for (const auto& [name, sd] : proposal_sd)
      if (std::none_of(params.begin(), params.end(), [&](const auto& p) { return p.name == name; }))
        throw ConfigError("proposal SD given for unknown parameter '" + name + "'");
    for (const auto& [name, prior] : priors)
      if (std::none_of(params.begin(), params.end(), [&](const auto& p) { return p.name == name; }))
        throw ConfigError("prior given for unknown parameter '" + name + "'");
  }

  std::size_t expected_draws() const { return (n_steps - burn_in) / thin; }
};

struct AcceptanceCount {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

/// Thinned post-burn-in draws of every chain coordinate.
struct PosteriorSamples {
  std::vector<ParameterInfo> parameters;
  std::vector<std::vector<double>> values;  // values[draw][parameter]
  std::vector<std::size_t> iteration;
  std::vector<std::size_t> n_centers;
  std::vector<double> log_kernel;
  std::map<std::string, AcceptanceCount> acceptance;
  OmegaParams base_omega;
  std::shared_ptr<const CovariateSet> covariates = std::make_shared<const CovariateSet>();
  Window window;
  McmcConfig config;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < parameters.size(); ++i)
      if (parameters[i].name == name) return i;
    return std::nullopt;
  }

  std::vector<double> column(const std::string& name) const {
    const auto idx = index_of(name);
    if (!idx) throw UsageError("samples have no parameter '" + name + "'");
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& row : values) out.push_back(row[*idx]);
    return out;
  }

  double alpha_at(std::size_t draw) const { return values.at(draw).at(0); }

  OmegaParams omega_at(std::size_t draw) const {
    OmegaParams omega = base_omega;
    for (std::size_t i = 0; i < parameters.size(); ++i) {
      const auto& p = parameters[i];
      if (p.target.kind == ParamTarget::Kind::Alpha) continue;
      const double v = values.at(draw)[i];
      coefficient(omega, p.target) = p.exp_scale ? std::log(v) : v;
    }
    return omega;
  }

  AnisotropyField field_at(std::size_t draw) const { return {omega_at(draw), covariates}; }
};

/// Centers of an inhomogeneous Poisson process on W_ext with intensity
/// `scale` times a Gaussian kernel estimate of the pattern's intensity.
/// Equivalent construction: Poisson(scale * n) kernel draws around randomly
/// chosen data points, restricted to W_ext.
inline std::vector<Point2> init_centers(const PointPattern& pattern, const Window& w_ext,
                                        RngStream& rng, double scale, double bandwidth) {
  if (pattern.empty()) throw ConfigError("cannot initialise cluster centres from an empty pattern");
  if (!(bandwidth > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  if (scale < 0.0) throw ConfigError("initial centre scale must be nonnegative");
  std::vector<Point2> centers;
  const int n = poisson_count(rng, scale * static_cast<double>(pattern.size()));
  for (int k = 0; k < n; ++k) {
    auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(pattern.size()));
    idx = std::min(idx, pattern.size() - 1);
    const Point2& x = pattern.points[idx];
    const Point2 c{x.x + bandwidth * standard_normal(rng), x.y + bandwidth * standard_normal(rng)};
    if (w_ext.contains(c)) centers.push_back(c);
  }
  return centers;
}

inline double default_bandwidth(const Window& w) { return 0.125 * std::min(w.width(), w.height()); }

/// Latent state (C, alpha, omega) with cached log-density terms. kappa is
/// derived from alpha and never stored.
struct ChainState {
  CenterConfig config;
  KernelCache cache;
  double alpha = 1.0;
  AnisotropyField field;
  double log_prior = 0.0;

  double kappa(const ModelSpec& spec) const { return kappa_from_alpha(spec, alpha); }
};

/// Log posterior kernel log p(X|.) + log p(C|kappa) + log p(alpha) + log p(omega).
inline double log_posterior_kernel(const ChainState& s, const PointPattern& pattern,
                                   const ModelSpec& spec, bool use_likelihood = true) {
  if (s.log_prior == kNegInf) return kNegInf;
  const double lpx = use_likelihood ? s.cache.log_p_X(pattern, spec.window.area(), s.alpha) : 0.0;
  return lpx + log_p_centers(s.config.size(), s.kappa(spec), spec.window_ext) + s.log_prior;
}

/// log of the posterior ratio new/old; -inf if the new state has zero density.
inline double log_posterior_ratio(const ChainState& old_state, const ChainState& new_state,
                                  const PointPattern& pattern, const ModelSpec& spec,
                                  bool use_likelihood = true) {
  const double lo = log_posterior_kernel(old_state, pattern, spec, use_likelihood);
  const double ln = log_posterior_kernel(new_state, pattern, spec, use_likelihood);
  if (ln == kNegInf) return kNegInf;
  if (lo == kNegInf) return std::numeric_limits<double>::infinity();
  return ln - lo;
}

/// Birth-death-move and Metropolis-Hastings sampler for one chain.
class Sampler {
 public:
  Sampler(const PointPattern& pattern, ModelSpec spec, PriorSet priors, McmcConfig cfg)
      : pattern_(pattern),
        spec_(std::move(spec)),
        priors_(std::move(priors)),
        cfg_(std::move(cfg)),
        rng_(cfg_.seed, 0) {
    spec_.n_observed = pattern_.size();
    spec_.validate();
    if (!(spec_.window == pattern_.window)) throw ConfigError("pattern window differs from model window");
    params_ = chain_parameters(spec_.field.omega(), cfg_.sigma_scale);
    cfg_.validate(params_, priors_);
    for (const auto& p : params_) {
      plan_prior_.push_back(priors_.at(p.name));
      plan_sd_.push_back(cfg_.proposal_sd.at(p.name));
    }

    RngStream init_rng(cfg_.seed, 1);
    const double scale = cfg_.init_center_scale.value_or(1.0 / spec_.alpha);
    const double bw = cfg_.init_bandwidth.value_or(default_bandwidth(spec_.window));
    const auto centers = init_centers(pattern_, spec_.window_ext, init_rng, scale, bw);

    state_.alpha = spec_.alpha;
    state_.field = spec_.field;
    state_.config = cfg_.use_likelihood
                        ? CenterConfig::build(centers, state_.field, spec_.window, spec_.window_ext)
                        : positions_only(centers);
    if (cfg_.use_likelihood) state_.cache.reset(pattern_, state_.config);
    state_.log_prior = total_log_prior(state_.alpha, state_.field.omega());
    if (state_.log_prior == kNegInf)
      throw ConfigError("initial parameter values lie outside the prior support");

    acceptance_["birth"];
    acceptance_["death"];
    acceptance_["move"];
    for (const auto& p : params_) acceptance_[p.name];
  }

  const ChainState& state() const { return state_; }
  const ModelSpec& spec() const { return spec_; }
  const std::vector<ParameterInfo>& parameters() const { return params_; }
  const std::map<std::string, AcceptanceCount>& acceptance() const { return acceptance_; }
  RngStream& rng() { return rng_; }

  double kappa() const { return state_.kappa(spec_); }
  double log_kernel() const { return log_posterior_kernel(state_, pattern_, spec_, cfg_.use_likelihood); }

  /// Current chain coordinate of parameter `p`.
  double coordinate(std::size_t p) const {
    const auto& info = params_[p];
    if (info.target.kind == ParamTarget::Kind::Alpha) return state_.alpha;
    const double c = coefficient(state_.field.omega(), info.target);
    return info.exp_scale ? std::exp(c) : c;
  }

  /// One birth, death or move proposal for the center configuration.
  bool bdm_step() {
    const double u = rng_.uniform();
    if (u < cfg_.p_birth) return birth();
    if (u < cfg_.p_birth + cfg_.p_death) return death();
    return move();
  }

  /// Random-walk Metropolis-Hastings update of chain coordinate `p`.
  bool mh_scalar_step(std::size_t p) {
    const auto& info = params_[p];
    auto& count = acceptance_[info.name];
    ++count.proposed;
    const double current = coordinate(p);
    const double proposal = current + plan_sd_[p] * standard_normal(rng_);
    if (info.exp_scale && !(proposal > 0.0)) return false;
    const double new_prior_term = log_prior_density(plan_prior_[p], proposal);
    if (new_prior_term == kNegInf) return false;
    const double old_prior_term = log_prior_density(plan_prior_[p], current);
    const double new_log_prior = state_.log_prior - old_prior_term + new_prior_term;

    if (info.target.kind == ParamTarget::Kind::Alpha) {
      if (!accept(new_log_prior - state_.log_prior + alpha_log_likelihood_ratio(proposal))) return false;
      state_.alpha = proposal;
      state_.log_prior = new_log_prior;
      ++count.accepted;
      return true;
    }

    OmegaParams omega = state_.field.omega();
    coefficient(omega, info.target) = info.exp_scale ? std::log(proposal) : proposal;
    AnisotropyField new_field = state_.field.with_omega(std::move(omega));
    double delta = new_log_prior - state_.log_prior;
    if (cfg_.use_likelihood) {
      spare_config_ = state_.config;
      spare_config_.rebuild(new_field);
      spare_cache_.reset(pattern_, spare_config_);
      const double area = spec_.window.area();
      const double lp_new = spare_cache_.log_p_X(pattern_, area, state_.alpha);
      const double lp_old = state_.cache.log_p_X(pattern_, area, state_.alpha);
      if (lp_new == kNegInf) return false;
      if (lp_old != kNegInf) delta += lp_new - lp_old;
      else delta = std::numeric_limits<double>::infinity();
    }
    if (!accept(delta)) return false;
    state_.field = std::move(new_field);
    state_.log_prior = new_log_prior;
    if (cfg_.use_likelihood) {
      std::swap(state_.config, spare_config_);
      std::swap(state_.cache, spare_cache_);
    }
    ++count.accepted;
    return true;
  }

  /// Change in log p(X|C,alpha,omega) + log p(C|kappa(alpha)) when alpha is
  /// replaced by `proposal`; the prior term is not included.
  double alpha_log_likelihood_ratio(double proposal) const {
    const double kappa_old = kappa();
    const double kappa_new = kappa_from_alpha(spec_, proposal);
    double delta = log_p_centers(state_.config.size(), kappa_new, spec_.window_ext) -
                   log_p_centers(state_.config.size(), kappa_old, spec_.window_ext);
    if (cfg_.use_likelihood) {
      const double area = spec_.window.area();
      const double lp_new = state_.cache.log_p_X(pattern_, area, proposal);
      const double lp_old = state_.cache.log_p_X(pattern_, area, state_.alpha);
      if (lp_new == kNegInf) return kNegInf;
      if (lp_old == kNegInf) return std::numeric_limits<double>::infinity();
      delta += lp_new - lp_old;
    }
    return delta;
  }

  /// center_updates BDM steps followed by one MH step per scalar parameter.
  void iterate() {
    for (std::size_t k = 0; k < cfg_.center_updates; ++k) bdm_step();
    for (std::size_t p = 0; p < params_.size(); ++p) mh_scalar_step(p);
    ++iterations_;
    if (cfg_.audit_every && cfg_.use_likelihood && iterations_ % cfg_.audit_every == 0) audit();
  }

  /// Full recomputation of the cached terms; throws NumericalError on drift.
  void audit() const {
    CenterConfig fresh = CenterConfig::build(state_.config.centers(), state_.field, spec_.window,
                                             spec_.window_ext);
    const auto terms = log_p_pattern(pattern_, fresh, state_.alpha, kappa());
    const double cached = state_.cache.log_p_X(pattern_, spec_.window.area(), state_.alpha);
    const double scale = std::max(1.0, std::abs(terms.log_p_X_given_C));
    if (!(std::abs(cached - terms.log_p_X_given_C) <= 1e-9 * scale) &&
        !(cached == kNegInf && terms.log_p_X_given_C == kNegInf))
      throw NumericalError("cached likelihood drifted from full recomputation");
    const double prior = total_log_prior(state_.alpha, state_.field.omega());
    if (std::abs(prior - state_.log_prior) > 1e-9 * std::max(1.0, std::abs(prior)))
      throw NumericalError("cached prior drifted from full recomputation");
  }

  std::size_t iterations() const { return iterations_; }

  double total_log_prior(double alpha, const OmegaParams& omega) const {
    double s = 0.0;
    for (std::size_t p = 0; p < params_.size(); ++p) {
      const auto& info = params_[p];
      double v = alpha;
      if (info.target.kind != ParamTarget::Kind::Alpha) {
        v = coefficient(omega, info.target);
        if (info.exp_scale) v = std::exp(v);
      }
      s += log_prior_density(plan_prior_[p], v);
    }
    return s;
  }

 private:
  CenterConfig positions_only(const std::vector<Point2>& centers) const {
    CenterConfig config(spec_.window, spec_.window_ext);
    for (const auto& c : centers) {
      CenterKernel k;
      k.center = c;
      config.push_back(k);
    }
    return config;
  }

  CenterKernel kernel_at(const Point2& c) const {
    if (!cfg_.use_likelihood) {
      CenterKernel k;
      k.center = c;
      return k;
    }
    return state_.config.make_kernel(c, state_.field);
  }

  bool accept(double log_ratio) {
    if (log_ratio >= 0.0) return true;
    if (log_ratio == kNegInf || std::isnan(log_ratio)) return false;
    return std::log(rng_.uniform_open()) < log_ratio;
  }

  double likelihood_delta(const KernelCache::Update& u) const {
    if (!cfg_.use_likelihood) return 0.0;
    const double area = spec_.window.area();
    const double lp_new = assemble_log_p_X(area, state_.alpha, u.total_mass, pattern_.size(), u.sum_log);
    const double lp_old = state_.cache.log_p_X(pattern_, area, state_.alpha);
    if (lp_new == kNegInf) return kNegInf;
    if (lp_old == kNegInf) return std::numeric_limits<double>::infinity();
    return lp_new - lp_old;
  }

  void commit(KernelCache::Update& u) {
    if (cfg_.use_likelihood) {
      state_.cache.commit(u, state_.config);
      return;
    }
    switch (u.kind) {
      case KernelCache::Update::Kind::Birth:
        state_.config.push_back(u.kernel);
        break;
      case KernelCache::Update::Kind::Death:
        state_.config.erase(u.index);
        break;
      case KernelCache::Update::Kind::Move:
        state_.config.replace(u.index, u.kernel);
        break;
    }
  }

  bool birth() {
    auto& count = acceptance_["birth"];
    ++count.proposed;
    const Point2 c = uniform_point(rng_, spec_.window_ext);
    update_.kind = KernelCache::Update::Kind::Birth;
    update_.kernel = kernel_at(c);
    if (cfg_.use_likelihood)
      state_.cache.prepare_birth(pattern_, state_.config, update_.kernel, update_);
    const double n_c = static_cast<double>(state_.config.size());
    const double delta = likelihood_delta(update_) + std::log(kappa()) +
                         std::log(cfg_.p_death * spec_.window_ext.area() / (cfg_.p_birth * (n_c + 1.0)));
    if (!accept(delta)) return false;
    commit(update_);
    ++count.accepted;
    return true;
  }

  bool death() {
    auto& count = acceptance_["death"];
    ++count.proposed;
    const std::size_t n = state_.config.size();
    if (n == 0) return false;
    const std::size_t idx = pick_index(n);
    update_.kind = KernelCache::Update::Kind::Death;
    update_.index = idx;
    if (cfg_.use_likelihood) state_.cache.prepare_death(pattern_, state_.config, idx, update_);
    const double delta = likelihood_delta(update_) - std::log(kappa()) +
                         std::log(cfg_.p_birth * static_cast<double>(n) /
                                  (cfg_.p_death * spec_.window_ext.area()));
    if (!accept(delta)) return false;
    commit(update_);
    ++count.accepted;
    return true;
  }

  bool move() {
    auto& count = acceptance_["move"];
    ++count.proposed;
    const std::size_t n = state_.config.size();
    if (n == 0) return false;
    const std::size_t idx = pick_index(n);
    const Point2 old = state_.config[idx].center;
    const Point2 c{old.x + cfg_.move_sd * standard_normal(rng_),
                   old.y + cfg_.move_sd * standard_normal(rng_)};
    if (!spec_.window_ext.contains(c)) return false;
    update_.kind = KernelCache::Update::Kind::Move;
    update_.index = idx;
    update_.kernel = kernel_at(c);
    if (cfg_.use_likelihood)
      state_.cache.prepare_move(pattern_, state_.config, idx, update_.kernel, update_);
    if (!accept(likelihood_delta(update_))) return false;
    commit(update_);
    ++count.accepted;
    return true;
  }

  std::size_t pick_index(std::size_t n) {
    const auto idx = static_cast<std::size_t>(rng_.uniform() * static_cast<double>(n));
    return std::min(idx, n - 1);
  }

  const PointPattern& pattern_;
  ModelSpec spec_;
  PriorSet priors_;
  McmcConfig cfg_;
  RngStream rng_;
  std::vector<ParameterInfo> params_;
  std::vector<Prior> plan_prior_;
  std::vector<double> plan_sd_;
  ChainState state_;
  CenterConfig spare_config_;
  KernelCache spare_cache_;
  KernelCache::Update update_;
  std::map<std::string, AcceptanceCount> acceptance_;
  std::size_t iterations_ = 0;
};

/// Runs one chain. `spec.alpha` and `spec.field` give the initial values.
inline PosteriorSamples run_chain(const PointPattern& pattern, const ModelSpec& spec,
                                  const PriorSet& priors, const McmcConfig& cfg) {
  Sampler sampler(pattern, spec, priors, cfg);
  PosteriorSamples out;
  out.parameters = sampler.parameters();
  out.base_omega = spec.field.omega();
  out.covariates = spec.field.covariates_ptr();
  out.window = spec.window;
  out.config = cfg;
  out.values.reserve(cfg.expected_draws());
  for (std::size_t t = 1; t <= cfg.n_steps; ++t) {
    sampler.iterate();
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) {
      std::vector<double> row(out.parameters.size());
      for (std::size_t p = 0; p < row.size(); ++p) row[p] = sampler.coordinate(p);
      out.values.push_back(std::move(row));
      out.iteration.push_back(t);
      out.n_centers.push_back(sampler.state().config.size());
      out.log_kernel.push_back(sampler.log_kernel());
    }
  }
  out.acceptance = sampler.acceptance();
  return out;
}

/// Intercept ratio sigma_x / sigma_y of one draw (at covariate value 0).
inline double intercept_sigma_ratio(const PosteriorSamples& s, std::size_t draw) {
  const OmegaParams omega = s.omega_at(draw);
  return std::exp(omega.sigma_x_coefs[0] - omega.sigma_y_coefs[0]);
}

/// Draw indices t where theta_0 jumps by more than pi/4 (axially) from draw
/// t - 1 while sigma_x / sigma_y crosses 1 between the same two draws.
inline std::vector<std::size_t> detect_label_switch(const PosteriorSamples& samples) {
  if (samples.empty()) throw UsageError("detect_label_switch: no draws");
  const auto theta = samples.column("theta_0");
  std::vector<std::size_t> flagged;
  for (std::size_t t = 1; t < samples.size(); ++t) {
    const double d = axial_angle(theta[t] - theta[t - 1]);
    const double dist = std::min(d, std::numbers::pi - d);
    const double r0 = intercept_sigma_ratio(samples, t - 1);
    const double r1 = intercept_sigma_ratio(samples, t);
    const bool crosses = (r0 - 1.0) * (r1 - 1.0) < 0.0;
    if (dist > std::numbers::pi / 4.0 && crosses) flagged.push_back(t);
  }
  return flagged;
}

}  // namespace anssns
