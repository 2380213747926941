#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sdeis/optimize.hpp"
#include "sdeis/pathspace.hpp"
#include "sdeis/rng.hpp"

namespace sdeis {

enum class SamplerKind { Direct, LM, SLM, DLM, SDLM };

inline std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Direct: return "Direct";
    case SamplerKind::LM: return "LM";
    case SamplerKind::SLM: return "SLM";
    case SamplerKind::DLM: return "DLM";
    case SamplerKind::SDLM: return "SDLM";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(const std::string& text) {
  std::string t;
  for (char ch : text) t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  if (t == "DIRECT") return SamplerKind::Direct;
  if (t == "LM") return SamplerKind::LM;
  if (t == "SLM") return SamplerKind::SLM;
  if (t == "DLM") return SamplerKind::DLM;
  if (t == "SDLM") return SamplerKind::SDLM;
  throw Error(ErrorCode::InvalidConfig, "unknown sampler '" + text + "'");
}

inline bool is_symmetrized(SamplerKind kind) {
  return kind == SamplerKind::SLM || kind == SamplerKind::SDLM;
}

enum class Branch { Plus, Minus, NA };

template <int D>
struct WeightedPath {
  Path<D> path;
  double log_weight = 0.0;
  NoiseDraw<D> noise;
  Branch branch = Branch::NA;
};

/// How each dynamic step seeds its optimization. Both runs Newton from the
/// warm start and from the deterministic trajectory and keeps the lower F.
enum class DlmInit { WarmStart, Deterministic, Both };

struct SamplerSettings {
  NewtonSettings newton;
  DlmInit dlm_init = DlmInit::Both;
};

/// Unless a polish target is set, aim for a gradient norm scaled by
/// sqrt(eps): optimizer error in phi enters the weights divided by the
/// noise scale.
inline NewtonSettings sampling_newton(NewtonSettings base, double epsilon) {
  if (base.grad_target == 0.0) {
    base.grad_target = base.grad_tol * std::min(1.0, std::sqrt(epsilon));
  }
  return base;
}

template <int D>
NoiseDraw<D> draw_noise(CounterRng& rng, int n_steps) {
  NoiseDraw<D> out;
  out.xi.resize(static_cast<std::size_t>(n_steps));
  for (auto& v : out.xi) {
    for (int i = 0; i < D; ++i) v(i) = rng.normal();
  }
  return out;
}

namespace detail {

template <int D>
double half_squared_norm(std::span<const State<D>> xi) {
  double acc = 0.0;
  for (const auto& v : xi) acc += 0.5 * v.squaredNorm();
  return acc;
}

/// log p up to a constant: log rho(X | x0) - g(X_N) / eps.
template <int D>
double log_target(const SdeModel<D>& model, const PathGrid<D>& grid,
                  std::span<const State<D>> states) {
  return log_prior_density<D>(model, grid.dt, grid.epsilon, grid.x0, states) -
         model.loglik(states.back()) / grid.epsilon;
}

inline double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace detail

/// Forward simulation of the discretized SDE; the weight is the likelihood.
template <int D>
WeightedPath<D> direct_map(const SdeModel<D>& model, const PathGrid<D>& grid,
                           const NoiseDraw<D>& noise) {
  WeightedPath<D> out;
  out.path.start = grid.x0;
  out.path.states.reserve(noise.xi.size());
  const double scale = std::sqrt(grid.dt * grid.epsilon) * model.sigma;
  State<D> x = grid.x0;
  for (const auto& xi : noise.xi) {
    x = x + grid.dt * effective_drift(model, x, grid.dt) + scale * xi;
    out.path.states.push_back(x);
  }
  out.log_weight = -model.loglik(x) / grid.epsilon;
  out.noise = noise;
  return out;
}

template <int D>
WeightedPath<D> sample_direct(const SdeModel<D>& model, const PathGrid<D>& grid,
                              CounterRng& rng) {
  return direct_map(model, grid, draw_noise<D>(rng, grid.n_steps));
}

/// Optimal path over x_{1:N} from the grid's start, initialized at the
/// deterministic trajectory.
template <int D>
OptimalPathResult<D> full_path_optimum(const SdeModel<D>& model, const PathGrid<D>& grid,
                                       const NewtonSettings& settings = {}) {
  return minimize_path(model, grid.dt, grid.x0,
                       deterministic_trajectory(model, grid.x0, grid.dt, grid.n_steps), settings);
}

/// Gaussian proposal N(phi, eps H^{-1}) around the full-path optimum.
template <int D>
class LinearMap {
 public:
  LinearMap(const SdeModel<D>& model, const PathGrid<D>& grid, OptimalPathResult<D> opt)
      : model_(&model), grid_(grid), opt_(std::move(opt)) {
    if (opt_.phi.states.size() != static_cast<std::size_t>(grid_.n_steps)) {
      throw Error(ErrorCode::InvalidParam, "optimum length does not match the grid");
    }
    const double kd = static_cast<double>(grid_.n_steps) * D;
    log_q_const_ = -0.5 * kd * std::log(2.0 * std::numbers::pi * grid_.epsilon) +
                   0.5 * opt_.factor.log_det();
  }

  const OptimalPathResult<D>& optimum() const { return opt_; }

  WeightedPath<D> operator()(const NoiseDraw<D>& noise) const {
    WeightedPath<D> out;
    out.noise = noise;
    std::vector<State<D>> v = noise.xi;
    opt_.factor.backward_in_place(v);
    const double scale = std::sqrt(grid_.epsilon);
    out.path.start = grid_.x0;
    out.path.states.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      out.path.states[k] = opt_.phi.states[k] + scale * v[k];
    }
    const double log_q = log_q_const_ - detail::half_squared_norm<D>(noise.xi);
    out.log_weight = detail::log_target<D>(*model_, grid_, out.path.states) - log_q;
    return out;
  }

 private:
  const SdeModel<D>* model_;
  PathGrid<D> grid_;
  OptimalPathResult<D> opt_;
  double log_q_const_ = 0.0;
};

template <int D>
WeightedPath<D> sample_lm(const SdeModel<D>& model, const PathGrid<D>& grid,
                          const OptimalPathResult<D>& opt, CounterRng& rng) {
  const LinearMap<D> map(model, grid, opt);
  return map(draw_noise<D>(rng, grid.n_steps));
}

/// Re-optimizes the remaining path after every step and draws the next state
/// from N(phi_{n+1}, dt eps Sigma_{n+1}). Deterministic in the noise draw.
template <int D>
class DynamicLinearMap {
 public:
  DynamicLinearMap(const SdeModel<D>& model, const PathGrid<D>& grid,
                   SamplerSettings settings = {})
      : model_(&model), grid_(grid), settings_(settings) {
    settings_.newton = sampling_newton(settings_.newton, grid_.epsilon);
  }

  WeightedPath<D> operator()(const NoiseDraw<D>& noise) const {
    const int n_steps = grid_.n_steps;
    if (noise.xi.size() != static_cast<std::size_t>(n_steps)) {
      throw Error(ErrorCode::InvalidParam, "noise length does not match the grid");
    }
    WeightedPath<D> out;
    out.noise = noise;
    out.path.start = grid_.x0;
    out.path.states.reserve(noise.xi.size());

    const double step_var = grid_.dt * grid_.epsilon;
    const double log_norm = -0.5 * D * std::log(2.0 * std::numbers::pi * step_var);
    const double scale = std::sqrt(step_var);
    double log_q = 0.0;
    State<D> current = grid_.x0;
    std::optional<OptimalPathResult<D>> prev;
    for (int n = 0; n < n_steps; ++n) {
      OptimalPathResult<D> opt = optimize_step(current, n_steps - n, prev);
      Eigen::LLT<Block<D>> llt(opt.sigma_first);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SampleFailed,
                    "marginal covariance not positive definite at step " + std::to_string(n));
      }
      const Block<D> chol = llt.matrixL();
      const State<D>& xi = noise.xi[static_cast<std::size_t>(n)];
      current = opt.phi.states[0] + scale * (chol * xi);
      log_q += log_norm - chol.diagonal().array().log().sum() - 0.5 * xi.squaredNorm();
      out.path.states.push_back(current);
      prev = std::move(opt);
    }
    out.log_weight = detail::log_target<D>(*model_, grid_, out.path.states) - log_q;
    return out;
  }

  /// One dynamic step: optimum over `remaining` states starting at `from`.
  OptimalPathResult<D> optimize_step(const State<D>& from, int remaining,
                                     const std::optional<OptimalPathResult<D>>& prev) const {
    std::optional<OptimalPathResult<D>> best;
    std::string last_error;
    auto attempt = [&](std::vector<State<D>> init) {
      try {
        OptimalPathResult<D> r =
            minimize_path(*model_, grid_.dt, from, std::move(init), settings_.newton);
        if (!best || r.cost < best->cost) best = std::move(r);
      } catch (const Error& e) {
        last_error = e.what();
      }
    };
    const bool have_prev = prev.has_value() && prev->phi.states.size() >= 2;
    if (have_prev && settings_.dlm_init != DlmInit::Deterministic) {
      attempt(warm_start(*prev, from, *model_, grid_.dt));
    }
    if (!have_prev || settings_.dlm_init != DlmInit::WarmStart) {
      attempt(deterministic_trajectory(*model_, from, grid_.dt, remaining));
    }
    if (!best) {
      throw Error(ErrorCode::SampleFailed,
                  "step optimization failed with " + std::to_string(remaining) +
                      " states remaining: " + last_error);
    }
    return std::move(*best);
  }

 private:
  const SdeModel<D>* model_;
  PathGrid<D> grid_;
  SamplerSettings settings_;
};

template <int D>
WeightedPath<D> sample_dlm(const SdeModel<D>& model, const PathGrid<D>& grid,
                           const SamplerSettings& settings, CounterRng& rng) {
  const DynamicLinearMap<D> map(model, grid, settings);
  return map(draw_noise<D>(rng, grid.n_steps));
}

/// Antithetic pairing through a replayable map: evaluates the map at xi and
/// -xi, keeps the plus branch with probability W+/(W+ + W-) (decided by the
/// uniform `u`), and assigns the weight (W+ + W-)/2.
template <int D, class Replay>
WeightedPath<D> symmetrize(const Replay& replay, const NoiseDraw<D>& noise, double u) {
  WeightedPath<D> plus = replay(noise);
  WeightedPath<D> minus = replay(noise.negated());
  const double log_sum = detail::log_add_exp(plus.log_weight, minus.log_weight);
  const double p_plus = std::exp(plus.log_weight - log_sum);
  WeightedPath<D> out = u < p_plus ? std::move(plus) : std::move(minus);
  out.branch = u < p_plus ? Branch::Plus : Branch::Minus;
  out.log_weight = log_sum - std::numbers::ln2;
  return out;
}

template <int D>
struct Ensemble {
  SamplerKind kind = SamplerKind::Direct;
  std::vector<WeightedPath<D>> samples;
  std::size_t failed = 0;
  std::size_t requested = 0;
  std::string first_failure;

  std::vector<double> log_weights() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.log_weight);
    return out;
  }
};

struct EnsembleOptions {
  SamplerSettings sampler;
  /// 0 means one worker per hardware thread.
  unsigned threads = 0;
  /// Largest tolerated fraction of failed samples.
  double max_failure_fraction = 0.01;
};

/// M weighted paths; sample i draws from CounterRng(seed, i) only, so the
/// output does not depend on scheduling.
template <int D>
Ensemble<D> run_ensemble(SamplerKind kind, const SdeModel<D>& model, const PathGrid<D>& grid,
                         std::size_t m_samples, std::uint64_t seed,
                         const EnsembleOptions& options = {}) {
  if (m_samples < 1) throw Error(ErrorCode::InvalidParam, "m_samples must be >= 1");
  validate(model);
  validate(grid);

  std::optional<LinearMap<D>> linear;
  if (kind == SamplerKind::LM || kind == SamplerKind::SLM) {
    try {
      linear.emplace(model, grid, full_path_optimum(
          model, grid, sampling_newton(options.sampler.newton, grid.epsilon)));
    } catch (const Error& e) {
      throw Error(ErrorCode::RunFailed, std::string("full-path optimization failed: ") + e.what());
    }
  }
  const DynamicLinearMap<D> dynamic(model, grid, options.sampler);

  auto one = [&](std::size_t index) -> WeightedPath<D> {
    CounterRng rng(seed, index);
    const NoiseDraw<D> noise = draw_noise<D>(rng, grid.n_steps);
    switch (kind) {
      case SamplerKind::Direct: return direct_map(model, grid, noise);
      case SamplerKind::LM: return (*linear)(noise);
      case SamplerKind::DLM: return dynamic(noise);
      case SamplerKind::SLM: return symmetrize<D>(*linear, noise, rng.uniform());
      case SamplerKind::SDLM: return symmetrize<D>(dynamic, noise, rng.uniform());
    }
    throw Error(ErrorCode::InvalidParam, "unknown sampler kind");
  };

  std::vector<std::optional<WeightedPath<D>>> slots(m_samples);
  std::vector<std::string> errors(m_samples);
  unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(m_samples));
  std::vector<std::exception_ptr> fatal(workers);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < m_samples; i += workers) {
        try {
          slots[i] = one(i);
        } catch (const Error& e) {
          errors[i] = e.what();
        }
      }
    } catch (...) {
      fatal[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (auto& f : fatal) {
    if (f) std::rethrow_exception(f);
  }

  Ensemble<D> out;
  out.kind = kind;
  out.requested = m_samples;
  out.samples.reserve(m_samples);
  for (std::size_t i = 0; i < m_samples; ++i) {
    if (slots[i]) {
      out.samples.push_back(std::move(*slots[i]));
    } else {
      if (out.failed == 0) out.first_failure = errors[i];
      ++out.failed;
    }
  }
  if (static_cast<double>(out.failed) > options.max_failure_fraction * static_cast<double>(m_samples)) {
    throw Error(ErrorCode::RunFailed, std::to_string(out.failed) + " of " +
                                          std::to_string(m_samples) + " samples failed (" +
                                          to_string(kind) + "): " + out.first_failure);
  }
  return out;
}

}  // namespace sdeis
