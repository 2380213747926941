#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sdeis/block_tridiag.hpp"
#include "sdeis/pathspace.hpp"

namespace sdeis {

struct NewtonSettings {
  double grad_tol = 1e-9;
  int max_iters = 100;
  double levenberg_init = 1e-8;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 40;
  /// After grad_tol is met, plain Newton steps continue toward this tighter
  /// gradient norm while they keep reducing it. 0 disables polishing.
  double grad_target = 0.0;
  int max_polish = 3;

  void validate() const {
    if (!(grad_tol > 0.0) || max_iters < 1 || !(levenberg_init > 0.0) || !(armijo_c > 0.0) ||
        !(backtrack_factor > 0.0 && backtrack_factor < 1.0) || max_backtracks < 1 ||
        !(grad_target >= 0.0) || max_polish < 0) {
      throw Error(ErrorCode::InvalidParam, "invalid Newton settings");
    }
  }
};

template <int D>
struct OptimalPathResult {
  Path<D> phi;
  double cost = 0.0;
  BlockTridiag<D> hessian;
  BlockCholesky<D> factor;
  /// First D x D block of H^{-1}, divided by dt.
  Block<D> sigma_first = Block<D>::Zero();
  double grad_norm = 0.0;
  int iterations = 0;
  /// F at the initial point and after every accepted step.
  std::vector<double> cost_history;
};

/// Newton did not reach the gradient tolerance; carries the best iterate.
template <int D>
class MaxItersExceeded : public Error {
 public:
  MaxItersExceeded(Path<D> best, double grad_norm)
      : Error(ErrorCode::MaxItersExceeded,
              "gradient norm " + detail::format_real(grad_norm) + " above tolerance"),
        best_(std::move(best)) {}

  const Path<D>& best() const { return best_; }

 private:
  Path<D> best_;
};

namespace detail {

template <int D>
double inf_norm(std::span<const State<D>> v) {
  double m = 0.0;
  for (const auto& s : v) m = std::max(m, s.cwiseAbs().maxCoeff());
  return m;
}

template <int D>
double dot(std::span<const State<D>> a, std::span<const State<D>> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i].dot(b[i]);
  return acc;
}

inline bool is_evaluation_failure(const Error& e) {
  return e.code() == ErrorCode::NonFiniteCost || e.code() == ErrorCode::NonFiniteModelOutput;
}

}  // namespace detail

/// Leading D x D block of H^{-1} over dt, from D solves against unit vectors.
template <int D>
Block<D> marginal_covariance(const BlockCholesky<D>& chol, double dt) {
  const std::size_t k = chol.blocks();
  Block<D> out;
  std::vector<State<D>> rhs(k);
  for (int i = 0; i < D; ++i) {
    std::fill(rhs.begin(), rhs.end(), State<D>::Zero());
    rhs[0](i) = 1.0;
    chol.solve_in_place(rhs);
    out.col(i) = rhs[0];
  }
  return 0.5 * (out + out.transpose()) / dt;
}

/// Minimizes F over the free states with a Levenberg-regularized Newton
/// iteration and Armijo backtracking.
template <int D>
OptimalPathResult<D> minimize_path(const SdeModel<D>& model, double dt, const State<D>& start,
                                   std::vector<State<D>> init,
                                   const NewtonSettings& settings = {}) {
  const std::size_t k = init.size();
  if (k == 0) throw Error(ErrorCode::InvalidParam, "initial path is empty");
  for (const auto& s : init) {
    if (!s.allFinite()) throw Error(ErrorCode::InvalidParam, "initial path is not finite");
  }

  OptimalPathResult<D> result;
  std::vector<State<D>> x = std::move(init);
  std::vector<State<D>> step(k);
  std::vector<State<D>> trial(k);
  CostDerivatives<D> eval;
  CostDerivatives<D> trial_eval;
  evaluate_cost<D>(model, dt, start, x, CostOrder::Hessian, eval);
  result.cost_history.push_back(eval.cost);

  const double roundoff = 8.0 * std::numeric_limits<double>::epsilon();
  double lambda = settings.levenberg_init;
  int iterations = 0;
  double grad_norm = detail::inf_norm<D>(eval.grad);

  auto trial_cost = [&](double t) {
    for (std::size_t i = 0; i < k; ++i) trial[i] = x[i] + t * step[i];
    try {
      evaluate_cost<D>(model, dt, start, trial, CostOrder::Value, trial_eval);
      return trial_eval.cost;
    } catch (const Error& e) {
      if (!detail::is_evaluation_failure(e)) throw;
      return std::numeric_limits<double>::infinity();
    }
  };

  // Near a saddle the regularized step is dominated by the most negative
  // curvature direction (as in inverse iteration). Walk along it downhill
  // until F drops by more than rounding.
  auto escape_saddle = [&]() {
    const double scale = detail::inf_norm<D>(step);
    if (!(scale > 0.0) || !std::isfinite(scale)) return false;
    const double sign = detail::dot<D>(eval.grad, step) <= 0.0 ? 1.0 : -1.0;
    for (auto& v : step) v *= sign / scale;
    const double floor = roundoff * std::max(1.0, std::abs(eval.cost));
    double t = 1.0;
    for (int b = 0; b < 60; ++b, t *= 0.5) {
      if (trial_cost(t) < eval.cost - floor) return true;
    }
    return false;
  };

  // Shifted inverse iteration from a fixed vector, so ties break the same
  // way every time.
  auto escape_stationary = [&]() {
    double shift = settings.levenberg_init;
    std::optional<BlockCholesky<D>> chol;
    while (!chol && shift < 1e30) {
      BlockTridiag<D> shifted = eval.hessian;
      shifted.add_identity(shift);
      auto f = factorize(shifted);
      if (auto* c = std::get_if<BlockCholesky<D>>(&f)) {
        chol = std::move(*c);
      } else {
        shift *= 2.0;
      }
    }
    if (!chol) return false;
    std::fill(step.begin(), step.end(), State<D>::Ones());
    for (int it = 0; it < 4; ++it) {
      chol->solve_in_place(step);
      const double norm = detail::inf_norm<D>(step);
      if (!(norm > 0.0) || !std::isfinite(norm)) return false;
      for (auto& v : step) v /= norm;
    }
    return escape_saddle();
  };

  for (int escapes = 0;; ++escapes) {
    while (grad_norm > settings.grad_tol) {
      if (iterations >= settings.max_iters) {
        throw MaxItersExceeded<D>(Path<D>{start, x}, grad_norm);
      }
      bool accepted = false;
      while (!accepted) {
        if (lambda > 1e30) {
          throw Error(ErrorCode::NotPositiveDefinite, "Levenberg regularization diverged");
        }
        BlockTridiag<D> shifted = eval.hessian;
        shifted.add_identity(lambda);
        auto factored = factorize(shifted);
        if (std::holds_alternative<NotPositiveDefinite>(factored)) {
          lambda *= 10.0;
          continue;
        }
        const auto& chol = std::get<BlockCholesky<D>>(factored);
        for (std::size_t i = 0; i < k; ++i) step[i] = -eval.grad[i];
        chol.solve_in_place(step);
        const double slope = detail::dot<D>(eval.grad, step);

        const double floor = roundoff * std::max(1.0, std::abs(eval.cost));
        if (-slope <= floor) {
          // The predicted decrease is below the rounding of F, so comparing
          // costs says nothing; take the full step if the gradient shrinks.
          if (std::isfinite(trial_cost(1.0))) {
            evaluate_cost<D>(model, dt, start, trial, CostOrder::Gradient, trial_eval);
            accepted = detail::inf_norm<D>(trial_eval.grad) < grad_norm;
          }
          if (!accepted && std::holds_alternative<NotPositiveDefinite>(factorize(eval.hessian))) {
            accepted = escape_saddle();
          }
          if (!accepted) throw MaxItersExceeded<D>(Path<D>{start, x}, grad_norm);
          break;
        }
        double t = 1.0;
        for (int b = 0; b < settings.max_backtracks; ++b) {
          const double f = trial_cost(t);
          if (f <= eval.cost + settings.armijo_c * t * slope) {
            accepted = true;
            break;
          }
          t *= settings.backtrack_factor;
        }
        if (!accepted) {
          // F unchanged to rounding: same criterion as above.
          const double f = trial_cost(1.0);
          if (std::abs(f - eval.cost) <= floor) {
            evaluate_cost<D>(model, dt, start, trial, CostOrder::Gradient, trial_eval);
            accepted = detail::inf_norm<D>(trial_eval.grad) < grad_norm;
          }
        }
        if (!accepted) lambda *= 10.0;
      }
      std::swap(x, trial);
      evaluate_cost<D>(model, dt, start, x, CostOrder::Hessian, eval);
      result.cost_history.push_back(eval.cost);
      grad_norm = detail::inf_norm<D>(eval.grad);
      lambda = std::max(lambda * 0.1, 1e-300);
      ++iterations;
    }

    for (int p = 0; p < settings.max_polish && grad_norm > settings.grad_target; ++p) {
      auto polish = factorize(eval.hessian);
      if (!std::holds_alternative<BlockCholesky<D>>(polish)) break;
      for (std::size_t i = 0; i < k; ++i) step[i] = -eval.grad[i];
      std::get<BlockCholesky<D>>(polish).solve_in_place(step);
      if (!std::isfinite(trial_cost(1.0))) break;
      evaluate_cost<D>(model, dt, start, trial, CostOrder::Hessian, trial_eval);
      const double norm = detail::inf_norm<D>(trial_eval.grad);
      if (!(norm < grad_norm)) break;
      std::swap(x, trial);
      std::swap(eval, trial_eval);
      result.cost_history.push_back(eval.cost);
      grad_norm = norm;
      ++iterations;
    }

    // A stationary point that is not a minimum (a symmetric start, say): leave
    // it along the most negative curvature direction and start over.
    if (escapes < 3 && std::holds_alternative<NotPositiveDefinite>(factorize(eval.hessian)) &&
        escape_stationary()) {
      std::swap(x, trial);
      evaluate_cost<D>(model, dt, start, x, CostOrder::Hessian, eval);
      result.cost_history.push_back(eval.cost);
      grad_norm = detail::inf_norm<D>(eval.grad);
      ++iterations;
      continue;
    }
    break;
  }

  auto factored = factorize(eval.hessian);
  if (auto* bad = std::get_if<NotPositiveDefinite>(&factored)) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "Hessian at the minimizer is not positive definite (block " +
                    std::to_string(bad->block) + ")");
  }
  result.factor = std::move(std::get<BlockCholesky<D>>(factored));
  result.sigma_first = marginal_covariance(result.factor, dt);
  result.phi = Path<D>{start, std::move(x)};
  result.cost = eval.cost;
  result.hessian = std::move(eval.hessian);
  result.grad_norm = grad_norm;
  result.iterations = iterations;
  return result;
}

/// Initial guess for the path from new_start: drop the head of the previous
/// optimum and shift every remaining state by the head perturbation pushed
/// through the linearized one-step map.
template <int D>
std::vector<State<D>> warm_start(const OptimalPathResult<D>& prev, const State<D>& new_start,
                                 const SdeModel<D>& model, double dt) {
  const auto& states = prev.phi.states;
  if (states.size() < 2) {
    throw Error(ErrorCode::InvalidParam, "warm start needs a previous path of length >= 2");
  }
  std::vector<State<D>> out;
  out.reserve(states.size() - 1);
  State<D> delta = new_start - states[0];
  const bool linearize = static_cast<bool>(model.drift_jacobian);
  for (std::size_t k = 1; k < states.size(); ++k) {
    if (!linearize) {
      out.push_back(states[k]);
      continue;
    }
    delta += dt * (effective_drift_jacobian(model, states[k - 1], dt) * delta);
    out.push_back(states[k] + delta);
  }
  return out;
}

}  // namespace sdeis
