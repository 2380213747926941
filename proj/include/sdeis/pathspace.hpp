#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "sdeis/block_tridiag.hpp"
#include "sdeis/model.hpp"

namespace sdeis {

/// K free states following a fixed start. The start is never a variable.
template <int D>
struct Path {
  State<D> start = State<D>::Zero();
  std::vector<State<D>> states;

  std::size_t size() const { return states.size(); }
  const State<D>& back() const { return states.back(); }
};

/// K standard-normal vectors, consumed in step order.
template <int D>
struct NoiseDraw {
  std::vector<State<D>> xi;

  NoiseDraw negated() const {
    NoiseDraw out{xi};
    for (auto& v : out.xi) v = -v;
    return out;
  }
};

enum class CostOrder { Value, Gradient, Hessian };

/// F and optionally its gradient and Hessian over the free states.
template <int D>
struct CostDerivatives {
  double cost = 0.0;
  std::vector<State<D>> grad;
  BlockTridiag<D> hessian;
};

namespace detail {

[[noreturn]] inline void throw_non_finite_cost(std::size_t index) {
  throw Error(ErrorCode::NonFiniteCost,
              "path cost is not finite at step " + std::to_string(index));
}

}  // namespace detail

/// Evaluates
///   F(x) = 1/(2 sigma^2 dt) sum_n |x_{n+1} - x_n - dt f~(x_n)|^2 + g(x_K)
/// with x_0 = start, up to the requested derivative order, in one sweep.
template <int D>
void evaluate_cost(const SdeModel<D>& model, double dt, const State<D>& start,
                   std::span<const State<D>> x, CostOrder order, CostDerivatives<D>& out) {
  const std::size_t k = x.size();
  if (k == 0) throw Error(ErrorCode::InvalidParam, "path must contain at least one state");
  const double c = 1.0 / (model.sigma * model.sigma * dt);
  const bool want_grad = order != CostOrder::Value;
  const bool want_hess = order == CostOrder::Hessian;
  if (want_grad) out.grad.assign(k, State<D>::Zero());
  if (want_hess) out.hessian.resize(k);

  double cost = 0.0;
  State<D> drift;
  Block<D> jac;
  for (std::size_t n = 0; n < k; ++n) {
    const State<D>& from = n == 0 ? start : x[n - 1];
    const bool from_is_free = n > 0;
    if (want_grad && from_is_free) {
      effective_drift_with_jacobian(model, from, dt, drift, jac);
    } else {
      drift = effective_drift(model, from, dt);
    }
    const State<D> u = x[n] - from - dt * drift;
    cost += 0.5 * c * u.squaredNorm();
    if (want_grad) {
      out.grad[n] += c * u;
      if (from_is_free) {
        const Block<D> b = Block<D>::Identity() + dt * jac;
        out.grad[n - 1] -= c * (b.transpose() * u);
        if (want_hess) {
          out.hessian.diag[n - 1] +=
              c * (b.transpose() * b - dt * effective_drift_curvature(model, from, dt, u));
          out.hessian.sub[n - 1] = -c * b;
        }
      }
    }
    if (want_hess) out.hessian.diag[n].diagonal().array() += c;
  }
  const State<D>& last = x[k - 1];
  cost += model.loglik(last);
  if (!std::isfinite(cost)) detail::throw_non_finite_cost(k);
  out.cost = cost;
  if (want_grad) {
    out.grad[k - 1] += model.loglik_grad(last);
    for (std::size_t n = 0; n < k; ++n) {
      if (!out.grad[n].allFinite()) detail::throw_non_finite_cost(n);
    }
  }
  if (want_hess) {
    out.hessian.diag[k - 1] += model.loglik_hess(last);
    for (auto& b : out.hessian.diag) {
      b = 0.5 * (b + b.transpose());
      if (!b.allFinite()) detail::throw_non_finite_cost(k);
    }
  }
}

template <int D>
double path_cost(const SdeModel<D>& model, double dt, const Path<D>& path) {
  CostDerivatives<D> out;
  evaluate_cost<D>(model, dt, path.start, path.states, CostOrder::Value, out);
  return out.cost;
}

template <int D>
std::vector<State<D>> path_cost_grad(const SdeModel<D>& model, double dt, const Path<D>& path) {
  CostDerivatives<D> out;
  evaluate_cost<D>(model, dt, path.start, path.states, CostOrder::Gradient, out);
  return std::move(out.grad);
}

template <int D>
BlockTridiag<D> path_cost_hessian(const SdeModel<D>& model, double dt, const Path<D>& path) {
  CostDerivatives<D> out;
  evaluate_cost<D>(model, dt, path.start, path.states, CostOrder::Hessian, out);
  return std::move(out.hessian);
}

/// log rho(x_{1:K} | start) for the discretized SDE with noise variance
/// dt eps sigma^2 per step, normalization included.
template <int D>
double log_prior_density(const SdeModel<D>& model, double dt, double epsilon,
                         const State<D>& start, std::span<const State<D>> x) {
  const double var = dt * epsilon * model.sigma * model.sigma;
  const double log_norm = -0.5 * D * std::log(2.0 * std::numbers::pi * var);
  double acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const State<D>& from = n == 0 ? start : x[n - 1];
    const State<D> u = x[n] - from - dt * effective_drift(model, from, dt);
    acc += log_norm - 0.5 * u.squaredNorm() / var;
  }
  if (!std::isfinite(acc)) detail::throw_non_finite_cost(x.size());
  return acc;
}

template <int D>
double log_prior_density(const SdeModel<D>& model, const PathGrid<D>& grid,
                         const Path<D>& path) {
  return log_prior_density<D>(model, grid.dt, grid.epsilon, path.start, path.states);
}

}  // namespace sdeis
