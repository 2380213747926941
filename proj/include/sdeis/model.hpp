#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sdeis/error.hpp"

namespace sdeis {

template <int D>
using State = Eigen::Matrix<double, D, 1>;

template <int D>
using Block = Eigen::Matrix<double, D, D>;

/// Second derivatives of a vector field: entry i is the Hessian of component i.
template <int D>
using Tensor3 = std::array<Block<D>, D>;

enum class Stepper { Euler, RK4Drift };

/// g(x) = precision/2 * |x - center|^2, recorded for models whose
/// likelihood is known to be quadratic (precision 0 means g == 0).
struct QuadraticLoglik {
  double center = 0.0;
  double precision = 0.0;
};

/// Additive-noise SDE dX = f(X) dt + sqrt(eps) sigma dB observed once at the
/// final step through the log-likelihood g.
template <int D>
struct SdeModel {
  static_assert(D >= 1);
  static constexpr int dim = D;

  std::string name;
  double sigma = 1.0;
  std::function<State<D>(const State<D>&)> drift;
  std::function<Block<D>(const State<D>&)> drift_jacobian;
  /// Optional; when empty, second derivatives come from finite differences of
  /// the Jacobian.
  std::function<Tensor3<D>(const State<D>&)> drift_hessian;
  std::function<double(const State<D>&)> loglik;
  std::function<State<D>(const State<D>&)> loglik_grad;
  std::function<Block<D>(const State<D>&)> loglik_hess;
  Stepper stepper = Stepper::Euler;

  /// Set when f(x) = rate * x (closed forms for overlays and consistency runs).
  std::optional<double> linear_drift_rate;
  std::optional<QuadraticLoglik> quadratic_loglik;
};

template <int D>
struct PathGrid {
  int n_steps = 100;
  double dt = 0.01;
  State<D> x0 = State<D>::Zero();
  double epsilon = 0.01;

  double horizon() const { return n_steps * dt; }
};

template <int D>
void validate(const SdeModel<D>& model) {
  if (!(model.sigma > 0.0) || !std::isfinite(model.sigma)) {
    throw Error(ErrorCode::InvalidParam, "sigma must be positive and finite");
  }
  if (!model.drift || !model.drift_jacobian || !model.loglik || !model.loglik_grad ||
      !model.loglik_hess) {
    throw Error(ErrorCode::InvalidParam, "model '" + model.name + "' is missing a function");
  }
}

template <int D>
void validate(const PathGrid<D>& grid) {
  if (grid.n_steps < 1) throw Error(ErrorCode::InvalidParam, "n_steps must be >= 1");
  if (!(grid.dt > 0.0) || !std::isfinite(grid.dt)) {
    throw Error(ErrorCode::InvalidParam, "dt must be positive");
  }
  if (!(grid.epsilon > 0.0) || !std::isfinite(grid.epsilon)) {
    throw Error(ErrorCode::InvalidParam, "epsilon must be positive");
  }
  if (!grid.x0.allFinite()) throw Error(ErrorCode::InvalidParam, "x0 must be finite");
}

namespace detail {

template <class Derived>
std::string format_state(const Eigen::MatrixBase<Derived>& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
  os << ')';
  return os.str();
}

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

template <int D>
void check_finite_drift(const State<D>& value, const State<D>& at) {
  if (!value.allFinite()) {
    throw Error(ErrorCode::NonFiniteModelOutput, "drift is not finite at " + format_state(at));
  }
}

inline double fd_step_third(double xi) {
  static const double root = std::cbrt(std::numeric_limits<double>::epsilon());
  return root * std::max(1.0, std::abs(xi));
}

}  // namespace detail

/// f~(x, dt): f itself for Euler, (RK4 step of x' = f) - x over dt for RK4Drift,
/// so that x + dt * f~ is the deterministic part of one step.
template <int D>
State<D> effective_drift(const SdeModel<D>& model, const State<D>& x, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidParam, "dt must be positive");
  const State<D> k1 = model.drift(x);
  detail::check_finite_drift<D>(k1, x);
  if (model.stepper == Stepper::Euler) return k1;

  const State<D> k2 = model.drift(x + 0.5 * dt * k1);
  const State<D> k3 = model.drift(x + 0.5 * dt * k2);
  const State<D> k4 = model.drift(x + dt * k3);
  State<D> out = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  detail::check_finite_drift<D>(out, x);
  return out;
}

/// Value and Jacobian of f~ in one pass. The RK4 Jacobian follows the stages
/// by the chain rule, so it is exact up to rounding.
template <int D>
void effective_drift_with_jacobian(const SdeModel<D>& model, const State<D>& x, double dt,
                                   State<D>& value, Block<D>& jac) {
  const State<D> k1 = model.drift(x);
  detail::check_finite_drift<D>(k1, x);
  const Block<D> a1 = model.drift_jacobian(x);
  if (model.stepper == Stepper::Euler) {
    value = k1;
    jac = a1;
    return;
  }
  const Block<D> eye = Block<D>::Identity();
  const State<D> x2 = x + 0.5 * dt * k1;
  const State<D> k2 = model.drift(x2);
  const Block<D> a2 = model.drift_jacobian(x2) * (eye + 0.5 * dt * a1);
  const State<D> x3 = x + 0.5 * dt * k2;
  const State<D> k3 = model.drift(x3);
  const Block<D> a3 = model.drift_jacobian(x3) * (eye + 0.5 * dt * a2);
  const State<D> x4 = x + dt * k3;
  const State<D> k4 = model.drift(x4);
  const Block<D> a4 = model.drift_jacobian(x4) * (eye + dt * a3);
  value = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  jac = (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0;
  detail::check_finite_drift<D>(value, x);
}

template <int D>
Block<D> effective_drift_jacobian(const SdeModel<D>& model, const State<D>& x, double dt) {
  State<D> value;
  Block<D> jac;
  effective_drift_with_jacobian(model, x, dt, value, jac);
  return jac;
}

/// sum_i w_i * Hessian(f~_i)(x). Analytic for Euler models that ship
/// drift_hessian; otherwise central differences of w^T (d f~/dx).
template <int D>
Block<D> effective_drift_curvature(const SdeModel<D>& model, const State<D>& x, double dt,
                                   const State<D>& w) {
  Block<D> out = Block<D>::Zero();
  if (model.stepper == Stepper::Euler && model.drift_hessian) {
    const Tensor3<D> hess = model.drift_hessian(x);
    for (int i = 0; i < D; ++i) out += w(i) * hess[i];
    return out;
  }
  for (int j = 0; j < D; ++j) {
    const double h = detail::fd_step_third(x(j));
    State<D> xp = x;
    State<D> xm = x;
    xp(j) += h;
    xm(j) -= h;
    const State<D> gp = effective_drift_jacobian(model, xp, dt).transpose() * w;
    const State<D> gm = effective_drift_jacobian(model, xm, dt).transpose() * w;
    out.col(j) = (gp - gm) / (xp(j) - xm(j));
  }
  return 0.5 * (out + out.transpose());
}

/// Deterministic trajectory x_{n+1} = x_n + dt f~(x_n) for n_steps steps,
/// excluding the start.
template <int D>
std::vector<State<D>> deterministic_trajectory(const SdeModel<D>& model, const State<D>& start,
                                               double dt, int n_steps) {
  std::vector<State<D>> out;
  out.reserve(static_cast<std::size_t>(n_steps));
  State<D> x = start;
  for (int n = 0; n < n_steps; ++n) {
    x = x + dt * effective_drift(model, x, dt);
    out.push_back(x);
  }
  return out;
}

}  // namespace sdeis
