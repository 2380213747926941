#pragma once

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sdeis/model.hpp"

namespace sdeis {

using ParamMap = std::map<std::string, std::string>;

template <int D>
struct Problem {
  SdeModel<D> model;
  PathGrid<D> grid;
};

using AnyProblem = std::variant<Problem<1>, Problem<3>>;

/// Registry names, in the order shown by the CLI help.
inline const std::vector<std::string>& builtin_model_names() {
  static const std::vector<std::string> names = {
      "bm_unimodal", "bm_bimodal", "langevin_bimodal", "gissinger", "linear_quadratic",
      "linear_free"};
  return names;
}

namespace gissinger {

inline constexpr double kMu = 0.119;
inline constexpr double kNu = 0.1;
inline constexpr double kGamma = 0.9;

inline State<3> drift(const State<3>& x) {
  return State<3>(kMu * x(0) - x(1) * x(2), -kNu * x(1) + x(0) * x(2),
                  kGamma - x(2) + x(0) * x(1));
}

inline Block<3> jacobian(const State<3>& x) {
  Block<3> j;
  j << kMu, -x(2), -x(1),
       x(2), -kNu, x(0),
       x(1), x(0), -1.0;
  return j;
}

inline Tensor3<3> hessian(const State<3>&) {
  Tensor3<3> h;
  for (auto& b : h) b.setZero();
  h[0](1, 2) = h[0](2, 1) = -1.0;
  h[1](0, 2) = h[1](2, 0) = 1.0;
  h[2](0, 1) = h[2](1, 0) = 1.0;
  return h;
}

/// Lobe fixed points p+ (sign = +1) and p- (sign = -1). From the fixed-point
/// equations: x3^2 = mu * nu, x1^2 = x3 (x3 - gamma) / mu, x2 = mu x1 / x3.
inline State<3> lobe_fixed_point(int sign) {
  const double x3 = -std::sqrt(kMu * kNu);
  const double x1 = -sign * std::sqrt(x3 * (x3 - kGamma) / kMu);
  const double x2 = kMu * x1 / x3;
  return State<3>(x1, x2, x3);
}

inline State<3> center_fixed_point() { return State<3>(0.0, 0.0, kGamma); }

}  // namespace gissinger

namespace detail {

class ParamReader {
 public:
  ParamReader(const ParamMap& params, std::set<std::string> allowed)
      : params_(params), allowed_(std::move(allowed)) {
    for (const auto& [key, value] : params_) {
      if (!allowed_.count(key)) {
        throw Error(ErrorCode::InvalidParam, "unknown parameter '" + key + "'");
      }
    }
  }

  bool has(const std::string& key) const { return params_.count(key) > 0; }

  double real(const std::string& key, double fallback) const {
    auto it = params_.find(key);
    if (it == params_.end()) return fallback;
    return parse_real(key, it->second);
  }

  int integer(const std::string& key, int fallback) const {
    auto it = params_.find(key);
    if (it == params_.end()) return fallback;
    char* end = nullptr;
    const long v = std::strtol(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0' || v < 1 || v > 10'000'000) {
      throw Error(ErrorCode::InvalidParam, "parameter '" + key + "' must be a positive integer");
    }
    return static_cast<int>(v);
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    const std::string& text = params_.at(key);
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t comma = text.find(',', pos);
      const std::string item =
          text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      out.push_back(parse_real(key, item));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  }

  template <int D>
  State<D> state(const std::string& key, const State<D>& fallback) const {
    if (!has(key)) return fallback;
    const std::vector<double> v = reals(key);
    if (v.size() != static_cast<std::size_t>(D)) {
      throw Error(ErrorCode::InvalidParam,
                  "parameter '" + key + "' needs " + std::to_string(D) + " components");
    }
    State<D> out;
    for (int i = 0; i < D; ++i) out(i) = v[static_cast<std::size_t>(i)];
    return out;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = params_.find(key);
    return it == params_.end() ? fallback : it->second;
  }

 private:
  static double parse_real(const std::string& key, const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    const std::string t = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0' || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidParam, "parameter '" + key + "' is not a real number: '" + s + "'");
    }
    return v;
  }

  const ParamMap& params_;
  std::set<std::string> allowed_;
};

inline std::set<std::string> common_keys(std::initializer_list<const char*> extra) {
  std::set<std::string> keys = {"dt", "n_steps", "horizon", "epsilon", "x0", "sigma"};
  for (const char* k : extra) keys.insert(k);
  return keys;
}

template <int D>
PathGrid<D> read_grid(const ParamReader& reader, PathGrid<D> defaults) {
  PathGrid<D> grid = defaults;
  grid.dt = reader.real("dt", grid.dt);
  grid.n_steps = reader.integer("n_steps", grid.n_steps);
  if (reader.has("horizon")) {
    const double horizon = reader.real("horizon", 0.0);
    if (!(horizon > 0.0) || !(grid.dt > 0.0)) {
      throw Error(ErrorCode::InvalidParam, "parameter 'horizon' must be positive");
    }
    const double steps = std::round(horizon / grid.dt);
    if (steps < 1.0 || std::abs(steps * grid.dt - horizon) > 1e-12 * horizon) {
      throw Error(ErrorCode::InvalidParam,
                  "parameter 'horizon' is not a whole number of dt steps");
    }
    grid.n_steps = static_cast<int>(steps);
  }
  grid.epsilon = reader.real("epsilon", grid.epsilon);
  grid.x0 = reader.state<D>("x0", grid.x0);
  if (!(grid.dt > 0.0)) throw Error(ErrorCode::InvalidParam, "parameter 'dt' must be positive");
  if (!(grid.epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidParam, "parameter 'epsilon' must be positive");
  }
  return grid;
}

inline double read_sigma(const ParamReader& reader) {
  const double sigma = reader.real("sigma", 1.0);
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidParam, "parameter 'sigma' must be positive");
  return sigma;
}

/// Scalar model with drift f(x) = -alpha x.
inline SdeModel<1> linear_scalar(const std::string& name, double alpha, double sigma) {
  SdeModel<1> m;
  m.name = name;
  m.sigma = sigma;
  m.drift = [alpha](const State<1>& x) { return State<1>(-alpha * x(0)); };
  m.drift_jacobian = [alpha](const State<1>&) { return Block<1>::Constant(-alpha); };
  m.drift_hessian = [](const State<1>&) { return Tensor3<1>{Block<1>::Zero()}; };
  m.linear_drift_rate = -alpha;
  return m;
}

/// g(x) = scale (x^4/4 - x^2/2) + scale/4, which has minima g(+-1) = 0.
inline void set_double_well(SdeModel<1>& m, double scale) {
  m.loglik = [scale](const State<1>& x) {
    const double v = x(0) * x(0);
    return scale * (0.25 * v * v - 0.5 * v) + 0.25 * scale;
  };
  m.loglik_grad = [scale](const State<1>& x) {
    return State<1>(scale * (x(0) * x(0) * x(0) - x(0)));
  };
  m.loglik_hess = [scale](const State<1>& x) {
    return Block<1>::Constant(scale * (3.0 * x(0) * x(0) - 1.0));
  };
}

inline void set_quadratic(SdeModel<1>& m, double center, double precision) {
  m.loglik = [=](const State<1>& x) { return 0.5 * precision * (x(0) - center) * (x(0) - center); };
  m.loglik_grad = [=](const State<1>& x) { return State<1>(precision * (x(0) - center)); };
  m.loglik_hess = [=](const State<1>&) { return Block<1>::Constant(precision); };
  m.quadratic_loglik = QuadraticLoglik{center, precision};
}

}  // namespace detail

/// Builds one of the registered problems. Every g is shifted so that its
/// minimum is zero.
///
/// Parameter keys: dt, n_steps, horizon, epsilon, x0, sigma for all models;
/// alpha (langevin_bimodal, linear_*), obs_y / obs_r (linear_quadratic),
/// obs_y / case (gissinger; case is "a" or "b").
inline AnyProblem builtin_model(const std::string& name, const ParamMap& params = {}) {
  using detail::ParamReader;
  if (name == "bm_unimodal") {
    const ParamReader r(params, detail::common_keys({}));
    Problem<1> p{detail::linear_scalar(name, 0.0, detail::read_sigma(r)), {}};
    p.model.loglik = [](const State<1>& x) {
      const double v = x(0);
      return v * v * v * v / 24.0 + v * v * v / 6.0 + v * v / 2.0;
    };
    p.model.loglik_grad = [](const State<1>& x) {
      const double v = x(0);
      return State<1>(v * v * v / 6.0 + v * v / 2.0 + v);
    };
    p.model.loglik_hess = [](const State<1>& x) {
      const double v = x(0);
      return Block<1>::Constant(v * v / 2.0 + v + 1.0);
    };
    p.grid = detail::read_grid<1>(r, {100, 0.01, State<1>(0.0), 0.01});
    return p;
  }
  if (name == "bm_bimodal") {
    const ParamReader r(params, detail::common_keys({}));
    Problem<1> p{detail::linear_scalar(name, 0.0, detail::read_sigma(r)), {}};
    detail::set_double_well(p.model, 100.0);
    p.grid = detail::read_grid<1>(r, {100, 0.01, State<1>(0.01), 0.1});
    return p;
  }
  if (name == "langevin_bimodal") {
    const ParamReader r(params, detail::common_keys({"alpha"}));
    Problem<1> p{detail::linear_scalar(name, r.real("alpha", 1.0), detail::read_sigma(r)), {}};
    detail::set_double_well(p.model, 10.0);
    p.grid = detail::read_grid<1>(r, {1000, 0.01, State<1>(0.1), 0.01});
    return p;
  }
  if (name == "linear_quadratic") {
    const ParamReader r(params, detail::common_keys({"alpha", "obs_y", "obs_r"}));
    Problem<1> p{detail::linear_scalar(name, r.real("alpha", 0.0), detail::read_sigma(r)), {}};
    const double obs_r = r.real("obs_r", 1.0);
    if (!(obs_r > 0.0)) throw Error(ErrorCode::InvalidParam, "parameter 'obs_r' must be positive");
    detail::set_quadratic(p.model, r.real("obs_y", 1.0), 1.0 / obs_r);
    p.grid = detail::read_grid<1>(r, {100, 0.01, State<1>(0.0), 0.01});
    return p;
  }
  if (name == "linear_free") {
    const ParamReader r(params, detail::common_keys({"alpha"}));
    Problem<1> p{detail::linear_scalar(name, r.real("alpha", 0.0), detail::read_sigma(r)), {}};
    detail::set_quadratic(p.model, 0.0, 0.0);
    p.grid = detail::read_grid<1>(r, {100, 0.01, State<1>(0.0), 0.01});
    return p;
  }
  if (name == "gissinger") {
    const ParamReader r(params, detail::common_keys({"obs_y", "case"}));
    const std::string which = r.text("case", "b");
    if (which != "a" && which != "b") {
      throw Error(ErrorCode::InvalidParam, "parameter 'case' must be 'a' or 'b'");
    }
    const State<3> p_plus = gissinger::lobe_fixed_point(+1);
    const State<3> p_minus = gissinger::lobe_fixed_point(-1);
    const State<3> y = r.state<3>("obs_y", which == "a" ? p_minus : p_plus);

    Problem<3> p;
    p.model.name = name;
    p.model.sigma = detail::read_sigma(r);
    p.model.stepper = Stepper::RK4Drift;
    p.model.drift = gissinger::drift;
    p.model.drift_jacobian = gissinger::jacobian;
    p.model.drift_hessian = gissinger::hessian;
    p.model.loglik = [y](const State<3>& x) { return 0.5 * (x - y).squaredNorm(); };
    p.model.loglik_grad = [y](const State<3>& x) { return State<3>(x - y); };
    p.model.loglik_hess = [](const State<3>&) { return Block<3>::Identity(); };
    const State<3> start = p_plus + State<3>::Constant(0.05);
    p.grid = detail::read_grid<3>(r, {100, 0.1, start, 0.01});
    return p;
  }
  throw Error(ErrorCode::UnknownModel, "no built-in model named '" + name + "'");
}

}  // namespace sdeis
