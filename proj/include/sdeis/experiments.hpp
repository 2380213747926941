#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sdeis/diagnostics.hpp"
#include "sdeis/registry.hpp"
#include "sdeis/samplers.hpp"

namespace sdeis {

enum class ExperimentKind { Sweep, Histogram, Crossings, DtConsistency };

inline ExperimentKind parse_experiment_kind(const std::string& text) {
  if (text == "sweep") return ExperimentKind::Sweep;
  if (text == "histogram") return ExperimentKind::Histogram;
  if (text == "crossings") return ExperimentKind::Crossings;
  if (text == "dt-consistency" || text == "dt_consistency") return ExperimentKind::DtConsistency;
  throw Error(ErrorCode::InvalidConfig, "unknown experiment '" + text + "'");
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Sweep;
  std::string model = "bm_unimodal";
  ParamMap params;
  std::vector<SamplerKind> methods;
  std::vector<double> epsilons;
  std::size_t samples = 1200;
  /// Per-method overrides of `samples`.
  std::map<SamplerKind, std::size_t> samples_by_method;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = ".";
  unsigned threads = 0;

  // histogram
  std::vector<int> steps;  // empty: final step
  std::vector<int> coords{0};
  int bins = 50;
  double threshold = 0.0;

  // crossings
  std::vector<double> x0s;

  // dt-consistency
  std::vector<double> dts{0.1, 0.05, 0.025, 0.0125, 0.00625};

  std::size_t samples_for(SamplerKind kind) const {
    const auto it = samples_by_method.find(kind);
    return it == samples_by_method.end() ? samples : it->second;
  }

  void validate() const {
    const bool needs_methods = experiment != ExperimentKind::DtConsistency;
    if (needs_methods && methods.empty()) {
      throw Error(ErrorCode::InvalidConfig, "no methods configured");
    }
    if (needs_methods && epsilons.empty()) {
      throw Error(ErrorCode::InvalidConfig, "no epsilons configured");
    }
    for (double e : epsilons) {
      if (!(e > 0.0) || !std::isfinite(e)) {
        throw Error(ErrorCode::InvalidConfig, "epsilons must be positive");
      }
    }
    if (samples < 1) throw Error(ErrorCode::InvalidConfig, "samples must be >= 1");
    for (const auto& [kind, m] : samples_by_method) {
      if (m < 1) throw Error(ErrorCode::InvalidConfig, "samples must be >= 1");
    }
    if (experiment == ExperimentKind::Histogram) {
      if (epsilons.size() != 1) {
        throw Error(ErrorCode::InvalidConfig, "histogram takes exactly one epsilon");
      }
      if (bins < 2) throw Error(ErrorCode::InvalidConfig, "bins must be >= 2");
      if (coords.empty()) throw Error(ErrorCode::InvalidConfig, "no coordinates configured");
    }
    if (experiment == ExperimentKind::Crossings) {
      if (x0s.empty()) throw Error(ErrorCode::InvalidConfig, "no x0s configured");
      if (methods.size() != 1) {
        throw Error(ErrorCode::InvalidConfig, "crossings takes exactly one method");
      }
    }
    if (experiment == ExperimentKind::DtConsistency) {
      if (dts.size() < 2) throw Error(ErrorCode::InvalidConfig, "need at least two dts");
      for (double dt : dts) {
        if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dts must be positive");
      }
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidConfig, "'" + key + "': not a number: '" + text + "'");
}

inline long long parse_integer(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidConfig, "'" + key + "': not an integer: '" + text + "'");
}

}  // namespace detail

/// `count` points log-spaced from lo to hi inclusive.
inline std::vector<double> logspace(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > 0.0) || count < 1) {
    throw Error(ErrorCode::InvalidConfig, "logspace needs positive bounds and count >= 1");
  }
  if (count == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return out;
}

/// Either a comma list ("1e-3,1e-2") or a log range "lo:hi:count".
inline std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  const auto range = detail::split(text, ':');
  if (range.size() == 3) {
    return logspace(detail::parse_real(key, range[0]), detail::parse_real(key, range[1]),
                    static_cast<int>(detail::parse_integer(key, range[2])));
  }
  std::vector<double> out;
  for (const auto& item : detail::split(text, ',')) out.push_back(detail::parse_real(key, item));
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "'" + key + "' is empty");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : detail::split(text, ',')) {
    out.push_back(static_cast<int>(detail::parse_integer(key, item)));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "'" + key + "' is empty");
  return out;
}

/// Applies one experiment key. Model parameters go through `param`.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value) {
  using detail::parse_integer;
  if (key == "experiment") {
    cfg.experiment = parse_experiment_kind(value);
  } else if (key == "model") {
    cfg.model = value;
  } else if (key == "methods") {
    cfg.methods.clear();
    for (const auto& m : detail::split(value, ',')) cfg.methods.push_back(parse_sampler_kind(m));
  } else if (key == "epsilons") {
    cfg.epsilons = parse_real_list(key, value);
  } else if (key == "samples") {
    // "1200" or "LM=12000,DLM=1200"
    for (const auto& item : detail::split(value, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        const long long m = parse_integer(key, item);
        if (m < 1) throw Error(ErrorCode::InvalidConfig, "samples must be >= 1");
        cfg.samples = static_cast<std::size_t>(m);
      } else {
        const long long m = parse_integer(key, detail::trim(item.substr(eq + 1)));
        if (m < 1) throw Error(ErrorCode::InvalidConfig, "samples must be >= 1");
        cfg.samples_by_method[parse_sampler_kind(detail::trim(item.substr(0, eq)))] =
            static_cast<std::size_t>(m);
      }
    }
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_integer(key, value));
  } else if (key == "out" || key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<unsigned>(parse_integer(key, value));
  } else if (key == "steps" || key == "step") {
    cfg.steps = parse_int_list(key, value);
  } else if (key == "coords" || key == "coord") {
    cfg.coords = parse_int_list(key, value);
  } else if (key == "bins") {
    cfg.bins = static_cast<int>(parse_integer(key, value));
  } else if (key == "threshold") {
    cfg.threshold = detail::parse_real(key, value);
  } else if (key == "x0s") {
    cfg.x0s = parse_real_list(key, value);
  } else if (key == "dts") {
    cfg.dts = parse_real_list(key, value);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown experiment key '" + key + "'");
  }
}

/// Reads `key = value` lines. Keys under a [model] header are model
/// parameters; all other keys are experiment keys. '#' and ';' start comments.
inline void load_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": bad section");
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "experiment") {
        throw Error(ErrorCode::InvalidConfig, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section == "model") {
      cfg.params[key] = value;
    } else {
      apply_config_key(cfg, key, value);
    }
  }
}

inline void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  load_config_text(cfg, buf.str());
}

/// Fills the defaults that depend on the experiment.
inline void apply_defaults(ExperimentConfig& cfg) {
  if (cfg.methods.empty()) {
    if (cfg.experiment == ExperimentKind::Crossings) {
      cfg.methods = {SamplerKind::DLM};
    } else if (cfg.experiment != ExperimentKind::DtConsistency) {
      cfg.methods = {SamplerKind::LM, SamplerKind::SLM, SamplerKind::DLM, SamplerKind::SDLM};
    }
  }
  if (cfg.epsilons.empty() && cfg.experiment != ExperimentKind::DtConsistency) {
    if (cfg.experiment == ExperimentKind::Histogram) {
      cfg.epsilons = {0.1};
    } else if (cfg.experiment == ExperimentKind::Crossings) {
      cfg.epsilons = logspace(1e-9, 1e-1, 9);
    } else {
      cfg.epsilons = logspace(1e-3, 1e-1, 7);
    }
  }
  if (cfg.x0s.empty() && cfg.experiment == ExperimentKind::Crossings) {
    cfg.x0s = {1e-1, 1e-3, 1e-5};
  }
}

/// CSV writer with 17 significant digits, LF endings and a flush per row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out_ << header << '\n';
    out_.flush();
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << format(fields), first = false), ...);
    out_ << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorCode::Io, "write failed for " + path_.string());
  }

  static std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  static std::string format(const std::string& s) { return s; }
  static std::string format(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string format(I v) {
    return std::to_string(v);
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct SweepRow {
  SamplerKind method = SamplerKind::LM;
  double epsilon = 0.0;
  EnsembleStats stats;
  std::size_t m = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Per method: fitted slope and intercept, NaN when Q is not positive.
  std::map<SamplerKind, LineFit> slopes;
};

namespace detail {

template <int D>
PathGrid<D> with_epsilon(PathGrid<D> grid, double epsilon) {
  grid.epsilon = epsilon;
  return grid;
}

inline EnsembleOptions ensemble_options(const ExperimentConfig& cfg) {
  EnsembleOptions opt;
  opt.threads = cfg.threads;
  return opt;
}

inline LineFit fit_or_nan(const std::vector<std::pair<double, double>>& points) {
  try {
    return loglog_slope(points);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonPositiveValue && e.code() != ErrorCode::InvalidParam) throw;
    return LineFit{std::nan(""), std::nan("")};
  }
}

}  // namespace detail

/// Q(eps) for every configured method; writes sweep.csv and slopes.csv.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const AnyProblem problem = builtin_model(cfg.model, cfg.params);
  SweepResult result;
  CsvWriter sweep(cfg.output_dir / "sweep.csv", "method,epsilon,q,n_eff,m,failed,seed");
  std::visit(
      [&](const auto& p) {
        for (SamplerKind kind : cfg.methods) {
          std::vector<std::pair<double, double>> points;
          for (double eps : cfg.epsilons) {
            const std::size_t m = cfg.samples_for(kind);
            const auto ensemble = run_ensemble(kind, p.model, detail::with_epsilon(p.grid, eps), m,
                                               cfg.seed, detail::ensemble_options(cfg));
            const EnsembleStats stats = relative_variance(ensemble);
            sweep.row(to_string(kind), eps, stats.q_rel_var, stats.n_eff, m, stats.failed, cfg.seed);
            result.rows.push_back({kind, eps, stats, m});
            points.emplace_back(eps, stats.q_rel_var);
          }
          result.slopes[kind] = detail::fit_or_nan(points);
        }
      },
      problem);
  CsvWriter slopes(cfg.output_dir / "slopes.csv", "method,slope,intercept");
  for (SamplerKind kind : cfg.methods) {
    slopes.row(to_string(kind), result.slopes[kind].slope, result.slopes[kind].intercept);
  }
  return result;
}

struct HistogramSummary {
  SamplerKind method = SamplerKind::LM;
  int step = 0;
  int coordinate = 0;
  WeightedHistogram histogram;
  double below = 0.0;
  double above = 0.0;
  EnsembleStats stats;
};

/// Gaussian law of x_N under the unconditioned linear scalar dynamics,
/// per unit eps: mean and variance.
inline std::pair<double, double> linear_prior_endpoint(double rate, double sigma, double dt,
                                                       int n_steps, double x0) {
  const double b = 1.0 + rate * dt;
  double mean = x0;
  double var = 0.0;
  for (int n = 0; n < n_steps; ++n) {
    mean *= b;
    var = b * b * var + sigma * sigma * dt;
  }
  return {mean, var};
}

/// Weighted marginals per method, step and coordinate; writes
/// hist_<method>_<coord>_<step>.csv, summary.csv and, for linear scalar
/// models, target.csv.
inline std::vector<HistogramSummary> run_histogram(const ExperimentConfig& cfg) {
  cfg.validate();
  const AnyProblem problem = builtin_model(cfg.model, cfg.params);
  std::vector<HistogramSummary> out;
  CsvWriter summary(cfg.output_dir / "summary.csv",
                    "method,step,coord,below,above,q,n_eff,m,failed,seed");
  std::visit(
      [&](const auto& p) {
        constexpr int D = std::decay_t<decltype(p.grid.x0)>::RowsAtCompileTime;
        const double eps = cfg.epsilons.front();
        const auto grid = detail::with_epsilon(p.grid, eps);
        std::vector<int> steps = cfg.steps;
        if (steps.empty()) steps.push_back(grid.n_steps);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (SamplerKind kind : cfg.methods) {
          const std::size_t m = cfg.samples_for(kind);
          const auto ensemble =
              run_ensemble(kind, p.model, grid, m, cfg.seed, detail::ensemble_options(cfg));
          const EnsembleStats stats = relative_variance(ensemble);
          for (int step : steps) {
            for (int coord : cfg.coords) {
              HistogramSummary s;
              s.method = kind;
              s.step = step;
              s.coordinate = coord;
              s.histogram = weighted_marginal(ensemble, step, coord, {}, cfg.bins);
              std::tie(s.below, s.above) = mode_mass(ensemble, step, coord, cfg.threshold);
              s.stats = stats;
              const std::string name = "hist_" + to_string(kind) + "_" + std::to_string(coord) +
                                       "_" + std::to_string(step) + ".csv";
              CsvWriter hist(cfg.output_dir / name, "bin_left,bin_right,mass");
              for (std::size_t b = 0; b < s.histogram.masses.size(); ++b) {
                hist.row(s.histogram.edges[b], s.histogram.edges[b + 1], s.histogram.masses[b]);
              }
              summary.row(to_string(kind), step, coord, s.below, s.above, stats.q_rel_var,
                          stats.n_eff, m, stats.failed, cfg.seed);
              out.push_back(std::move(s));
            }
          }
          for (const auto& smp : ensemble.samples) {
            lo = std::min(lo, smp.path.back()(0));
            hi = std::max(hi, smp.path.back()(0));
          }
        }
        if constexpr (D == 1) {
          if (p.model.linear_drift_rate && hi > lo) {
            const auto [mean, var] = linear_prior_endpoint(*p.model.linear_drift_rate,
                                                           p.model.sigma, grid.dt, grid.n_steps,
                                                           grid.x0(0));
            const double pad = 0.1 * (hi - lo);
            const int points = 401;
            std::vector<double> xs(points), logs(points);
            double top = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < points; ++i) {
              xs[i] = lo - pad + (hi - lo + 2.0 * pad) * i / (points - 1);
              const double d = xs[i] - mean;
              logs[i] = -(0.5 * d * d / var + p.model.loglik(State<1>(xs[i]))) / eps;
              top = std::max(top, logs[i]);
            }
            // trapezoid normalization on the grid
            double area = 0.0;
            for (int i = 1; i < points; ++i) {
              area += 0.5 * (std::exp(logs[i] - top) + std::exp(logs[i - 1] - top)) *
                      (xs[i] - xs[i - 1]);
            }
            CsvWriter target(cfg.output_dir / "target.csv", "x,log_target,density");
            for (int i = 0; i < points; ++i) {
              target.row(xs[i], logs[i], std::exp(logs[i] - top) / area);
            }
          }
        }
      },
      problem);
  return out;
}

struct CrossingRow {
  double x0 = 0.0;
  double epsilon = 0.0;
  EnsembleStats stats;
  double avg_crossings = 0.0;
  std::size_t m = 0;
};

/// Q and mean zero crossings of coordinate 0 over (x0, eps); writes
/// crossings.csv.
inline std::vector<CrossingRow> run_crossings(const ExperimentConfig& cfg) {
  cfg.validate();
  const AnyProblem problem = builtin_model(cfg.model, cfg.params);
  std::vector<CrossingRow> out;
  CsvWriter csv(cfg.output_dir / "crossings.csv", "x0,epsilon,q,avg_crossings,m,seed");
  const SamplerKind kind = cfg.methods.front();
  std::visit(
      [&](const auto& p) {
        for (double x0 : cfg.x0s) {
          auto grid = p.grid;
          grid.x0.setConstant(x0);
          for (double eps : cfg.epsilons) {
            grid.epsilon = eps;
            const std::size_t m = cfg.samples_for(kind);
            const auto ensemble =
                run_ensemble(kind, p.model, grid, m, cfg.seed, detail::ensemble_options(cfg));
            CrossingRow row{x0, eps, relative_variance(ensemble), zero_crossings(ensemble, 0), m};
            csv.row(x0, eps, row.stats.q_rel_var, row.avg_crossings, m, cfg.seed);
            out.push_back(row);
          }
        }
      },
      problem);
  return out;
}

/// Closed-form continuous optimum for dx = a x dt + sigma dW with endpoint
/// cost kappa/2 (x_T - y)^2.
struct LinearQuadraticOracle {
  double rate = 0.0;
  double sigma = 1.0;
  double horizon = 1.0;
  double x0 = 0.0;
  double kappa = 0.0;
  double center = 0.0;

  double free_endpoint() const { return x0 * std::exp(rate * horizon); }

  double endpoint_variance() const {
    if (rate == 0.0) return sigma * sigma * horizon;
    return sigma * sigma * std::expm1(2.0 * rate * horizon) / (2.0 * rate);
  }

  double endpoint() const {
    const double v = endpoint_variance();
    return (free_endpoint() / v + kappa * center) / (1.0 / v + kappa);
  }

  /// Time derivative of the optimal path.
  double velocity(double t) const {
    const double w = endpoint() - free_endpoint();
    if (rate == 0.0) return w / horizon;
    return rate * x0 * std::exp(rate * t) +
           w * rate * std::cosh(rate * t) / std::sinh(rate * horizon);
  }
};

struct ConsistencyRow {
  double dt = 0.0;
  double drift_err = 0.0;
  double sigma_err = 0.0;
};

struct ConsistencyResult {
  std::vector<ConsistencyRow> rows;
  double drift_order = 0.0;
  double sigma_order = 0.0;
};

/// Compares the discrete optimum and Sigma_1 with their continuous limits at
/// fixed horizon; writes consistency.csv and orders.csv.
inline ConsistencyResult run_dt_consistency(const ExperimentConfig& cfg) {
  cfg.validate();
  const AnyProblem any = builtin_model(cfg.model, cfg.params);
  const auto* p = std::get_if<Problem<1>>(&any);
  if (!p || !p->model.linear_drift_rate || !p->model.quadratic_loglik ||
      p->model.stepper != Stepper::Euler) {
    throw Error(ErrorCode::ModelNotSupported,
                "dt-consistency needs a scalar model with linear drift and quadratic g");
  }
  const double horizon = p->grid.horizon();
  LinearQuadraticOracle oracle{*p->model.linear_drift_rate, p->model.sigma, horizon,
                               p->grid.x0(0), p->model.quadratic_loglik->precision,
                               p->model.quadratic_loglik->center};
  ConsistencyResult result;
  CsvWriter csv(cfg.output_dir / "consistency.csv", "dt,drift_err,sigma_err");
  for (double dt : cfg.dts) {
    const double steps = horizon / dt;
    const int n = static_cast<int>(std::lround(steps));
    if (n < 1 || std::abs(n * dt - horizon) > 1e-9 * horizon) {
      throw Error(ErrorCode::InvalidConfig, "dt does not divide the horizon");
    }
    const auto opt = minimize_path<1>(p->model, dt, p->grid.x0,
                                      deterministic_trajectory(p->model, p->grid.x0, dt, n));
    double drift_err = 0.0;
    double prev = p->grid.x0(0);
    for (int k = 0; k < n; ++k) {
      const double next = opt.phi.states[static_cast<std::size_t>(k)](0);
      drift_err = std::max(drift_err, std::abs((next - prev) / dt - oracle.velocity(k * dt)));
      prev = next;
    }
    const double sigma_err = std::abs(opt.sigma_first(0, 0) - p->model.sigma * p->model.sigma);
    csv.row(dt, drift_err, sigma_err);
    result.rows.push_back({dt, drift_err, sigma_err});
  }
  std::vector<std::pair<double, double>> drift_pts, sigma_pts;
  for (const auto& r : result.rows) {
    drift_pts.emplace_back(r.dt, r.drift_err);
    sigma_pts.emplace_back(r.dt, r.sigma_err);
  }
  result.drift_order = detail::fit_or_nan(drift_pts).slope;
  result.sigma_order = detail::fit_or_nan(sigma_pts).slope;
  CsvWriter orders(cfg.output_dir / "orders.csv", "quantity,order");
  orders.row("drift_err", result.drift_order);
  orders.row("sigma_err", result.sigma_order);
  return result;
}

}  // namespace sdeis
