#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sdeis/error.hpp"
#include "sdeis/samplers.hpp"

namespace sdeis {

struct EnsembleStats {
  double q_rel_var = 0.0;
  double n_eff = 0.0;
  std::size_t n_samples = 0;
  double log_weight_max = 0.0;
  std::size_t failed = 0;
};

/// Q = Var[W] / E[W]^2 with population moments, computed after subtracting
/// the largest log weight.
inline EnsembleStats relative_variance(std::span<const double> log_weights,
                                       std::size_t failed = 0) {
  if (log_weights.empty()) throw Error(ErrorCode::EmptyEnsemble, "no log weights");
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (!std::isfinite(lw)) throw Error(ErrorCode::InvalidParam, "log weight is not finite");
    top = std::max(top, lw);
  }
  double s1 = 0.0;
  double s2 = 0.0;
  for (double lw : log_weights) {
    const double w = std::exp(lw - top);
    s1 += w;
    s2 += w * w;
  }
  const double m = static_cast<double>(log_weights.size());
  EnsembleStats out;
  out.q_rel_var = std::max(0.0, m * s2 / (s1 * s1) - 1.0);
  out.n_samples = log_weights.size();
  out.n_eff = m / (1.0 + out.q_rel_var);
  out.log_weight_max = top;
  out.failed = failed;
  return out;
}

template <int D>
EnsembleStats relative_variance(const Ensemble<D>& ensemble) {
  const std::vector<double> lw = ensemble.log_weights();
  return relative_variance(lw, ensemble.failed);
}

/// Self-normalized weights, summing to one.
inline std::vector<double> normalized_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) throw Error(ErrorCode::EmptyEnsemble, "no log weights");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - top);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

struct WeightedHistogram {
  std::vector<double> edges;
  std::vector<double> masses;
  int coordinate = 0;
};

/// Values of one coordinate at one step (1-based; step 0 is the start).
template <int D>
std::vector<double> marginal_values(const Ensemble<D>& ensemble, int step, int coordinate) {
  if (ensemble.samples.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble is empty");
  const int n = static_cast<int>(ensemble.samples.front().path.states.size());
  if (step < 1 || step > n) {
    throw Error(ErrorCode::OutOfRangeStep,
                "step " + std::to_string(step) + " outside [1, " + std::to_string(n) + "]");
  }
  if (coordinate < 0 || coordinate >= D) {
    throw Error(ErrorCode::InvalidParam, "coordinate out of range");
  }
  std::vector<double> out;
  out.reserve(ensemble.samples.size());
  for (const auto& s : ensemble.samples) {
    out.push_back(s.path.states[static_cast<std::size_t>(step - 1)](coordinate));
  }
  return out;
}

/// Weighted quantile by the inverse of the cumulative normalized weight.
inline double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                                double p) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double acc = 0.0;
  for (std::size_t i : order) {
    acc += weights[i];
    if (acc >= p) return values[i];
  }
  return values[order.back()];
}

/// Uniform edges over the weighted 0.1%..99.9% quantile range.
inline std::vector<double> default_edges(std::span<const double> values,
                                         std::span<const double> weights, int bins = 50) {
  double lo = weighted_quantile(values, weights, 0.001);
  double hi = weighted_quantile(values, weights, 0.999);
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  return edges;
}

/// Normalized weighted histogram. Values outside the edges are counted in the
/// first or last bin so that the masses always sum to one.
inline WeightedHistogram weighted_histogram(std::span<const double> values,
                                            std::span<const double> log_weights,
                                            std::optional<std::vector<double>> edges = {},
                                            int bins = 50, int coordinate = 0) {
  if (values.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble is empty");
  const std::vector<double> w = normalized_weights(log_weights);
  WeightedHistogram h;
  h.coordinate = coordinate;
  if (edges) {
    h.edges = std::move(*edges);
  } else {
    if (bins < 2) throw Error(ErrorCode::InvalidParam, "need at least two bins");
    h.edges = default_edges(values, w, bins);
  }
  if (h.edges.size() < 3) throw Error(ErrorCode::InvalidParam, "need at least two bins");
  for (std::size_t i = 1; i < h.edges.size(); ++i) {
    if (!(h.edges[i] > h.edges[i - 1])) {
      throw Error(ErrorCode::InvalidParam, "histogram edges must be strictly increasing");
    }
  }
  const std::size_t nb = h.edges.size() - 1;
  h.masses.assign(nb, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), values[i]);
    std::ptrdiff_t bin = (it - h.edges.begin()) - 1;
    bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(nb) - 1);
    h.masses[static_cast<std::size_t>(bin)] += w[i];
  }
  const double total = std::accumulate(h.masses.begin(), h.masses.end(), 0.0);
  for (double& m : h.masses) m /= total;
  return h;
}

template <int D>
WeightedHistogram weighted_marginal(const Ensemble<D>& ensemble, int step, int coordinate,
                                    std::optional<std::vector<double>> edges = {},
                                    int bins = 50) {
  const std::vector<double> values = marginal_values(ensemble, step, coordinate);
  const std::vector<double> lw = ensemble.log_weights();
  return weighted_histogram(values, lw, std::move(edges), bins, coordinate);
}

/// Weighted mass strictly below and at-or-above the threshold.
inline std::pair<double, double> mode_mass(std::span<const double> values,
                                           std::span<const double> log_weights,
                                           double threshold) {
  const std::vector<double> w = normalized_weights(log_weights);
  double below = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < threshold) below += w[i];
  }
  return {below, 1.0 - below};
}

template <int D>
std::pair<double, double> mode_mass(const Ensemble<D>& ensemble, int step, int coordinate,
                                    double threshold) {
  const std::vector<double> values = marginal_values(ensemble, step, coordinate);
  const std::vector<double> lw = ensemble.log_weights();
  return mode_mass(values, lw, threshold);
}

/// Sign changes along a sequence; zeros take the sign of the last nonzero entry.
inline int count_sign_changes(std::span<const double> values) {
  int changes = 0;
  int sign = 0;
  for (double v : values) {
    const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) ++changes;
    sign = s;
  }
  return changes;
}

/// Unweighted mean number of zero crossings of one coordinate, counted along
/// start, x_1, ..., x_N.
template <int D>
double zero_crossings(const Ensemble<D>& ensemble, int coordinate) {
  if (ensemble.samples.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble is empty");
  double total = 0.0;
  std::vector<double> seq;
  for (const auto& s : ensemble.samples) {
    seq.clear();
    seq.push_back(s.path.start(coordinate));
    for (const auto& x : s.path.states) seq.push_back(x(coordinate));
    total += count_sign_changes(seq);
  }
  return total / static_cast<double>(ensemble.samples.size());
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least squares fit of log q against log epsilon.
inline LineFit loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw Error(ErrorCode::InvalidParam, "need at least two points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [e, q] : points) {
    if (!(e > 0.0) || !(q > 0.0)) {
      throw Error(ErrorCode::NonPositiveValue, "log-log fit needs positive values");
    }
    sx += std::log(e);
    sy += std::log(q);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [e, q] : points) {
    const double dx = std::log(e) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(q) - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidParam, "log-log fit needs distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace sdeis
