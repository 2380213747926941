#include <gtest/gtest.h>

#include <cmath>

#include "sdeis/diagnostics.hpp"

using namespace sdeis;

namespace {

Ensemble<1> scalar_ensemble(const std::vector<std::vector<double>>& paths,
                            const std::vector<double>& weights, double start = 0.0) {
  Ensemble<1> e;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    WeightedPath<1> w;
    w.path.start = State<1>(start);
    for (double v : paths[i]) w.path.states.push_back(State<1>(v));
    w.log_weight = std::log(weights[i]);
    e.samples.push_back(w);
  }
  return e;
}

std::vector<double> logs(std::vector<double> w) {
  for (double& v : w) v = std::log(v);
  return w;
}

}  // namespace

TEST(RelativeVariance, EqualWeights) {
  const std::vector<double> lw(10, -3.0);
  const auto s = relative_variance(lw);
  EXPECT_EQ(s.q_rel_var, 0.0);
  EXPECT_EQ(s.n_eff, 10.0);
}

TEST(RelativeVariance, HandExample) {
  const auto s = relative_variance(logs({1, 1, 1, 3}));
  EXPECT_NEAR(s.q_rel_var, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.n_eff, 3.0, 1e-14);
}

TEST(RelativeVariance, EffectiveSizeFormula) {
  // two weight levels chosen so that Q = 1 exactly: half zero-ish, half 1
  std::vector<double> w(100, 1.0);
  for (std::size_t i = 0; i < 50; ++i) w[i] = 1e-300;
  const auto s = relative_variance(logs(w));
  EXPECT_NEAR(s.q_rel_var, 1.0, 1e-12);
  EXPECT_NEAR(s.n_eff, 50.0, 1e-10);
}

TEST(RelativeVariance, ShiftInvariantAndOverflowSafe) {
  const auto base = relative_variance(logs({0.2, 1.4, 0.7, 2.5, 0.1}));
  std::vector<double> shifted = logs({0.2, 1.4, 0.7, 2.5, 0.1});
  for (double& v : shifted) v += 1e4;
  const auto s = relative_variance(shifted);
  EXPECT_NEAR(s.q_rel_var, base.q_rel_var, 1e-12);
  EXPECT_TRUE(std::isfinite(s.q_rel_var));
}

TEST(RelativeVariance, Errors) {
  EXPECT_THROW(relative_variance(std::vector<double>{}), Error);
  EXPECT_THROW(relative_variance(std::vector<double>{0.0, std::nan("")}), Error);
}

TEST(WeightedMarginal, SingleSample) {
  const auto e = scalar_ensemble({{0.3}}, {1.0});
  const auto h = weighted_marginal(e, 1, 0, std::vector<double>{0.0, 0.5, 1.0});
  EXPECT_EQ(h.masses, (std::vector<double>{1.0, 0.0}));
}

TEST(WeightedMarginal, TwoSamplesQuarterThreeQuarters) {
  const auto e = scalar_ensemble({{0.2}, {0.8}}, {1.0, 3.0});
  const auto h = weighted_marginal(e, 1, 0, std::vector<double>{0.0, 0.5, 1.0});
  EXPECT_NEAR(h.masses[0], 0.25, 1e-15);
  EXPECT_NEAR(h.masses[1], 0.75, 1e-15);
}

TEST(WeightedMarginal, DefaultEdgesSumToOne) {
  std::vector<std::vector<double>> paths;
  std::vector<double> w;
  for (int i = 0; i < 500; ++i) {
    paths.push_back({std::sin(i * 0.7) * 3.0});
    w.push_back(1.0 + (i % 7));
  }
  const auto h = weighted_marginal(scalar_ensemble(paths, w), 1, 0, {}, 20);
  ASSERT_EQ(h.masses.size(), 20u);
  double total = 0.0;
  for (double m : h.masses) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(WeightedMarginal, Errors) {
  const auto e = scalar_ensemble({{0.2, 0.4}}, {1.0});
  EXPECT_THROW(weighted_marginal(e, 0, 0), Error);
  EXPECT_THROW(weighted_marginal(e, 3, 0), Error);
  EXPECT_THROW(weighted_marginal(e, 1, 1), Error);
  EXPECT_THROW(weighted_marginal(e, 1, 0, std::vector<double>{0.0, 1.0, 0.5}), Error);
  EXPECT_THROW(weighted_marginal(Ensemble<1>{}, 1, 0), Error);
  try {
    marginal_values(e, 5, 0);
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::OutOfRangeStep);
  }
}

TEST(ModeMass, AllAboveThreshold) {
  const auto e = scalar_ensemble({{1.0}, {1.0}}, {1.0, 2.0});
  const auto [below, above] = mode_mass(e, 1, 0, 0.0);
  EXPECT_EQ(below, 0.0);
  EXPECT_EQ(above, 1.0);
}

TEST(ModeMass, SymmetricSplit) {
  const auto e = scalar_ensemble({{1.0}, {-1.0}}, {2.0, 2.0});
  const auto [below, above] = mode_mass(e, 1, 0, 0.0);
  EXPECT_DOUBLE_EQ(below, 0.5);
  EXPECT_DOUBLE_EQ(above, 0.5);
}

TEST(ZeroCrossings, Examples) {
  EXPECT_EQ(count_sign_changes(std::vector<double>{0.1, -0.2, 0.3}), 2);
  EXPECT_EQ(count_sign_changes(std::vector<double>{0.1, 0.0, 0.3}), 0);
  EXPECT_EQ(count_sign_changes(std::vector<double>{0.1, 0.0, -0.3}), 1);
  const auto e = scalar_ensemble({{-0.2, 0.3}, {0.5, 0.6}}, {1.0, 1.0}, 0.1);
  EXPECT_DOUBLE_EQ(zero_crossings(e, 0), 1.0);
  const auto positive = scalar_ensemble({{0.2, 0.3}, {0.5, 0.6}}, {1.0, 1.0}, 0.1);
  EXPECT_EQ(zero_crossings(positive, 0), 0.0);
}

TEST(LogLogSlope, ExactLines) {
  const std::vector<std::pair<double, double>> one{{0.1, 0.1}, {0.01, 0.01}};
  const std::vector<std::pair<double, double>> two{{0.1, 0.01}, {0.01, 0.0001}};
  EXPECT_NEAR(loglog_slope(one).slope, 1.0, 1e-12);
  EXPECT_NEAR(loglog_slope(two).slope, 2.0, 1e-12);
  EXPECT_NEAR(loglog_slope(two).intercept, 0.0, 1e-12);
}

TEST(LogLogSlope, Errors) {
  try {
    loglog_slope(std::vector<std::pair<double, double>>{{0.1, 0.0}, {0.01, 0.1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveValue);
  }
  EXPECT_THROW(loglog_slope(std::vector<std::pair<double, double>>{{0.1, 0.1}}), Error);
}
