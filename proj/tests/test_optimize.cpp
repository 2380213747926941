#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sdeis/optimize.hpp"
#include "sdeis/registry.hpp"

using namespace sdeis;

namespace {

template <int D>
OptimalPathResult<D> optimize(const Problem<D>& p, const NewtonSettings& s = {}) {
  return minimize_path<D>(p.model, p.grid.dt, p.grid.x0,
                          deterministic_trajectory(p.model, p.grid.x0, p.grid.dt, p.grid.n_steps), s);
}

Problem<1> quadratic_bm(double dt, int n, double sigma = 1.0) {
  return std::get<Problem<1>>(builtin_model(
      "linear_quadratic", {{"dt", std::to_string(dt)}, {"n_steps", std::to_string(n)},
                           {"sigma", std::to_string(sigma)}}));
}

}  // namespace

TEST(MinimizePath, QuadraticBrownianIsStraightLine) {
  const auto r = optimize(quadratic_bm(0.01, 100));
  EXPECT_LE(r.iterations, 2);
  for (int n = 1; n <= 100; ++n) {
    EXPECT_NEAR(r.phi.states[static_cast<std::size_t>(n - 1)](0), 0.5 * n / 100.0, 1e-10);
  }
  EXPECT_LE(r.grad_norm, 1e-9);
}

TEST(MinimizePath, FreeEndFollowsDeterministicTrajectory) {
  auto p = std::get<Problem<3>>(builtin_model("gissinger", {{"n_steps", "30"}}));
  p.model.loglik = [](const State<3>&) { return 0.0; };
  p.model.loglik_grad = [](const State<3>&) { return State<3>::Zero(); };
  p.model.loglik_hess = [](const State<3>&) { return Block<3>::Zero(); };
  std::vector<State<3>> init(30, p.grid.x0);
  const auto r = minimize_path<3>(p.model, p.grid.dt, p.grid.x0, init);
  const auto det = deterministic_trajectory(p.model, p.grid.x0, p.grid.dt, 30);
  EXPECT_NEAR(r.cost, 0.0, 1e-16);
  for (std::size_t i = 0; i < det.size(); ++i) EXPECT_LT((r.phi.states[i] - det[i]).norm(), 1e-8);
}

TEST(MinimizePath, BimodalPicksRightWell) {
  const auto p = std::get<Problem<1>>(builtin_model("bm_bimodal"));
  const auto r = optimize(p);
  // straight line from x0, endpoint minimizes (x - x0)^2 / (2T) + g(x)
  double x = 1.0;
  for (int i = 0; i < 50; ++i) {
    const double f = 100.0 * (x * x * x - x) + (x - 0.01);
    const double df = 100.0 * (3.0 * x * x - 1.0) + 1.0;
    x -= f / df;
  }
  EXPECT_GT(r.phi.back()(0), 0.0);
  EXPECT_NEAR(r.phi.back()(0), x, 1e-3);
}

TEST(MinimizePath, CostHistoryMonotoneAndGradientSmall) {
  const auto p = std::get<Problem<3>>(builtin_model("gissinger"));
  const auto r = optimize(p);
  ASSERT_GE(r.cost_history.size(), 2u);
  for (std::size_t i = 1; i < r.cost_history.size(); ++i) {
    EXPECT_LE(r.cost_history[i], r.cost_history[i - 1] + 1e-12 * std::abs(r.cost_history[i - 1]));
  }
  EXPECT_LE(r.grad_norm, 1e-9);
  const auto g = path_cost_grad(p.model, p.grid.dt, r.phi);
  for (const auto& v : g) EXPECT_LE(v.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MinimizePath, SaddleStartEscapes) {
  // x0 = 0 on langevin_bimodal starts on the symmetric saddle of F.
  const auto p = std::get<Problem<1>>(
      builtin_model("langevin_bimodal", {{"x0", "0"}, {"n_steps", "200"}}));
  const auto r = optimize(p);
  EXPECT_NEAR(std::abs(r.phi.back()(0)), 1.0, 0.2);
  EXPECT_TRUE(std::holds_alternative<BlockCholesky<1>>(factorize(r.hessian)));
}

TEST(MinimizePath, MaxItersCarriesBestIterate) {
  const auto p = std::get<Problem<3>>(builtin_model("gissinger"));
  NewtonSettings s;
  s.max_iters = 1;
  s.grad_tol = 1e-300;
  try {
    optimize(p, s);
    FAIL();
  } catch (const MaxItersExceeded<3>& e) {
    EXPECT_EQ(e.code(), ErrorCode::MaxItersExceeded);
    EXPECT_EQ(e.best().size(), 100u);
  }
}

TEST(MinimizePath, RejectsBadInput) {
  const auto p = quadratic_bm(0.1, 3);
  EXPECT_THROW(minimize_path<1>(p.model, 0.1, State<1>(0.0), {}), Error);
  std::vector<State<1>> bad(3, State<1>(std::nan("")));
  EXPECT_THROW(minimize_path<1>(p.model, 0.1, State<1>(0.0), bad), Error);
  NewtonSettings s;
  s.backtrack_factor = 1.5;
  EXPECT_THROW(s.validate(), Error);
}

TEST(MarginalCovariance, FreeBrownianIsExactlySigmaSquared) {
  for (double sigma : {1.0, 2.0}) {
    for (int n : {1, 5, 100}) {
      auto p = std::get<Problem<1>>(builtin_model(
          "linear_free", {{"sigma", std::to_string(sigma)}, {"n_steps", std::to_string(n)}}));
      const auto r = optimize(p);
      EXPECT_NEAR(r.sigma_first(0, 0), sigma * sigma, 1e-10 * sigma * sigma);
    }
  }
}

TEST(MarginalCovariance, MatchesDenseInverse) {
  const auto p = std::get<Problem<3>>(builtin_model("gissinger", {{"n_steps", "20"}}));
  const auto r = optimize(p);
  const Eigen::MatrixXd inv = r.hessian.to_dense().inverse();
  const Eigen::Matrix3d want = inv.topLeftCorner<3, 3>() / p.grid.dt;
  EXPECT_LT((r.sigma_first - want).cwiseAbs().maxCoeff(), 1e-10 * want.cwiseAbs().maxCoeff());
  EXPECT_EQ(r.sigma_first, r.sigma_first.transpose());
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(r.sigma_first).eigenvalues().minCoeff(), 0.0);
}

TEST(MarginalCovariance, ErrorIsFirstOrderInDt) {
  // dense oracle of (H^{-1})_{11} / dt for BM with g = (x - 1)^2 / 2
  const auto err = [](double dt) {
    const int n = static_cast<int>(std::lround(1.0 / dt));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      h(i, i) = (i + 1 < n ? 2.0 : 1.0) / dt;
      if (i + 1 < n) h(i, i + 1) = h(i + 1, i) = -1.0 / dt;
    }
    h(n - 1, n - 1) += 1.0;
    return std::abs(h.inverse()(0, 0) / dt - 1.0);
  };
  const auto ours = [](double dt) {
    const auto r = optimize(quadratic_bm(dt, static_cast<int>(std::lround(1.0 / dt))));
    return std::abs(r.sigma_first(0, 0) - 1.0);
  };
  for (double dt : {0.1, 0.05, 0.025}) EXPECT_NEAR(ours(dt), err(dt), 1e-10);
  EXPECT_NEAR(ours(0.05) / ours(0.1), 0.5, 0.05);
  EXPECT_NEAR(ours(0.025) / ours(0.05), 0.5, 0.05);
}

TEST(WarmStart, ZeroPerturbationDropsHead) {
  const auto p = std::get<Problem<3>>(builtin_model("gissinger", {{"n_steps", "10"}}));
  const auto r = optimize(p);
  const auto tail = warm_start(r, r.phi.states[0], p.model, p.grid.dt);
  ASSERT_EQ(tail.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(tail[i], r.phi.states[i + 1]);
}

TEST(WarmStart, BrownianShiftsUniformly) {
  const auto p = quadratic_bm(0.1, 10);
  const auto r = optimize(p);
  const State<1> shift(0.25);
  const auto tail = warm_start(r, State<1>(r.phi.states[0] + shift), p.model, p.grid.dt);
  for (std::size_t i = 0; i < tail.size(); ++i) {
    EXPECT_NEAR(tail[i](0), r.phi.states[i + 1](0) + 0.25, 1e-15);
  }
}

TEST(WarmStart, LengthTwoGivesOneProjectedState) {
  auto p = std::get<Problem<1>>(builtin_model("langevin_bimodal", {{"n_steps", "2"}, {"alpha", "2"}}));
  const auto r = optimize(p);
  const auto tail = warm_start(r, State<1>(r.phi.states[0](0) + 0.1), p.model, p.grid.dt);
  ASSERT_EQ(tail.size(), 1u);
  // f = -2x: the perturbation is carried by (1 - 2 dt)
  EXPECT_NEAR(tail[0](0), r.phi.states[1](0) + 0.1 * (1.0 - 2.0 * p.grid.dt), 1e-15);
}

TEST(WarmStart, WithoutJacobianDropsHead) {
  auto p = quadratic_bm(0.1, 4);
  const auto r = optimize(p);
  p.model.drift_jacobian = nullptr;
  const auto tail = warm_start(r, State<1>(7.0), p.model, p.grid.dt);
  for (std::size_t i = 0; i < tail.size(); ++i) EXPECT_EQ(tail[i], r.phi.states[i + 1]);
  EXPECT_THROW(warm_start(optimize(quadratic_bm(0.1, 1)), State<1>(0.0), p.model, 0.1), Error);
}
