#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "sdeis/experiments.hpp"

using namespace sdeis;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sdeis_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST(Config, ParsesSectionsAndComments) {
  ExperimentConfig cfg;
  load_config_text(cfg, R"(
# sweep on the unimodal model
experiment = sweep
model = bm_unimodal
methods = LM, slm     ; two methods
epsilons = 1e-3:1e-1:3
samples = 200, DLM=50
seed = 7

[model]
dt = 0.02
n_steps = 50
)");
  EXPECT_EQ(cfg.experiment, ExperimentKind::Sweep);
  EXPECT_EQ(cfg.methods, (std::vector<SamplerKind>{SamplerKind::LM, SamplerKind::SLM}));
  ASSERT_EQ(cfg.epsilons.size(), 3u);
  EXPECT_NEAR(cfg.epsilons[1], 1e-2, 1e-15);
  EXPECT_EQ(cfg.samples, 200u);
  EXPECT_EQ(cfg.samples_for(SamplerKind::DLM), 50u);
  EXPECT_EQ(cfg.samples_for(SamplerKind::LM), 200u);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.params.at("dt"), "0.02");
  EXPECT_EQ(cfg.params.at("n_steps"), "50");
}

TEST(Config, RejectsBadInput) {
  ExperimentConfig cfg;
  EXPECT_THROW(load_config_text(cfg, "bogus = 1"), Error);
  EXPECT_THROW(load_config_text(cfg, "[plot]\n"), Error);
  EXPECT_THROW(load_config_text(cfg, "samples = 0"), Error);
  EXPECT_THROW(load_config_text(cfg, "epsilons = a,b"), Error);
  EXPECT_THROW(load_config_text(cfg, "novalue"), Error);
  EXPECT_THROW(load_config_file(cfg, "/nonexistent/sdeis.cfg"), Error);
}

TEST(Config, EmptyMethodsFailBeforeCompute) {
  ExperimentConfig cfg;
  cfg.epsilons = {0.1};
  cfg.output_dir = scratch("empty");
  try {
    run_sweep(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  EXPECT_FALSE(fs::exists(cfg.output_dir / "sweep.csv"));
}

TEST(Config, Defaults) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Crossings;
  apply_defaults(cfg);
  EXPECT_EQ(cfg.methods, std::vector<SamplerKind>{SamplerKind::DLM});
  EXPECT_EQ(cfg.epsilons.size(), 9u);
  EXPECT_EQ(cfg.x0s.size(), 3u);
  ExperimentConfig sweep;
  apply_defaults(sweep);
  EXPECT_EQ(sweep.methods.size(), 4u);
  EXPECT_EQ(sweep.epsilons.size(), 7u);
  EXPECT_NEAR(sweep.epsilons.front(), 1e-3, 1e-18);
  EXPECT_NEAR(sweep.epsilons.back(), 1e-1, 1e-16);
}

TEST(Sweep, WritesTablesAndIsByteIdenticalOnRerun) {
  ExperimentConfig cfg;
  cfg.model = "bm_unimodal";
  cfg.methods = {SamplerKind::LM, SamplerKind::SLM};
  cfg.epsilons = {0.1, 0.03, 0.01};
  cfg.samples = 300;
  cfg.output_dir = scratch("sweep_a");
  const auto r = run_sweep(cfg);
  EXPECT_EQ(r.rows.size(), 6u);
  const auto rows = lines(cfg.output_dir / "sweep.csv");
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0], "method,epsilon,q,n_eff,m,failed,seed");
  EXPECT_EQ(rows[1].rfind("LM,0.10000000000000001,", 0), 0u) << rows[1];
  EXPECT_EQ(lines(cfg.output_dir / "slopes.csv")[0], "method,slope,intercept");
  EXPECT_NEAR(r.slopes.at(SamplerKind::LM).slope, 1.0, 0.3);
  EXPECT_NEAR(r.slopes.at(SamplerKind::SLM).slope, 2.0, 0.5);

  ExperimentConfig again = cfg;
  again.output_dir = scratch("sweep_b");
  again.threads = 3;
  run_sweep(again);
  EXPECT_EQ(slurp(cfg.output_dir / "sweep.csv"), slurp(again.output_dir / "sweep.csv"));
  EXPECT_EQ(slurp(cfg.output_dir / "slopes.csv"), slurp(again.output_dir / "slopes.csv"));
}

TEST(Histogram, WritesFilesAndTargetDensity) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Histogram;
  cfg.model = "linear_quadratic";
  cfg.params = {{"n_steps", "20"}, {"dt", "0.05"}};
  cfg.methods = {SamplerKind::LM};
  cfg.epsilons = {0.1};
  cfg.samples = 400;
  cfg.bins = 10;
  cfg.output_dir = scratch("hist");
  const auto out = run_histogram(cfg);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].step, 20);
  EXPECT_EQ(out[0].histogram.masses.size(), 10u);
  EXPECT_TRUE(fs::exists(cfg.output_dir / "hist_LM_0_20.csv"));
  EXPECT_EQ(lines(cfg.output_dir / "summary.csv")[0], "method,step,coord,below,above,q,n_eff,m,failed,seed");
  const auto target = lines(cfg.output_dir / "target.csv");
  ASSERT_EQ(target.size(), 402u);
  EXPECT_EQ(target[0], "x,log_target,density");

  // density integrates to one and peaks near the Gaussian posterior mean
  const auto post = oracle::gaussian_posterior(0.0, 1.0, 1.0, 1.0, 0.1);
  double peak_x = 0.0, peak = -1.0, integral = 0.0, prev_x = 0.0, prev_d = 0.0;
  for (std::size_t i = 1; i < target.size(); ++i) {
    double x, lt, d;
    char c1, c2;
    std::istringstream in(target[i]);
    in >> x >> c1 >> lt >> c2 >> d;
    if (d > peak) {
      peak = d;
      peak_x = x;
    }
    if (i > 1) integral += 0.5 * (d + prev_d) * (x - prev_x);
    prev_x = x;
    prev_d = d;
  }
  EXPECT_NEAR(integral, 1.0, 1e-9);
  EXPECT_NEAR(peak_x, post.mean, 0.02);
  EXPECT_NEAR(peak, 1.0 / std::sqrt(2.0 * std::numbers::pi * post.var), 0.01);
}

TEST(Histogram, ValidatesStepAndEpsilon) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Histogram;
  cfg.methods = {SamplerKind::LM};
  cfg.epsilons = {0.1, 0.2};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.epsilons = {0.1};
  cfg.params = {{"n_steps", "5"}};
  cfg.steps = {6};
  cfg.samples = 10;
  cfg.output_dir = scratch("hist_bad");
  EXPECT_THROW(run_histogram(cfg), Error);
}

TEST(Crossings, WritesTable) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Crossings;
  cfg.model = "langevin_bimodal";
  cfg.params = {{"n_steps", "100"}};
  cfg.methods = {SamplerKind::DLM};
  cfg.epsilons = {1e-2, 1e-6};
  cfg.x0s = {0.1};
  cfg.samples = 6;
  cfg.output_dir = scratch("cross");
  const auto rows = run_crossings(cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].avg_crossings, 0.0);
  EXPECT_LT(rows[1].stats.q_rel_var, 1e-3);
  EXPECT_EQ(lines(cfg.output_dir / "crossings.csv").size(), 3u);
}

TEST(LinearQuadraticOracle, MatchesFineDiscreteOptimum) {
  // dense solve of the discrete first-order conditions at a tiny step
  const double a = -0.7, sigma = 1.3, x0 = 0.4, kappa = 2.0, y = -0.5, T = 1.0;
  const int n = 4000;
  const double dt = T / n, b = 1.0 + a * dt, c = 1.0 / (sigma * sigma * dt);
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, c * (1.0 + b * b));
  diag(n - 1) = c + kappa;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = c * b * x0;
  rhs(n - 1) += kappa * y;
  // Thomas algorithm with off-diagonal -c b
  const double off = -c * b;
  Eigen::VectorXd cp(n), dp(n);
  cp(0) = off / diag(0);
  dp(0) = rhs(0) / diag(0);
  for (int i = 1; i < n; ++i) {
    const double m = diag(i) - off * cp(i - 1);
    cp(i) = off / m;
    dp(i) = (rhs(i) - off * dp(i - 1)) / m;
  }
  Eigen::VectorXd x(n);
  x(n - 1) = dp(n - 1);
  for (int i = n - 2; i >= 0; --i) x(i) = dp(i) - cp(i) * x(i + 1);

  const LinearQuadraticOracle o{a, sigma, T, x0, kappa, y};
  EXPECT_NEAR(o.endpoint(), x(n - 1), 1e-3);
  EXPECT_NEAR(o.velocity(0.5), (x(n / 2) - x(n / 2 - 1)) / dt, 2e-3);
  EXPECT_NEAR(o.velocity(0.0), (x(0) - x0) / dt, 2e-3);
}

TEST(DtConsistency, FreeEndSigmaIsExact) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::DtConsistency;
  cfg.model = "linear_free";
  cfg.params = {{"sigma", "2"}, {"horizon", "1"}, {"dt", "0.1"}};
  cfg.output_dir = scratch("dtc_free");
  const auto r = run_dt_consistency(cfg);
  ASSERT_EQ(r.rows.size(), 5u);
  for (const auto& row : r.rows) EXPECT_LE(row.sigma_err, 1e-10);
  EXPECT_EQ(lines(cfg.output_dir / "consistency.csv").size(), 6u);
}

TEST(DtConsistency, OrnsteinUhlenbeckFirstOrder) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::DtConsistency;
  cfg.model = "linear_quadratic";
  cfg.params = {{"alpha", "1"}, {"horizon", "1"}, {"dt", "0.1"}};
  cfg.output_dir = scratch("dtc_ou");
  const auto r = run_dt_consistency(cfg);
  ASSERT_EQ(r.rows.size(), 5u);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    EXPECT_LE(r.rows[i].drift_err, r.rows[i - 1].drift_err);
  }
  EXPECT_NEAR(r.drift_order, 1.0, 0.2);
  EXPECT_NEAR(r.sigma_order, 1.0, 0.2);
}

TEST(DtConsistency, RejectsNonlinearModels) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::DtConsistency;
  cfg.model = "bm_unimodal";
  cfg.output_dir = scratch("dtc_bad");
  try {
    run_dt_consistency(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModelNotSupported);
  }
  cfg.model = "gissinger";
  EXPECT_THROW(run_dt_consistency(cfg), Error);
}
