#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdeis/sdeis.hpp"

namespace {

const std::vector<std::string> kExperimentKeys = {
    "methods", "epsilons", "samples", "seed", "out",   "threads",
    "steps",   "coords",   "bins",    "threshold", "x0s", "dts"};

const std::vector<std::string> kModelKeys = {"dt",    "n_steps", "horizon", "x0",   "sigma",
                                             "alpha", "obs_y",   "obs_r",   "case"};

struct Flags {
  std::string model;
  std::string config;
  std::map<std::string, std::string> experiment;
  std::map<std::string, std::string> model_params;
  std::vector<std::string> params;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--model", f.model, "built-in model name");
  cmd->add_option("--config", f.config, "key = value config file; flags override it");
  for (const auto& key : kExperimentKeys) {
    cmd->add_option("--" + key, f.experiment[key], key);
  }
  for (const auto& key : kModelKeys) {
    cmd->add_option("--" + key, f.model_params[key], "model parameter " + key);
  }
  cmd->add_option("--param", f.params, "model parameter as key=value (repeatable)");
}

sdeis::ExperimentConfig build_config(const Flags& f, sdeis::ExperimentKind kind) {
  sdeis::ExperimentConfig cfg;
  if (!f.config.empty()) sdeis::load_config_file(cfg, f.config);
  cfg.experiment = kind;
  if (!f.model.empty()) cfg.model = f.model;
  for (const auto& [key, value] : f.experiment) {
    if (!value.empty()) sdeis::apply_config_key(cfg, key, value);
  }
  for (const auto& [key, value] : f.model_params) {
    if (!value.empty()) cfg.params[key] = value;
  }
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw sdeis::Error(sdeis::ErrorCode::InvalidConfig, "--param expects key=value, got " + kv);
    }
    cfg.params[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  sdeis::apply_defaults(cfg);
  cfg.validate();
  return cfg;
}

int run(sdeis::ExperimentKind kind, const Flags& flags) {
  const sdeis::ExperimentConfig cfg = build_config(flags, kind);
  switch (kind) {
    case sdeis::ExperimentKind::Sweep: {
      const auto r = sdeis::run_sweep(cfg);
      for (const auto& [method, fit] : r.slopes) {
        std::printf("%-5s slope %.4f\n", sdeis::to_string(method).c_str(), fit.slope);
      }
      break;
    }
    case sdeis::ExperimentKind::Histogram: {
      for (const auto& s : sdeis::run_histogram(cfg)) {
        std::printf("%-5s step %d coord %d: below %.4f above %.4f Q %.4g\n",
                    sdeis::to_string(s.method).c_str(), s.step, s.coordinate, s.below, s.above,
                    s.stats.q_rel_var);
      }
      break;
    }
    case sdeis::ExperimentKind::Crossings: {
      for (const auto& r : sdeis::run_crossings(cfg)) {
        std::printf("x0 %.3g eps %.3g: Q %.4g crossings %.4f\n", r.x0, r.epsilon,
                    r.stats.q_rel_var, r.avg_crossings);
      }
      break;
    }
    case sdeis::ExperimentKind::DtConsistency: {
      const auto r = sdeis::run_dt_consistency(cfg);
      for (const auto& row : r.rows) {
        std::printf("dt %.6g: drift_err %.4g sigma_err %.4g\n", row.dt, row.drift_err,
                    row.sigma_err);
      }
      std::printf("order: drift %.4f sigma %.4f\n", r.drift_order, r.sigma_order);
      break;
    }
  }
  std::printf("outputs in %s\n", cfg.output_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Importance sampling of conditioned SDE paths"};
  app.require_subcommand(1);
  std::string models;
  for (const auto& name : sdeis::builtin_model_names()) models += (models.empty() ? "" : ", ") + name;
  app.footer("models: " + models +
             "\nmodel parameters: dt, n_steps, horizon, x0, sigma, alpha, obs_y, obs_r, case");

  const std::vector<std::pair<std::string, sdeis::ExperimentKind>> commands = {
      {"sweep", sdeis::ExperimentKind::Sweep},
      {"histogram", sdeis::ExperimentKind::Histogram},
      {"crossings", sdeis::ExperimentKind::Crossings},
      {"dt-consistency", sdeis::ExperimentKind::DtConsistency}};
  std::map<std::string, Flags> flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, kind] : commands) {
    subs[name] = app.add_subcommand(name, name + " experiment");
    add_flags(subs[name], flags[name]);
  }
  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, kind] : commands) {
    if (!subs[name]->parsed()) continue;
    try {
      return run(kind, flags[name]);
    } catch (const sdeis::Error& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }
  return 2;
}
