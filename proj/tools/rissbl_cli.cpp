// rissbl command line: sweep, kl, runtime, generate.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rissbl/config.hpp"
#include "rissbl/container.hpp"
#include "rissbl/errors.hpp"
#include "rissbl/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string estimators;
  std::optional<int> trials;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_estimators) {
  cmd->add_option("--config", f.config, "key=value config file");
  cmd->add_option("--seed", f.seed, "64-bit RNG seed (overrides the config)");
  cmd->add_option("--out", f.out, "output path");
  if (with_estimators) cmd->add_option("--estimators", f.estimators, "comma list of estimators");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials");
}

rissbl::ConfigFile load(const CommonFlags& f) {
  rissbl::ConfigFile cfg = f.config.empty() ? rissbl::ConfigFile{} : rissbl::load_config(f.config);
  if (f.seed) cfg.sweep.base.seed = *f.seed;
  if (!f.estimators.empty()) cfg.sweep.estimators = rissbl::split_list(f.estimators);
  if (f.trials) cfg.sweep.trials = *f.trials;
  if (!f.out.empty()) cfg.sweep.output_path = f.out;
  cfg.runtime.cfg = cfg.sweep.base;
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw rissbl::ConfigError("cannot open " + path + " for writing");
  return os;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Bayesian learning channel estimation benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("rissbl ") + rissbl::kVersion);

  CommonFlags sweep_f, kl_f, rt_f, gen_f;
  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over one scenario axis");
  add_common(sweep, sweep_f, true);
  CLI::App* kl = app.add_subcommand("kl", "KL divergence of FM-SBL and SAVE to the SM-SBL posterior per iteration");
  add_common(kl, kl_f, false);
  CLI::App* runtime = app.add_subcommand("runtime", "per-iteration wall time of SM-SBL and FM-SBL versus Q");
  add_common(runtime, rt_f, false);
  CLI::App* generate = app.add_subcommand("generate", "dump one scenario as binary containers");
  add_common(generate, gen_f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sweep) {
      rissbl::ConfigFile cfg = load(sweep_f);
      if (cfg.sweep.output_path.empty()) cfg.sweep.output_path = "sweep.csv";
      cfg.sweep.validate();
      const rissbl::SweepResult result = rissbl::run_sweep(cfg.sweep);
      {
        std::ofstream os = open_out(cfg.sweep.output_path);
        rissbl::write_sweep_csv(os, cfg.sweep, result);
      }
      {
        std::ofstream os = open_out(cfg.sweep.output_path + ".runtime.csv");
        rissbl::write_runtime_sidecar(os, cfg.sweep, result);
      }
      std::cerr << "wrote " << result.rows.size() << " rows to " << cfg.sweep.output_path << "\n";
      if (result.all_failed()) {
        std::cerr << "every estimator run failed\n";
        return kExitSolver;
      }
    } else if (*kl) {
      rissbl::ConfigFile cfg = load(kl_f);
      const int trials = kl_f.trials.value_or(1);
      const rissbl::KlStudyResult result = rissbl::run_kl_study(cfg.sweep.base, trials);
      std::ofstream os = open_out(kl_f.out.empty() ? "kl.csv" : kl_f.out);
      rissbl::write_kl_csv(os, cfg.sweep.base, trials, result);
    } else if (*runtime) {
      rissbl::ConfigFile cfg = load(rt_f);
      const auto rows = rissbl::run_runtime_study(cfg.runtime);
      std::ofstream os = open_out(rt_f.out.empty() ? "runtime.csv" : rt_f.out);
      rissbl::write_runtime_csv(os, cfg.runtime, rows);
    } else if (*generate) {
      rissbl::ConfigFile cfg = load(gen_f);
      const std::string prefix = gen_f.out.empty() ? "scenario" : gen_f.out;
      const rissbl::Scenario sc = rissbl::make_scenario(cfg.sweep.base);
      rissbl::save_ground_truth(prefix + ".truth.bin", sc.truth);
      rissbl::save_measurements(prefix + ".meas.bin", sc.meas);
      std::cerr << "wrote " << prefix << ".truth.bin and " << prefix << ".meas.bin\n";
    }
  } catch (const rissbl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const rissbl::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
