#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rissbl/channel.hpp"
#include "rissbl/vem_common.hpp"

namespace rissbl {

inline constexpr const char* kVersion = "1.0.0";

enum class SweepAxis { kSnr, kPilots, kSparsity, kAntennas, kPower };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);

/// Known estimator names: oracle, smsbl, fmsbl, sbl, omp, save.
const std::vector<std::string>& known_estimators();

struct SweepSpec {
  ScenarioConfig base;
  SweepAxis axis = SweepAxis::kSnr;
  std::vector<double> values{0.0, 5.0, 10.0, 15.0};
  int trials = 50;
  std::vector<std::string> estimators{"oracle", "smsbl", "fmsbl", "sbl", "omp"};
  std::string output_path;
  int omp_sparsity = 0;  ///< 0 selects K * L_R_k, the nonzeros of an active joint column

  /// Throws ConfigError: values empty or not strictly increasing, trials < 1,
  /// unknown estimator, or an axis value that yields an invalid scenario.
  void validate() const;
};

/// Scenario for one axis value. snr and power set snr_db (unit transmit power,
/// sigma^2 = 10^(-value/10)); pilots sets Q; sparsity sets L_R_k; antennas sets
/// M by scaling M1 (value must be a multiple of M2).
ScenarioConfig apply_axis(const ScenarioConfig& base, SweepAxis axis, double value);

struct ResultRow {
  double axis_value = 0.0;
  std::string estimator;
  int trial = 0;
  double nmse_db = 0.0;
  double nser = 0.0;  ///< NaN for estimators without a support estimate
  double sum_se = 0.0;
  double runtime_seconds = 0.0;
  int iters = 0;
  bool converged = true;
  std::string status = "ok";
};

struct SweepResult {
  std::vector<ResultRow> rows;  ///< ordered by (axis value, estimator, trial)
  bool all_failed() const;
};

SweepResult run_sweep(const SweepSpec& spec);

/// CSV with a '#' header block (version, full config, seed, RNG layout).
/// Contains no timing, so equal specs give byte-identical files.
void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const SweepResult& result);
/// Wall-clock sidecar: axis_value, estimator, trial, runtime_seconds.
void write_runtime_sidecar(std::ostream& os, const SweepSpec& spec, const SweepResult& result);

struct KlStudyResult {
  /// kl[e][t]: KL from the SM-SBL posterior to estimator e's posterior at
  /// iteration t (t = 0 is the initialization), summed over columns and
  /// averaged over trials. Traces that stop early are held at their last value.
  std::vector<std::string> estimators{"fmsbl", "save"};
  std::vector<std::vector<double>> kl;
  std::vector<double> mean_iters;  ///< per estimator
  double smsbl_iters = 0.0;
};

/// Runs SM-SBL to convergence, then FM-SBL and the SAVE variant on the same
/// measurements, logging the KL after every iteration.
KlStudyResult run_kl_study(const ScenarioConfig& cfg, int trials = 1);
void write_kl_csv(std::ostream& os, const ScenarioConfig& cfg, int trials, const KlStudyResult& result);

struct RuntimeRow {
  int Q = 0;
  std::string estimator;
  double median_seconds = 0.0;           ///< whole run of `iterations` iterations
  double median_seconds_per_iter = 0.0;
};

struct RuntimeSpec {
  ScenarioConfig cfg;
  std::vector<int> q_values{64, 128};
  int repetitions = 5;
  int iterations = 10;  ///< fixed iteration count (eta = 0) so runs are comparable
};

std::vector<RuntimeRow> run_runtime_study(const RuntimeSpec& spec);
void write_runtime_csv(std::ostream& os, const RuntimeSpec& spec, const std::vector<RuntimeRow>& rows);

/// Renders a double with round-trip precision ("%.17g"; nan/inf spelled out).
std::string format_double(double v);

}  // namespace rissbl
