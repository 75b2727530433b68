#include "rissbl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "rissbl/baselines.hpp"
#include "rissbl/config.hpp"
#include "rissbl/errors.hpp"
#include "rissbl/fmsbl.hpp"
#include "rissbl/metrics.hpp"
#include "rissbl/smsbl.hpp"

namespace rissbl {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

void write_header(std::ostream& os, const std::string& kind, const ScenarioConfig& cfg) {
  os << "# rissbl " << kVersion << " " << kind << "\n";
  os << "# rng=philox4x32-10 key=seed counter=(block, (purpose << 56) | (value_index << 32) | trial)\n";
  for (const auto& [k, v] : scenario_fields(cfg)) os << "# " << k << "=" << v << "\n";
}

struct EstimatorOutput {
  CMatrix h_hat;
  SupportMatrix u_hat;  // empty if not applicable
  int iters = 0;
  bool converged = true;
};

EstimatorOutput run_estimator(const std::string& name, const Scenario& sc, const SweepSpec& spec) {
  const ScenarioConfig& cfg = sc.cfg;
  if (name == "smsbl") {
    SmsblResult r = run_smsbl(sc.meas, cfg);
    return {std::move(r.H_hat), std::move(r.U_hat), r.trace.iters, r.trace.converged};
  }
  if (name == "fmsbl") {
    FmsblResult r = run_fmsbl(sc.meas, cfg);
    return {std::move(r.H_hat), std::move(r.U_hat), r.trace.iters, r.trace.converged};
  }
  BaselineResult r;
  if (name == "oracle") {
    r = oracle_mmse(sc.meas, sc.truth);
  } else if (name == "sbl") {
    r = vanilla_sbl(sc.meas, cfg);
  } else if (name == "omp") {
    r = omp(sc.meas, spec.omp_sparsity > 0 ? spec.omp_sparsity : cfg.K * cfg.L_R_k);
  } else if (name == "save") {
    r = save_variant(sc.meas, cfg);
  } else {
    throw ConfigError("unknown estimator '" + name + "'");
  }
  return {std::move(r.H_hat), std::move(r.U_hat), r.iters, r.converged};
}

double spectral_efficiency(const Scenario& sc, const CMatrix& h_hat) {
  const ScenarioConfig& cfg = sc.cfg;
  const Dictionaries dict = build_dictionaries(cfg);
  std::vector<CMatrix> est;
  for (int k = 0; k < cfg.K; ++k) est.push_back(vad_to_physical(ue_block(h_hat, k, cfg.N()), dict));
  const CVector theta = sc.pilots.col(0);
  return sum_se(est, sc.truth.H_physical_per_ue, theta, cfg.sigma2(), cfg.Q, cfg.coherence_symbols);
}

}  // namespace

SweepAxis parse_axis(const std::string& name) {
  if (name == "snr") return SweepAxis::kSnr;
  if (name == "pilots") return SweepAxis::kPilots;
  if (name == "sparsity") return SweepAxis::kSparsity;
  if (name == "antennas") return SweepAxis::kAntennas;
  if (name == "power") return SweepAxis::kPower;
  throw ConfigError("unknown sweep axis '" + name + "'");
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kSnr: return "snr";
    case SweepAxis::kPilots: return "pilots";
    case SweepAxis::kSparsity: return "sparsity";
    case SweepAxis::kAntennas: return "antennas";
    case SweepAxis::kPower: return "power";
  }
  return "?";
}

const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> names{"oracle", "smsbl", "fmsbl", "sbl", "omp", "save"};
  return names;
}

ScenarioConfig apply_axis(const ScenarioConfig& base, SweepAxis axis, double value) {
  ScenarioConfig cfg = base;
  auto as_count = [value] {
    if (value != std::floor(value) || value < 1.0 || value > 1e9) {
      throw ConfigError("axis value " + format_double(value) + " is not a positive integer");
    }
    return static_cast<int>(value);
  };
  switch (axis) {
    case SweepAxis::kSnr:
    case SweepAxis::kPower:
      cfg.snr_db = value;
      break;
    case SweepAxis::kPilots:
      cfg.Q = as_count();
      break;
    case SweepAxis::kSparsity:
      cfg.L_R_k = as_count();
      break;
    case SweepAxis::kAntennas: {
      const int m = as_count();
      if (m % cfg.M2 != 0) throw ConfigError("antenna count must be a multiple of M2");
      cfg.M1 = m / cfg.M2;
      break;
    }
  }
  cfg.validate();
  return cfg;
}

void SweepSpec::validate() const {
  base.validate();
  if (values.empty()) throw ConfigError("sweep: no axis values");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw ConfigError("sweep: axis values must be strictly increasing");
  }
  if (trials < 1) throw ConfigError("sweep: trials must be >= 1");
  if (estimators.empty()) throw ConfigError("sweep: no estimators");
  for (const auto& e : estimators) {
    if (std::find(known_estimators().begin(), known_estimators().end(), e) == known_estimators().end()) {
      throw ConfigError("sweep: unknown estimator '" + e + "'");
    }
  }
  if (omp_sparsity < 0) throw ConfigError("sweep: omp_sparsity must be >= 0");
  for (double v : values) {
    const ScenarioConfig cfg = apply_axis(base, axis, v);
    const int k = omp_sparsity > 0 ? omp_sparsity : cfg.K * cfg.L_R_k;
    if (std::find(estimators.begin(), estimators.end(), "omp") != estimators.end() && k > cfg.QK()) {
      throw ConfigError("sweep: OMP sparsity exceeds QK");
    }
  }
}

bool SweepResult::all_failed() const {
  if (rows.empty()) return false;
  return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.status != "ok"; });
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult result;
  std::vector<std::string> order = spec.estimators;
  std::vector<std::vector<ResultRow>> by_value(spec.values.size());
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    const ScenarioConfig cfg = apply_axis(spec.base, spec.axis, spec.values[vi]);
    for (int trial = 0; trial < spec.trials; ++trial) {
      const Scenario sc = make_scenario(cfg, static_cast<std::uint32_t>(vi), static_cast<std::uint32_t>(trial));
      for (const auto& name : order) {
        ResultRow row;
        row.axis_value = spec.values[vi];
        row.estimator = name;
        row.trial = trial;
        const auto start = Clock::now();
        try {
          EstimatorOutput out = run_estimator(name, sc, spec);
          row.runtime_seconds = seconds_since(start);
          row.iters = out.iters;
          row.converged = out.converged;
          row.nmse_db = to_db(nmse(out.h_hat, sc.truth.H_tilde));
          row.nser = out.u_hat.size() ? nser(out.u_hat, sc.truth.U_true) : kNaN;
          row.sum_se = spectral_efficiency(sc, out.h_hat);
        } catch (const ConfigError&) {
          throw;
        } catch (const std::exception& e) {
          row.runtime_seconds = seconds_since(start);
          row.nmse_db = row.nser = row.sum_se = kNaN;
          row.converged = false;
          row.status = std::string("failed: ") + e.what();
        }
        by_value[vi].push_back(std::move(row));
      }
    }
  }
  // Deterministic order: axis value, then estimator name as listed, then trial.
  for (auto& rows : by_value) {
    std::stable_sort(rows.begin(), rows.end(), [&order](const ResultRow& a, const ResultRow& b) {
      const auto ia = std::find(order.begin(), order.end(), a.estimator) - order.begin();
      const auto ib = std::find(order.begin(), order.end(), b.estimator) - order.begin();
      if (ia != ib) return ia < ib;
      return a.trial < b.trial;
    });
    for (auto& r : rows) result.rows.push_back(std::move(r));
  }
  return result;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const SweepResult& result) {
  write_header(os, "sweep", spec.base);
  os << "# axis=" << axis_name(spec.axis) << "\n";
  std::vector<std::string> vals;
  for (double v : spec.values) vals.push_back(format_double(v));
  os << "# values=" << join(vals) << "\n";
  os << "# trials=" << spec.trials << "\n";
  os << "# estimators=" << join(spec.estimators) << "\n";
  os << "# omp_sparsity=" << (spec.omp_sparsity > 0 ? spec.omp_sparsity : spec.base.K * spec.base.L_R_k) << "\n";
  os << "# sum_se: MRC with the first pilot column as data-phase RIS configuration, Tp=Q, Tc=coherence_symbols\n";
  os << "axis_value,estimator,trial,nmse_db,nser,sum_se,iters,converged,status\n";
  for (const ResultRow& r : result.rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    os << format_double(r.axis_value) << ',' << r.estimator << ',' << r.trial << ',' << format_double(r.nmse_db)
       << ',' << format_double(r.nser) << ',' << format_double(r.sum_se) << ',' << r.iters << ','
       << (r.converged ? 1 : 0) << ',' << status << "\n";
  }
}

void write_runtime_sidecar(std::ostream& os, const SweepSpec& spec, const SweepResult& result) {
  os << "# rissbl " << kVersion << " sweep wall-clock times, seed=" << spec.base.seed << "\n";
  os << "axis_value,estimator,trial,runtime_seconds\n";
  for (const ResultRow& r : result.rows) {
    os << format_double(r.axis_value) << ',' << r.estimator << ',' << r.trial << ','
       << format_double(r.runtime_seconds) << "\n";
  }
}

KlStudyResult run_kl_study(const ScenarioConfig& cfg, int trials) {
  cfg.validate();
  if (trials < 1) throw ConfigError("kl study: trials must be >= 1");
  KlStudyResult res;
  res.kl.assign(res.estimators.size(), {});
  res.mean_iters.assign(res.estimators.size(), 0.0);
  const SolverOptions opts = SolverOptions::from(cfg);

  for (int trial = 0; trial < trials; ++trial) {
    const Scenario sc = make_scenario(cfg, 0, static_cast<std::uint32_t>(trial));
    const SmsblResult ref = run_smsbl(sc.meas, opts);
    res.smsbl_iters += ref.trace.iters;
    const Eigen::Index n = sc.meas.block_cols();

    auto kl_of = [&](const CMatrix& mu, const RMatrix& tau) {
      double acc = 0.0;
      for (Eigen::Index m = 0; m < mu.cols(); ++m) {
        for (int k = 0; k < sc.meas.blocks; ++k) {
          acc += gaussian_kl_diagonal(ref.posterior.mu.col(m).segment(k * n, n), ref.posterior.blocks[m][k],
                             mu.col(m).segment(k * n, n), tau.col(m).segment(k * n, n));
        }
      }
      return acc;
    };

    for (std::size_t e = 0; e < res.estimators.size(); ++e) {
      std::vector<double> trace{
          kl_of(CMatrix::Zero(sc.meas.Theta_tilde.cols(), sc.meas.Y_tilde.cols()),
                RMatrix::Constant(sc.meas.Theta_tilde.cols(), sc.meas.Y_tilde.cols(), kInitialVariance))};
      IterationObserver obs = [&](const IterationView& v) { trace.push_back(kl_of(v.mu, v.tau)); };
      int iters;
      if (res.estimators[e] == "fmsbl") {
        iters = run_fmsbl(sc.meas, opts, obs).trace.iters;
      } else {
        iters = save_variant(sc.meas, opts, obs).iters;
      }
      res.mean_iters[e] += iters;
      std::vector<double>& acc = res.kl[e];
      const std::size_t len = std::max(acc.size(), trace.size());
      // Hold finished traces (and earlier trials) at their final value.
      const double acc_last = acc.empty() ? 0.0 : acc.back();
      acc.resize(len, acc_last);
      for (std::size_t t = 0; t < len; ++t) acc[t] += t < trace.size() ? trace[t] : trace.back();
    }
  }
  for (auto& tr : res.kl) {
    for (double& v : tr) v /= trials;
  }
  for (double& v : res.mean_iters) v /= trials;
  res.smsbl_iters /= trials;
  return res;
}

void write_kl_csv(std::ostream& os, const ScenarioConfig& cfg, int trials, const KlStudyResult& result) {
  write_header(os, "kl", cfg);
  os << "# trials=" << trials << "\n";
  os << "# kl = sum over columns and UE blocks of E_q[ln q - ln p], p = converged SM-SBL posterior, "
        "q = estimator posterior at iteration t (t = 0: initialization)\n";
  os << "# smsbl_mean_iters=" << format_double(result.smsbl_iters) << "\n";
  for (std::size_t e = 0; e < result.estimators.size(); ++e) {
    os << "# " << result.estimators[e] << "_mean_iters=" << format_double(result.mean_iters[e]) << "\n";
  }
  os << "iteration";
  for (const auto& e : result.estimators) os << ",kl_" << e;
  os << "\n";
  std::size_t len = 0;
  for (const auto& tr : result.kl) len = std::max(len, tr.size());
  for (std::size_t t = 0; t < len; ++t) {
    os << t;
    for (const auto& tr : result.kl) os << ',' << format_double(t < tr.size() ? tr[t] : tr.back());
    os << "\n";
  }
}

std::vector<RuntimeRow> run_runtime_study(const RuntimeSpec& spec) {
  if (spec.q_values.empty()) throw ConfigError("runtime: no Q values");
  for (std::size_t i = 1; i < spec.q_values.size(); ++i) {
    if (spec.q_values[i] <= spec.q_values[i - 1]) throw ConfigError("runtime: Q values must be increasing");
  }
  if (spec.repetitions < 1 || spec.iterations < 1) throw ConfigError("runtime: repetitions and iterations >= 1");
  std::vector<RuntimeRow> rows;
  for (std::size_t qi = 0; qi < spec.q_values.size(); ++qi) {
    ScenarioConfig cfg = spec.cfg;
    cfg.Q = spec.q_values[qi];
    cfg.coherence_symbols = std::max(cfg.coherence_symbols, cfg.Q);
    cfg.validate();
    const Scenario sc = make_scenario(cfg, static_cast<std::uint32_t>(qi), 0);
    SolverOptions opts = SolverOptions::from(cfg);
    opts.t_max = spec.iterations;
    opts.eta = 0.0;
    for (const std::string name : {"smsbl", "fmsbl"}) {
      auto once = [&] {
        const auto start = Clock::now();
        if (name == "smsbl") {
          (void)run_smsbl(sc.meas, opts);
        } else {
          (void)run_fmsbl(sc.meas, opts);
        }
        return seconds_since(start);
      };
      (void)once();  // warm-up
      std::vector<double> times;
      for (int r = 0; r < spec.repetitions; ++r) times.push_back(once());
      std::sort(times.begin(), times.end());
      const std::size_t h = times.size() / 2;
      const double median = times.size() % 2 ? times[h] : 0.5 * (times[h - 1] + times[h]);
      rows.push_back({cfg.Q, name, median, median / spec.iterations});
    }
  }
  return rows;
}

void write_runtime_csv(std::ostream& os, const RuntimeSpec& spec, const std::vector<RuntimeRow>& rows) {
  write_header(os, "runtime", spec.cfg);
  os << "# repetitions=" << spec.repetitions << " iterations=" << spec.iterations << " (median, warm-up excluded)\n";
  os << "Q,estimator,median_seconds,median_seconds_per_iter\n";
  for (const RuntimeRow& r : rows) {
    os << r.Q << ',' << r.estimator << ',' << format_double(r.median_seconds) << ','
       << format_double(r.median_seconds_per_iter) << "\n";
  }
}

}  // namespace rissbl
