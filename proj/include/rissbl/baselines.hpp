#pragma once

#include <string>
#include <vector>

#include "rissbl/channel.hpp"
#include "rissbl/vem_common.hpp"

namespace rissbl {

struct BaselineResult {
  CMatrix H_hat;          ///< NK x M
  SupportMatrix U_hat;    ///< NK x M, or empty when the estimator has no support estimate
  int iters = 0;
  bool converged = true;
  std::vector<std::string> warnings;
};

/// Uncoupled SBL: per-element variances gamma_nm = (e_nm + d) / c, no support test.
BaselineResult vanilla_sbl(const MeasurementSet& meas, const ScenarioConfig& cfg);
BaselineResult vanilla_sbl(const MeasurementSet& meas, const SolverOptions& opts);

/// Mean |h|^2 over the nonzero entries of the true channel (0 if there are none).
double oracle_prior_variance(const CMatrix& h_true);

/// Genie-aided MMSE on the true support with an i.i.d. CN(0, prior_variance) prior.
/// Adds a warning for every column whose support exceeds the QK observations.
BaselineResult oracle_mmse(const MeasurementSet& meas, const SupportMatrix& u_true, double prior_variance);
BaselineResult oracle_mmse(const MeasurementSet& meas, const GroundTruth& gt);

/// Orthogonal matching pursuit per column with least-squares refit, `sparsity_k`
/// greedy steps (stops early on an exactly fitted column). Throws ConfigError for
/// sparsity_k == 0 or sparsity_k > QK.
BaselineResult omp(const MeasurementSet& meas, int sparsity_k);

/// Factorized-posterior VEM with exact Gauss-Seidel coordinate updates of the
/// factorized ELBO instead of the majorized step; M-step as FM-SBL.
BaselineResult save_variant(const MeasurementSet& meas, const ScenarioConfig& cfg);
BaselineResult save_variant(const MeasurementSet& meas, const SolverOptions& opts,
                            const IterationObserver& observer = {});

}  // namespace rissbl
