#pragma once

#include "rissbl/channel.hpp"
#include "rissbl/linalg.hpp"
#include "rissbl/prior.hpp"
#include "rissbl/vem_common.hpp"

namespace rissbl {

/// q(h_m) = prod_n CN(mu_nm, tau_nm).
struct FactorizedPosterior {
  CMatrix mu;  ///< NK x M
  RMatrix tau; ///< NK x M, all > 0
};

/// Quadratic majorizer data of the data-fit term: L = 2 lambda_max(Theta^H Theta)
/// and a = diag(Theta^H Theta).
struct MajorizerState {
  double L = 0.0;
  RVector a;
};

MajorizerState make_majorizer(const CMatrix& theta);

/// -sigma^-2 (||y - Theta mu||^2 + a^T tau) - sum_n (|mu_n|^2 + tau_n) / gamma_n + sum_n ln tau_n.
double elbo_factorized(const CVector& mu, const RVector& tau, const RVector& gamma, const CVector& y,
                       const CMatrix& theta, double sigma2);

/// Factorized ELBO with ||y - Theta mu||^2 replaced by its quadratic upper bound around delta:
///   ||y - Theta delta||^2 + 2 Re{(mu - delta)^H Theta^H (Theta delta - y)} + (L/2) ||mu - delta||^2.
double elbo_majorized(const CVector& mu, const RVector& tau, const CVector& delta, double L, const RVector& gamma,
                      const CVector& y, const CMatrix& theta, double sigma2);

struct FactorizedEStep {
  CVector mu;
  RVector tau;
};

/// One inversion-free ascent step: maximizes the majorized ELBO around mu_prev.
///   mu  = sigma^-2 ((L/2) mu_prev - Theta^H (Theta mu_prev - y)) ./ (L / (2 sigma^2) + 1 ./ gamma)
///   tau = 1 ./ (a / sigma^2 + 1 ./ gamma)
FactorizedEStep fm_estep_update(const CVector& mu_prev, const CVector& y, const CMatrix& theta, const RVector& gamma,
                                double sigma2, double L);
FactorizedEStep fm_estep_update(const CVector& mu_prev, const CVector& y, const CMatrix& theta, const RVector& gamma,
                                double sigma2, const MajorizerState& maj);

/// One Gauss-Seidel sweep of exact per-coordinate maximization of the
/// factorized ELBO (no majorization): for n = 0..NK-1,
///   tau_n = 1 / (a_n / sigma^2 + 1 / gamma_n), mu_n = tau_n sigma^-2 theta_n^H (y - sum_{j != n} theta_j mu_j).
FactorizedEStep coordinate_estep_update(const CVector& mu_prev, const CVector& y, const CMatrix& theta,
                                        const RVector& gamma, double sigma2);

struct FmsblResult {
  CMatrix H_hat;
  SupportMatrix U_hat;
  FactorizedPosterior posterior;
  PriorState prior;
  SolverTrace trace;
};

FmsblResult run_fmsbl(const MeasurementSet& meas, const ScenarioConfig& cfg);
FmsblResult run_fmsbl(const MeasurementSet& meas, const SolverOptions& opts, const IterationObserver& observer = {});

}  // namespace rissbl
