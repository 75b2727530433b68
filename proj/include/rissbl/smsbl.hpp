#pragma once

#include "rissbl/channel.hpp"
#include "rissbl/linalg.hpp"
#include "rissbl/prior.hpp"
#include "rissbl/vem_common.hpp"

namespace rissbl {

/// q(h_m) = CN(mu_m, Sigma_m). Sigma_m is block diagonal over the UE blocks of
/// the joint phase matrix, so only the blocks are stored.
struct StructuredPosterior {
  CMatrix mu;               ///< NK x M
  CovarianceBlocks blocks;  ///< blocks[m][k], N x N

  /// Full NK x NK covariance of column m.
  CMatrix covariance(Eigen::Index m) const;
  /// diag(Sigma_m) for every column, NK x M.
  RMatrix marginal_variances() const;
};

/// -sigma^-2 (||y - Theta mu||^2 + tr(Theta^H Theta Sigma)) - sum_n (|mu_n|^2 + Sigma_nn) / gamma_n + ln det Sigma.
/// Throws DomainError when Sigma is not positive definite.
double elbo_structured(const CVector& mu, const CMatrix& sigma, const RVector& gamma, const CVector& y,
                       const CMatrix& theta, double sigma2);
/// Same with a precomputed Gram matrix Theta^H Theta.
double elbo_structured(const CVector& mu, const CMatrix& sigma, const RVector& gamma, const CVector& y,
                       const CMatrix& theta, const CMatrix& gram, double sigma2);

struct StructuredEStep {
  CVector mu;
  CMatrix Sigma;
};

/// Sigma = (sigma^-2 Theta^H Theta + diag(gamma)^-1)^-1, mu = sigma^-2 Sigma Theta^H y.
/// Uses the Woodbury form (one Q x Q factorization) when Q < NK.
StructuredEStep estep_update(const CVector& y, const CMatrix& theta, const RVector& gamma, double sigma2);
StructuredEStep estep_update(const CVector& y, const CMatrix& theta, const CMatrix& gram, const RVector& gamma,
                             double sigma2);

struct ElboGradients {
  CVector grad_mu;     ///< d/dRe + j d/dIm of the ELBO
  CMatrix grad_Sigma;  ///< gradient with respect to the Hermitian matrix Sigma
};

/// grad_mu = -2 sigma^-2 (Theta^H Theta mu - Theta^H y) - 2 diag(gamma)^-1 mu,
/// grad_Sigma = -sigma^-2 Theta^H Theta - diag(gamma)^-1 + Sigma^-1.
ElboGradients elbo_gradients(const CVector& mu, const CMatrix& sigma, const RVector& gamma, const CVector& y,
                             const CMatrix& theta, double sigma2);

struct SmsblResult {
  CMatrix H_hat;  ///< NK x M, the posterior means
  SupportMatrix U_hat;
  StructuredPosterior posterior;
  PriorState prior;
  SolverTrace trace;
};

SmsblResult run_smsbl(const MeasurementSet& meas, const ScenarioConfig& cfg);
SmsblResult run_smsbl(const MeasurementSet& meas, const SolverOptions& opts, const IterationObserver& observer = {});

}  // namespace rissbl
