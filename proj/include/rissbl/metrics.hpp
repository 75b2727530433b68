#pragma once

#include <vector>

#include "rissbl/channel.hpp"
#include "rissbl/linalg.hpp"

namespace rissbl {

/// ||H_hat - H_true||_F^2 / ||H_true||_F^2. Throws MetricError for H_true = 0.
double nmse(const CMatrix& h_hat, const CMatrix& h_true);
double to_db(double linear);

/// Number of mismatched entries over the number of true ones. Throws
/// MetricError when U_true has no nonzero entry.
double nser(const SupportMatrix& u_hat, const SupportMatrix& u_true);

/// tr(Sp^-1 Sq) + (mp - mq)^H Sp^-1 (mp - mq) - n + ln det Sp - ln det Sq,
/// which is E_q[ln q - ln p] for circular complex Gaussians p = CN(mp, Sp), q = CN(mq, Sq).
/// Throws DomainError when a covariance is not positive definite.
double gaussian_kl(const CVector& mu_p, const CMatrix& sigma_p, const CVector& mu_q, const CMatrix& sigma_q);

/// KL with a diagonal second argument, q = CN(mq, diag(tau_q)).
double gaussian_kl_diagonal(const CVector& mu_p, const CMatrix& sigma_p, const CVector& mu_q, const RVector& tau_q);

/// Sum spectral efficiency of one channel realization under MRC combining
/// built from the estimates:
///   v_k = H_hat_k theta / ||H_hat_k theta||,
///   SINR_k = P |v_k^H H_k theta|^2 / (P sum_{n != k} |v_k^H H_n theta|^2 + sigma2),
///   SE = (1 - Tp/Tc) sum_k log2(1 + SINR_k).
/// A zero estimate gives v_k = 0 and contributes nothing. Averaging over
/// realizations is left to the caller. Throws ConfigError for Tc <= Tp or Tp < 0.
double sum_se(const std::vector<CMatrix>& h_hat_physical, const std::vector<CMatrix>& h_true_physical,
              const CVector& theta, double sigma2, double tp, double tc, double power = 1.0);

}  // namespace rissbl
