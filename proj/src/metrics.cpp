#include "rissbl/metrics.hpp"

#include <cmath>

#include "rissbl/errors.hpp"

namespace rissbl {

double nmse(const CMatrix& h_hat, const CMatrix& h_true) {
  if (h_hat.rows() != h_true.rows() || h_hat.cols() != h_true.cols()) throw MetricError("nmse: shape mismatch");
  const double den = h_true.squaredNorm();
  if (!(den > 0.0)) throw MetricError("nmse: reference channel is zero");
  return (h_hat - h_true).squaredNorm() / den;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

double nser(const SupportMatrix& u_hat, const SupportMatrix& u_true) {
  if (u_hat.rows() != u_true.rows() || u_hat.cols() != u_true.cols()) throw MetricError("nser: shape mismatch");
  const auto ones = (u_true.array() != 0).count();
  if (ones == 0) throw MetricError("nser: reference support is empty");
  const auto mismatches = ((u_hat.array() != 0) != (u_true.array() != 0)).count();
  return static_cast<double>(mismatches) / static_cast<double>(ones);
}

double gaussian_kl(const CVector& mu_p, const CMatrix& sigma_p, const CVector& mu_q, const CMatrix& sigma_q) {
  const Eigen::Index n = mu_p.size();
  if (mu_q.size() != n || sigma_p.rows() != n || sigma_p.cols() != n || sigma_q.rows() != n || sigma_q.cols() != n) {
    throw DomainError("gaussian_kl: shape mismatch");
  }
  const CMatrix sp = 0.5 * (sigma_p + sigma_p.adjoint());
  const CMatrix sq = 0.5 * (sigma_q + sigma_q.adjoint());
  Eigen::LLT<CMatrix> lp(sp), lq(sq);
  if (lp.info() != Eigen::Success || lq.info() != Eigen::Success) {
    throw DomainError("gaussian_kl: covariance is not positive definite");
  }
  auto logdet = [](const Eigen::LLT<CMatrix>& l) {
    return 2.0 * l.matrixLLT().diagonal().real().array().log().sum();
  };
  const CVector diff = mu_p - mu_q;
  const double tr = lp.solve(sq).trace().real();
  const double quad = diff.dot(lp.solve(diff)).real();
  return tr + quad - static_cast<double>(n) + logdet(lp) - logdet(lq);
}

double gaussian_kl_diagonal(const CVector& mu_p, const CMatrix& sigma_p, const CVector& mu_q, const RVector& tau_q) {
  const Eigen::Index n = mu_p.size();
  if (mu_q.size() != n || tau_q.size() != n || sigma_p.rows() != n || sigma_p.cols() != n) {
    throw DomainError("gaussian_kl: shape mismatch");
  }
  if (!(tau_q.array() > 0.0).all()) throw DomainError("gaussian_kl: covariance is not positive definite");
  const CMatrix sp = 0.5 * (sigma_p + sigma_p.adjoint());
  Eigen::LLT<CMatrix> lp(sp);
  if (lp.info() != Eigen::Success) throw DomainError("gaussian_kl: covariance is not positive definite");
  const CMatrix sp_inv = lp.solve(CMatrix::Identity(n, n));
  const CVector diff = mu_p - mu_q;
  const double tr = sp_inv.diagonal().real().dot(tau_q);
  const double quad = diff.dot(sp_inv * diff).real();
  const double logdet_p = 2.0 * lp.matrixLLT().diagonal().real().array().log().sum();
  return tr + quad - static_cast<double>(n) + logdet_p - tau_q.array().log().sum();
}

double sum_se(const std::vector<CMatrix>& h_hat_physical, const std::vector<CMatrix>& h_true_physical,
              const CVector& theta, double sigma2, double tp, double tc, double power) {
  if (!(tp >= 0.0) || !(tc > tp)) throw ConfigError("sum_se: need Tc > Tp >= 0");
  if (h_hat_physical.size() != h_true_physical.size()) throw DomainError("sum_se: UE count mismatch");
  const std::size_t k_ues = h_true_physical.size();
  std::vector<CVector> eff(k_ues);
  for (std::size_t k = 0; k < k_ues; ++k) eff[k] = h_true_physical[k] * theta;
  double acc = 0.0;
  for (std::size_t k = 0; k < k_ues; ++k) {
    CVector v = h_hat_physical[k] * theta;
    const double norm = v.norm();
    if (!(norm > 0.0)) continue;
    v /= norm;
    const double signal = power * std::norm(v.dot(eff[k]));
    double interference = 0.0;
    for (std::size_t j = 0; j < k_ues; ++j) {
      if (j != k) interference += power * std::norm(v.dot(eff[j]));
    }
    acc += std::log2(1.0 + signal / (interference + sigma2));
  }
  return (1.0 - tp / tc) * acc;
}

}  // namespace rissbl
