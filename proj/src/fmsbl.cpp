#include "rissbl/fmsbl.hpp"

#include <cmath>

#include "rissbl/errors.hpp"

namespace rissbl {
namespace {

void check_inputs(const CVector& y, const CMatrix& theta, const RVector& gamma, double sigma2) {
  if (theta.rows() != y.size() || theta.cols() != gamma.size()) throw DomainError("shape mismatch");
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  if (!(gamma.array() > 0.0).all()) throw DomainError("gamma entries must be positive");
}

double prior_and_entropy(const CVector& mu, const RVector& tau, const RVector& gamma) {
  if (!(tau.array() > 0.0).all()) throw DomainError("tau entries must be positive");
  double acc = 0.0;
  for (Eigen::Index n = 0; n < mu.size(); ++n) acc += -(std::norm(mu(n)) + tau(n)) / gamma(n) + std::log(tau(n));
  return acc;
}

}  // namespace

MajorizerState make_majorizer(const CMatrix& theta) {
  MajorizerState s;
  s.a = theta.colwise().squaredNorm().transpose();
  s.L = theta.size() == 0 ? 0.0 : 2.0 * max_eigenvalue_hermitian(theta.adjoint() * theta);
  return s;
}

double elbo_factorized(const CVector& mu, const RVector& tau, const RVector& gamma, const CVector& y,
                       const CMatrix& theta, double sigma2) {
  check_inputs(y, theta, gamma, sigma2);
  const RVector a = theta.colwise().squaredNorm().transpose();
  return -((y - theta * mu).squaredNorm() + a.dot(tau)) / sigma2 + prior_and_entropy(mu, tau, gamma);
}

double elbo_majorized(const CVector& mu, const RVector& tau, const CVector& delta, double L, const RVector& gamma,
                      const CVector& y, const CMatrix& theta, double sigma2) {
  check_inputs(y, theta, gamma, sigma2);
  const RVector a = theta.colwise().squaredNorm().transpose();
  const CVector r = theta * delta - y;
  const CVector step = mu - delta;
  const double lambda =
      r.squaredNorm() + 2.0 * step.dot(theta.adjoint() * r).real() + 0.5 * L * step.squaredNorm() + a.dot(tau);
  return -lambda / sigma2 + prior_and_entropy(mu, tau, gamma);
}

FactorizedEStep fm_estep_update(const CVector& mu_prev, const CVector& y, const CMatrix& theta, const RVector& gamma,
                                double sigma2, const MajorizerState& maj) {
  check_inputs(y, theta, gamma, sigma2);
  const CVector zeta = (0.5 * maj.L * mu_prev - theta.adjoint() * (theta * mu_prev - y)) / sigma2;
  const RVector dvec = (RVector::Constant(gamma.size(), 0.5 * maj.L / sigma2) + gamma.cwiseInverse()).cwiseInverse();
  FactorizedEStep out;
  out.mu = dvec.cast<cplx>().cwiseProduct(zeta);
  out.tau = (maj.a / sigma2 + gamma.cwiseInverse()).cwiseInverse();
  return out;
}

FactorizedEStep fm_estep_update(const CVector& mu_prev, const CVector& y, const CMatrix& theta, const RVector& gamma,
                                double sigma2, double L) {
  MajorizerState maj;
  maj.L = L;
  maj.a = theta.colwise().squaredNorm().transpose();
  return fm_estep_update(mu_prev, y, theta, gamma, sigma2, maj);
}

FactorizedEStep coordinate_estep_update(const CVector& mu_prev, const CVector& y, const CMatrix& theta,
                                        const RVector& gamma, double sigma2) {
  check_inputs(y, theta, gamma, sigma2);
  FactorizedEStep out;
  out.mu = mu_prev;
  out.tau.resize(gamma.size());
  CVector resid = y - theta * mu_prev;
  for (Eigen::Index n = 0; n < gamma.size(); ++n) {
    const double a_n = theta.col(n).squaredNorm();
    const double tau_n = 1.0 / (a_n / sigma2 + 1.0 / gamma(n));
    resid += theta.col(n) * out.mu(n);
    const cplx mu_n = tau_n * theta.col(n).dot(resid) / sigma2;
    resid -= theta.col(n) * mu_n;
    out.mu(n) = mu_n;
    out.tau(n) = tau_n;
  }
  return out;
}

FmsblResult run_fmsbl(const MeasurementSet& meas, const SolverOptions& opts, const IterationObserver& observer) {
  detail::VemResult r =
      detail::run_vem(meas, opts, detail::EStepKind::kMajorized, detail::PriorKind::kCoupled, observer);
  FmsblResult out;
  out.H_hat = r.mu;
  out.U_hat = r.prior.U_hat;
  out.posterior.mu = std::move(r.mu);
  out.posterior.tau = std::move(r.tau);
  out.prior = std::move(r.prior);
  out.trace = std::move(r.trace);
  return out;
}

FmsblResult run_fmsbl(const MeasurementSet& meas, const ScenarioConfig& cfg) {
  return run_fmsbl(meas, SolverOptions::from(cfg));
}

}  // namespace rissbl
