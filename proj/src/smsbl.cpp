#include "rissbl/smsbl.hpp"

#include <cmath>

#include "rissbl/errors.hpp"

namespace rissbl {
namespace {

void check_shapes(const CVector& y, const CMatrix& theta, const RVector& gamma) {
  if (theta.rows() != y.size() || theta.cols() != gamma.size()) throw DomainError("shape mismatch");
}

void check_positive(const RVector& gamma, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  if (!(gamma.array() > 0.0).all()) throw DomainError("gamma entries must be positive");
}

}  // namespace

CMatrix StructuredPosterior::covariance(Eigen::Index m) const {
  const auto& b = blocks.at(static_cast<std::size_t>(m));
  CMatrix out = CMatrix::Zero(mu.rows(), mu.rows());
  Eigen::Index off = 0;
  for (const CMatrix& s : b) {
    out.block(off, off, s.rows(), s.cols()) = s;
    off += s.rows();
  }
  return out;
}

RMatrix StructuredPosterior::marginal_variances() const {
  RMatrix tau(mu.rows(), mu.cols());
  for (Eigen::Index m = 0; m < mu.cols(); ++m) {
    Eigen::Index off = 0;
    for (const CMatrix& s : blocks[static_cast<std::size_t>(m)]) {
      tau.col(m).segment(off, s.rows()) = s.diagonal().real();
      off += s.rows();
    }
  }
  return tau;
}

double elbo_structured(const CVector& mu, const CMatrix& sigma, const RVector& gamma, const CVector& y,
                       const CMatrix& theta, const CMatrix& gram, double sigma2) {
  check_shapes(y, theta, gamma);
  check_positive(gamma, sigma2);
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) throw DomainError("elbo_structured: Sigma shape");
  const double fit = (y - theta * mu).squaredNorm();
  // tr(G Sigma) = sum_ij G_ij Sigma_ji
  const double trace = gram.cwiseProduct(sigma.transpose()).sum().real();
  double prior = 0.0;
  for (Eigen::Index n = 0; n < mu.size(); ++n) prior += (std::norm(mu(n)) + sigma(n, n).real()) / gamma(n);
  return -(fit + trace) / sigma2 - prior + log_det_hpd(sigma);
}

double elbo_structured(const CVector& mu, const CMatrix& sigma, const RVector& gamma, const CVector& y,
                       const CMatrix& theta, double sigma2) {
  return elbo_structured(mu, sigma, gamma, y, theta, theta.adjoint() * theta, sigma2);
}

StructuredEStep estep_update(const CVector& y, const CMatrix& theta, const CMatrix& gram, const RVector& gamma,
                             double sigma2) {
  check_shapes(y, theta, gamma);
  check_positive(gamma, sigma2);
  StructuredEStep out;
  if (theta.rows() < theta.cols()) {
    const CMatrix theta_ups = theta * gamma.asDiagonal();
    CMatrix c = theta_ups * theta.adjoint();
    c.diagonal().array() += sigma2;
    CMatrix rhs(theta.rows(), theta.cols() + 1);
    rhs.leftCols(theta.cols()) = theta_ups;
    rhs.col(theta.cols()) = y;
    const CMatrix x = hermitian_solve(0.5 * (c + c.adjoint()), rhs);
    out.Sigma = -theta_ups.adjoint() * x.leftCols(theta.cols());
    out.Sigma.diagonal() += gamma.cast<cplx>();
    out.mu = theta_ups.adjoint() * x.col(theta.cols());
  } else {
    CMatrix p = gram / sigma2;
    p.diagonal() += gamma.cwiseInverse().cast<cplx>();
    out.Sigma = hermitian_inverse(0.5 * (p + p.adjoint()));
    out.mu = out.Sigma * (theta.adjoint() * y) / sigma2;
  }
  out.Sigma = 0.5 * (out.Sigma + out.Sigma.adjoint());
  return out;
}

StructuredEStep estep_update(const CVector& y, const CMatrix& theta, const RVector& gamma, double sigma2) {
  if (theta.rows() < theta.cols()) return estep_update(y, theta, CMatrix(), gamma, sigma2);
  return estep_update(y, theta, theta.adjoint() * theta, gamma, sigma2);
}

ElboGradients elbo_gradients(const CVector& mu, const CMatrix& sigma, const RVector& gamma, const CVector& y,
                             const CMatrix& theta, double sigma2) {
  check_shapes(y, theta, gamma);
  check_positive(gamma, sigma2);
  const CMatrix gram = theta.adjoint() * theta;
  ElboGradients g;
  g.grad_mu = -(2.0 / sigma2) * (gram * mu - theta.adjoint() * y) - 2.0 * gamma.cwiseInverse().cwiseProduct(mu);
  g.grad_Sigma = -gram / sigma2 + hermitian_inverse(0.5 * (sigma + sigma.adjoint()));
  g.grad_Sigma.diagonal() -= gamma.cwiseInverse().cast<cplx>();
  return g;
}

SmsblResult run_smsbl(const MeasurementSet& meas, const SolverOptions& opts, const IterationObserver& observer) {
  detail::VemResult r = detail::run_vem(meas, opts, detail::EStepKind::kStructured, detail::PriorKind::kCoupled,
                                        observer);
  SmsblResult out;
  out.H_hat = r.mu;
  out.U_hat = r.prior.U_hat;
  out.posterior.mu = std::move(r.mu);
  out.posterior.blocks = std::move(r.sigma);
  out.prior = std::move(r.prior);
  out.trace = std::move(r.trace);
  return out;
}

SmsblResult run_smsbl(const MeasurementSet& meas, const ScenarioConfig& cfg) {
  return run_smsbl(meas, SolverOptions::from(cfg));
}

}  // namespace rissbl
