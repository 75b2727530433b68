#include "rissbl/prior.hpp"

#include <cmath>

#include "rissbl/errors.hpp"

namespace rissbl {

void PriorState::validate() const {
  if (!(c > 0.0) || !(d > 0.0)) throw DomainError("prior: c and d must be positive");
  if (A.cols() != U_hat.cols()) throw DomainError("prior: A and U_hat column counts differ");
  if (!(A.array() > 0.0).all()) throw DomainError("prior: precisions must be positive");
  if (!((U_hat.array() == 0) || (U_hat.array() == 1)).all()) throw DomainError("prior: U_hat must be binary");
}

RMatrix assemble_gamma(const Eigen::Matrix2Xd& a, const SupportMatrix& u) {
  RMatrix gamma(u.rows(), u.cols());
  for (Eigen::Index m = 0; m < u.cols(); ++m) {
    const double v_nz = 1.0 / a(0, m);
    const double v_z = 1.0 / a(1, m);
    for (Eigen::Index n = 0; n < u.rows(); ++n) gamma(n, m) = u(n, m) ? v_nz : v_z;
  }
  return gamma;
}

RMatrix assemble_gamma(const PriorState& state) { return assemble_gamma(state.A, state.U_hat); }

double log_prior_density(const CVector& h_col, const RVector& gamma_col) {
  if (h_col.size() != gamma_col.size()) throw DomainError("log_prior_density: length mismatch");
  if (!(gamma_col.array() > 0.0).all()) throw DomainError("log_prior_density: gamma must be positive");
  double acc = 0.0;
  for (Eigen::Index n = 0; n < h_col.size(); ++n) {
    acc += -std::log(M_PI * gamma_col(n)) - std::norm(h_col(n)) / gamma_col(n);
  }
  return acc;
}

PriorState initial_prior(Eigen::Index rows, Eigen::Index cols) {
  PriorState s;
  s.A = Eigen::Matrix2Xd::Constant(2, cols, 1.0 / kInitialVariance);
  s.U_hat = SupportMatrix::Zero(rows, cols);
  s.c = kPriorShape;
  s.d = kPriorRate;
  return s;
}

PriorState initial_prior(const ScenarioConfig& cfg) { return initial_prior(cfg.NK(), cfg.M()); }

}  // namespace rissbl
