#include "rissbl/vem_common.hpp"

#include <cmath>
#include <limits>

#include "rissbl/errors.hpp"

namespace rissbl {

SolverOptions SolverOptions::from(const ScenarioConfig& cfg) {
  SolverOptions o;
  o.epsilon_fa = cfg.epsilon_fa;
  o.t_max = cfg.t_max;
  o.eta = cfg.eta;
  return o;
}

void SolverOptions::validate() const {
  if (!(epsilon_fa > 0.0 && epsilon_fa < 1.0)) throw ConfigError("epsilon_fa must lie in (0, 1)");
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
  if (!(c > 0.0) || !(d > 0.0)) throw ConfigError("hyperprior c, d must be positive");
}

RMatrix second_moments(const CMatrix& mu, const RMatrix& tau) { return mu.cwiseAbs2() + tau; }

Eigen::Matrix2Xd mstep_precision(const SupportMatrix& u_hat, const RMatrix& e, double c, double d,
                                 PrecisionRule rule) {
  if (u_hat.rows() != e.rows() || u_hat.cols() != e.cols()) throw DomainError("mstep_precision: shape mismatch");
  Eigen::Matrix2Xd a(2, e.cols());
  for (Eigen::Index m = 0; m < e.cols(); ++m) {
    double s_nz = 0.0, s_z = 0.0;
    double n_nz = 0.0, n_z = 0.0;
    for (Eigen::Index n = 0; n < e.rows(); ++n) {
      if (u_hat(n, m)) {
        s_nz += e(n, m);
        n_nz += 1.0;
      } else {
        s_z += e(n, m);
        n_z += 1.0;
      }
    }
    if (rule == PrecisionRule::kLowerBound) {
      a(0, m) = c / (s_nz + d);
      a(1, m) = c / (s_z + d);
    } else {
      a(0, m) = (c + n_nz) / (s_nz + d);
      a(1, m) = (c + n_z) / (s_z + d);
    }
  }
  return a;
}

Eigen::Matrix2Xd mstep_precision(const SupportMatrix& u_hat, const CMatrix& mu, const RMatrix& tau, double c,
                                 double d, PrecisionRule rule) {
  return mstep_precision(u_hat, second_moments(mu, tau), c, d, rule);
}

std::array<PrecisionInterval, 2> precision_interval(const SupportMatrix& u_hat, const RMatrix& e, Eigen::Index m,
                                                    double c, double d) {
  double s_nz = 0.0, s_z = 0.0, n_nz = 0.0, n_z = 0.0;
  for (Eigen::Index n = 0; n < e.rows(); ++n) {
    if (u_hat(n, m)) {
      s_nz += e(n, m);
      n_nz += 1.0;
    } else {
      s_z += e(n, m);
      n_z += 1.0;
    }
  }
  return {PrecisionInterval{c / (s_nz + d), (c + n_nz) / (s_nz + d)},
          PrecisionInterval{c / (s_z + d), (c + n_z) / (s_z + d)}};
}

double inverse_gaussian_tail(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("inverse_gaussian_tail: p must lie in (0, 1)");
  // Acklam's rational approximation of the normal quantile at 1 - p, then one
  // Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double cc[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                  -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double dd[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                  3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  const double lower = p;  // quantile of the lower tail; Q^-1(p) = -Phi^-1(p)
  double x;
  if (lower < p_low) {
    const double q = std::sqrt(-2.0 * std::log(lower));
    x = (((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (lower <= 1.0 - p_low) {
    const double q = lower - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - lower));
    x = -(((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    const double err = 0.5 * std::erfc(-x / M_SQRT2) - lower;
    const double u = err * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return -x;
}

double llrt_threshold(double epsilon_fa) {
  const double q = inverse_gaussian_tail(epsilon_fa / 2.0);
  return q * q;
}

namespace {

CMatrix middle_matrix(const CMatrix& theta, const RVector& gamma, double sigma2) {
  CMatrix c = theta * gamma.asDiagonal() * theta.adjoint();
  c.diagonal().array() += sigma2;
  return 0.5 * (c + c.adjoint());
}

}  // namespace

double llrt_statistic(const CVector& y, const CMatrix& theta, const RVector& gamma, Eigen::Index n, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("llrt_statistic: sigma2 must be positive");
  if (theta.rows() != y.size() || theta.cols() != gamma.size() || n < 0 || n >= gamma.size()) {
    throw DomainError("llrt_statistic: shape mismatch");
  }
  RVector g = gamma;
  g(n) = 0.0;
  if ((g.array() < 0.0).any()) throw DomainError("llrt_statistic: gamma must be nonnegative");
  const CMatrix c = middle_matrix(theta, g, sigma2);
  CMatrix rhs(y.size(), 2);
  rhs.col(0) = y;
  rhs.col(1) = theta.col(n);
  const CMatrix x = hermitian_solve(c, rhs);
  const cplx s = theta.col(n).dot(x.col(0));
  const double r = theta.col(n).dot(x.col(1)).real();
  if (!(r > 0.0)) return 0.0;
  return std::norm(s) / r;
}

int llrt_support(const CVector& y, const CMatrix& theta, const RVector& gamma_with_hole, Eigen::Index n,
                 double sigma2, double epsilon_fa) {
  return llrt_statistic(y, theta, gamma_with_hole, n, sigma2) >= llrt_threshold(epsilon_fa) ? 1 : 0;
}

Eigen::VectorXi llrt_support_column(const CVector& y, const CMatrix& theta, const RVector& gamma, double sigma2,
                                    double threshold, RVector* statistics) {
  if (!(sigma2 > 0.0)) throw DomainError("llrt_support_column: sigma2 must be positive");
  const Eigen::Index nk = theta.cols();
  // With C = L L^H and W = L^-1 Theta: s = W^H L^-1 y and r_n = ||w_n||^2.
  const CMatrix scaled = theta * gamma.cwiseSqrt().asDiagonal();
  CMatrix c = CMatrix::Identity(theta.rows(), theta.rows()) * sigma2;
  c.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  Eigen::LLT<CMatrix> llt(c);
  if (llt.info() != Eigen::Success) throw DomainError("llrt_support_column: middle matrix is not positive definite");
  const CMatrix w = llt.matrixL().solve(theta);
  const CVector s = w.adjoint() * llt.matrixL().solve(y);
  const RVector r_all = w.colwise().squaredNorm().transpose();
  Eigen::VectorXi out(nk);
  if (statistics) statistics->resize(nk);
  for (Eigen::Index n = 0; n < nk; ++n) {
    const double r = r_all(n);
    const double slack = 1.0 - gamma(n) * r;
    double stat;
    if (!(r > 0.0)) {
      stat = 0.0;
    } else if (slack > 1e-6) {
      stat = std::norm(s(n)) / (r * slack);
    } else {
      stat = llrt_statistic(y, theta, gamma, n, sigma2);
    }
    out(n) = stat >= threshold ? 1 : 0;
    if (statistics) (*statistics)(n) = stat;
  }
  return out;
}

double convergence_delta(const CMatrix& old_mu, const CMatrix& new_mu) {
  if (old_mu.rows() != new_mu.rows() || old_mu.cols() != new_mu.cols()) {
    throw DomainError("convergence_delta: shape mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index m = 0; m < old_mu.cols(); ++m) {
    const double den = old_mu.col(m).norm();
    const double num = (old_mu.col(m) - new_mu.col(m)).norm();
    if (den > 0.0) {
      acc += num / den;
    } else if (num > 0.0) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return acc;
}

}  // namespace rissbl
