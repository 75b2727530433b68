#include "rissbl/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "rissbl/errors.hpp"

namespace rissbl {
namespace {

void require_hermitian(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols()) throw DomainError(std::string(what) + ": matrix is not square");
  if (!is_hermitian(a, 1e-10)) throw DomainError(std::string(what) + ": matrix is not Hermitian");
}

// Unblocked Cholesky that stops at the first non-positive pivot. Only used to
// name the failing leading minor after Eigen's LLT has already reported failure.
std::ptrdiff_t first_bad_minor(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  CMatrix l = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j).real();
    for (Eigen::Index k = 0; k < j; ++k) pivot -= std::norm(l(j, k));
    if (!(pivot > 0.0)) return j + 1;
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      cplx s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / l(j, j);
    }
  }
  return n;
}

Eigen::LLT<CMatrix> factorize(const CMatrix& a) {
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw SingularMatrixError(first_bad_minor(a));
  return llt;
}

void require_positive(const RVector& gamma, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("noise variance must be positive");
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    if (!(gamma(i) > 0.0)) throw DomainError("prior variances must be positive");
  }
}

}  // namespace

bool is_hermitian(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = j; i < a.rows(); ++i) {
      const double scale2 = std::max({1.0, std::norm(a(i, j)), std::norm(a(j, i))});
      if (!(std::norm(a(i, j) - std::conj(a(j, i))) <= tol * tol * scale2)) return false;
    }
  }
  return true;
}

CMatrix hermitian_solve(const CMatrix& a, const CMatrix& b) {
  require_hermitian(a, "hermitian_solve");
  if (b.rows() != a.rows()) throw DomainError("hermitian_solve: right-hand side has wrong row count");
  return factorize(a).solve(b);
}

CMatrix hermitian_inverse(const CMatrix& a) {
  require_hermitian(a, "hermitian_inverse");
  return factorize(a).solve(CMatrix::Identity(a.rows(), a.cols()));
}

double log_det_hpd(const CMatrix& a) {
  require_hermitian(a, "log_det_hpd");
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw DomainError("log_det_hpd: matrix is not positive definite");
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) acc += std::log(l(i, i).real());
  return 2.0 * acc;
}

CMatrix woodbury_posterior_covariance(const CMatrix& theta, const RVector& gamma, double sigma2) {
  require_positive(gamma, sigma2);
  if (theta.cols() != gamma.size()) throw DomainError("woodbury: gamma length does not match theta");
  const CMatrix theta_ups = theta * gamma.asDiagonal();  // Theta Y
  CMatrix c = theta_ups * theta.adjoint();
  c.diagonal().array() += sigma2;
  const CMatrix x = factorize(c).solve(theta_ups);  // C^-1 Theta Y
  CMatrix sigma = -(theta_ups.adjoint() * x);
  sigma.diagonal() += gamma.cast<cplx>();
  return 0.5 * (sigma + sigma.adjoint());
}

CMatrix direct_posterior_covariance(const CMatrix& theta, const RVector& gamma, double sigma2) {
  require_positive(gamma, sigma2);
  if (theta.cols() != gamma.size()) throw DomainError("direct covariance: gamma length does not match theta");
  CMatrix precision = theta.adjoint() * theta / sigma2;
  precision.diagonal() += gamma.cwiseInverse().cast<cplx>();
  const CMatrix sigma = factorize(precision).solve(CMatrix::Identity(gamma.size(), gamma.size()));
  return 0.5 * (sigma + sigma.adjoint());
}

CMatrix posterior_covariance(const CMatrix& theta, const RVector& gamma, double sigma2) {
  if (theta.rows() < theta.cols()) return woodbury_posterior_covariance(theta, gamma, sigma2);
  return direct_posterior_covariance(theta, gamma, sigma2);
}

double max_eigenvalue_hermitian(const CMatrix& a) {
  require_hermitian(a, "max_eigenvalue_hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

}  // namespace rissbl
