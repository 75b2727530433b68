#pragma once

#include <complex>

#include <Eigen/Dense>

namespace rissbl {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Elementwise Hermitian check, |A(i,j) - conj(A(j,i))| <= tol * max(1, |A(i,j)|, |A(j,i)|).
bool is_hermitian(const CMatrix& a, double tol = 1e-10);

/// Solves A X = B for Hermitian positive-definite A.
///
/// Throws DomainError when A is not square/Hermitian within 1e-10 or when the
/// shapes disagree, and SingularMatrixError (carrying the order of the first
/// non-positive leading minor) when A is not positive definite.
CMatrix hermitian_solve(const CMatrix& a, const CMatrix& b);

/// Inverse of a Hermitian positive-definite matrix; same errors as hermitian_solve.
CMatrix hermitian_inverse(const CMatrix& a);

/// ln det A for Hermitian positive-definite A. Throws DomainError otherwise.
double log_det_hpd(const CMatrix& a);

/// Posterior covariance (sigma^-2 Theta^H Theta + diag(gamma)^-1)^-1 evaluated by
/// the Woodbury identity
///   Sigma = Y - Y Theta^H (sigma2 I_Q + Theta Y Theta^H)^-1 Theta Y,  Y = diag(gamma),
/// so only a Q x Q system is factorized. Throws DomainError for gamma <= 0 or sigma2 <= 0.
CMatrix woodbury_posterior_covariance(const CMatrix& theta, const RVector& gamma, double sigma2);

/// Same quantity through the explicit NK x NK inverse.
CMatrix direct_posterior_covariance(const CMatrix& theta, const RVector& gamma, double sigma2);

/// Dispatches to the Woodbury path when Q < NK and to the direct path otherwise.
CMatrix posterior_covariance(const CMatrix& theta, const RVector& gamma, double sigma2);

/// Largest eigenvalue of a Hermitian matrix (relative accuracy ~1e-12).
double max_eigenvalue_hermitian(const CMatrix& a);

}  // namespace rissbl
