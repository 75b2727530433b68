#pragma once

#include "rissbl/channel.hpp"
#include "rissbl/linalg.hpp"

namespace rissbl {

/// Column-wise coupled Gaussian prior with Gamma(c, d) hyperprior on the
/// precisions. Row 0 of A holds alpha^NZ, row 1 alpha^Z, one column per BS beam.
struct PriorState {
  Eigen::Matrix2Xd A;
  SupportMatrix U_hat;  ///< NK x M, entries in {0, 1}
  double c = 1.0;
  double d = 1e-8;

  /// Throws DomainError when a precision or c, d is not positive or U_hat is not binary.
  void validate() const;
};

inline constexpr double kPriorShape = 1.0;
inline constexpr double kPriorRate = 1e-8;
inline constexpr double kInitialVariance = 1e-2;

/// gamma_nm = 1 / (u_nm alpha_m^NZ + (1 - u_nm) alpha_m^Z).
RMatrix assemble_gamma(const PriorState& state);
RMatrix assemble_gamma(const Eigen::Matrix2Xd& a, const SupportMatrix& u);

/// sum_n [-ln(pi gamma_n) - |h_n|^2 / gamma_n]. Throws DomainError for gamma <= 0.
double log_prior_density(const CVector& h_col, const RVector& gamma_col);

/// c = 1, d = 1e-8, U_hat = 0 and both precisions 100, so gamma = 1e-2 everywhere.
PriorState initial_prior(const ScenarioConfig& cfg);
PriorState initial_prior(Eigen::Index rows, Eigen::Index cols);

}  // namespace rissbl
