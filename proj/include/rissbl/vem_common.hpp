#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rissbl/channel.hpp"
#include "rissbl/linalg.hpp"
#include "rissbl/prior.hpp"

namespace rissbl {

/// How the M-step turns the posterior second moments into precisions.
///
/// For a column with support indicator u and second moments e = |mu|^2 + tau,
/// every maximizer of the expected log prior lies in
///   [c / (sum u e + d), (c + sum u) / (sum u e + d)).
/// kLowerBound returns the left end. kStationary returns the exact stationary
/// point (c + sum u) / (sum u e + d), the right end of that range; it is the
/// solver default because the left end over-shrinks the active entries.
enum class PrecisionRule { kStationary, kLowerBound };

struct SolverOptions {
  double epsilon_fa = 0.01;
  int t_max = 200;
  double eta = 1e-4;
  double c = kPriorShape;
  double d = kPriorRate;
  PrecisionRule rule = PrecisionRule::kStationary;
  bool track_elbo = false;  ///< record per-column ELBO before and after every E-step

  static SolverOptions from(const ScenarioConfig& cfg);
  void validate() const;
};

struct SolverTrace {
  std::vector<RVector> elbo_per_iter;   ///< [t](m): ELBO after the E-step of iteration t
  std::vector<RVector> elbo_pre_estep;  ///< [t](m): ELBO of the previous posterior under the same gamma
  std::vector<double> delta_per_iter;
  int iters = 0;
  bool converged = false;
};

/// Per-UE-block covariances: sigma[m][k] is the N x N block of Sigma_m for UE k.
using CovarianceBlocks = std::vector<std::vector<CMatrix>>;

/// Snapshot handed to an IterationObserver after every iteration.
struct IterationView {
  int t;                              ///< 1-based iteration
  const CMatrix& mu;                  ///< NK x M posterior means
  const RMatrix& tau;                 ///< NK x M posterior marginal variances
  const CovarianceBlocks* sigma;      ///< full covariance blocks (structured E-step only)
  const RMatrix& gamma_estep;         ///< prior variances used by this E-step
  const RMatrix& second_moment;       ///< |mu|^2 + tau
  const Eigen::Matrix2Xd& A_before_llrt;
  const SupportMatrix& U_before;      ///< support used by the first precision update
  const Eigen::Matrix2Xd& A;          ///< precisions after the support update
  const SupportMatrix& U;
  double delta;
};
using IterationObserver = std::function<void(const IterationView&)>;

RMatrix second_moments(const CMatrix& mu, const RMatrix& tau);

/// Per-column precision update. Columns with an empty (full) support get
/// alpha^NZ (alpha^Z) = c / d.
Eigen::Matrix2Xd mstep_precision(const SupportMatrix& u_hat, const RMatrix& second_moment, double c, double d,
                                 PrecisionRule rule = PrecisionRule::kLowerBound);
Eigen::Matrix2Xd mstep_precision(const SupportMatrix& u_hat, const CMatrix& mu, const RMatrix& tau, double c,
                                 double d, PrecisionRule rule = PrecisionRule::kLowerBound);

/// Half-open interval [lower, upper) for one precision.
struct PrecisionInterval {
  double lower;
  double upper;
};
/// {alpha^NZ interval, alpha^Z interval} for column m.
std::array<PrecisionInterval, 2> precision_interval(const SupportMatrix& u_hat, const RMatrix& second_moment,
                                                    Eigen::Index m, double c, double d);

/// Q^-1(p): x with P(Z > x) = p for standard normal Z, p in (0, 1).
double inverse_gaussian_tail(double p);

/// (Q^-1(epsilon / 2))^2.
double llrt_threshold(double epsilon_fa);

/// |theta_n^H C^-1 y|^2 / (theta_n^H C^-1 theta_n) with C = sigma2 I + Theta diag(gamma) Theta^H,
/// where gamma(n) is forced to zero. Computed from scratch.
double llrt_statistic(const CVector& y, const CMatrix& theta, const RVector& gamma, Eigen::Index n, double sigma2);

/// 1 iff llrt_statistic(...) >= llrt_threshold(epsilon_fa).
int llrt_support(const CVector& y, const CMatrix& theta, const RVector& gamma_with_hole, Eigen::Index n,
                 double sigma2, double epsilon_fa);

/// All indices of one column at once from a single factorization of the full
/// C, using stat_n = |s_n|^2 / (r_n (1 - gamma_n r_n)), s = Theta^H C^-1 y,
/// r_n = theta_n^H C^-1 theta_n. Falls back to the direct statistic when
/// 1 - gamma_n r_n is too small to be trusted.
Eigen::VectorXi llrt_support_column(const CVector& y, const CMatrix& theta, const RVector& gamma, double sigma2,
                                    double threshold, RVector* statistics = nullptr);

/// sum_m ||old_m - new_m|| / ||old_m||. A column with a zero old mean
/// contributes 0 if the new mean is also zero and +inf otherwise.
double convergence_delta(const CMatrix& old_mu, const CMatrix& new_mu);

namespace detail {

enum class EStepKind { kStructured, kMajorized, kCoordinate };
enum class PriorKind { kCoupled, kIndependent };

struct VemResult {
  CMatrix mu;
  RMatrix tau;
  CovarianceBlocks sigma;  ///< empty unless kStructured
  PriorState prior;
  RMatrix gamma;           ///< independent-prior variances (kIndependent)
  SolverTrace trace;
};

/// Shared variational EM loop: E-step of the requested kind, precision
/// update, LLRT support update, precision re-estimation under the new support.
/// Throws SolverFailure on non-finite iterates.
VemResult run_vem(const MeasurementSet& meas, const SolverOptions& opts, EStepKind estep,
                  PriorKind prior = PriorKind::kCoupled, const IterationObserver& observer = {});

}  // namespace detail

}  // namespace rissbl
