#include "rissbl/baselines.hpp"

#include <limits>

#include "rissbl/errors.hpp"

namespace rissbl {

BaselineResult vanilla_sbl(const MeasurementSet& meas, const SolverOptions& opts) {
  detail::VemResult r =
      detail::run_vem(meas, opts, detail::EStepKind::kStructured, detail::PriorKind::kIndependent);
  BaselineResult out;
  out.H_hat = std::move(r.mu);
  out.iters = r.trace.iters;
  out.converged = r.trace.converged;
  return out;
}

BaselineResult vanilla_sbl(const MeasurementSet& meas, const ScenarioConfig& cfg) {
  return vanilla_sbl(meas, SolverOptions::from(cfg));
}

double oracle_prior_variance(const CMatrix& h_true) {
  double acc = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index j = 0; j < h_true.cols(); ++j) {
    for (Eigen::Index i = 0; i < h_true.rows(); ++i) {
      if (h_true(i, j) != cplx(0.0, 0.0)) {
        acc += std::norm(h_true(i, j));
        ++count;
      }
    }
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

BaselineResult oracle_mmse(const MeasurementSet& meas, const SupportMatrix& u_true, double prior_variance) {
  const CMatrix& theta = meas.Theta_tilde;
  if (u_true.rows() != theta.cols() || u_true.cols() != meas.Y_tilde.cols()) {
    throw DomainError("oracle_mmse: support shape mismatch");
  }
  BaselineResult out;
  out.H_hat = CMatrix::Zero(theta.cols(), meas.Y_tilde.cols());
  out.U_hat = u_true;
  out.iters = 1;
  for (Eigen::Index m = 0; m < u_true.cols(); ++m) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index n = 0; n < u_true.rows(); ++n) {
      if (u_true(n, m)) s.push_back(n);
    }
    if (s.empty()) continue;
    if (static_cast<Eigen::Index>(s.size()) > theta.rows()) {
      out.warnings.push_back("oracle_mmse: column " + std::to_string(m) + " support of size " +
                             std::to_string(s.size()) + " exceeds " + std::to_string(theta.rows()) +
                             " observations");
    }
    const CMatrix ts = theta(Eigen::all, s);
    const CVector rhs = ts.adjoint() * meas.Y_tilde.col(m);
    CMatrix p = ts.adjoint() * ts;
    if (prior_variance > 0.0 && meas.sigma2 > 0.0) {
      p.diagonal().array() += meas.sigma2 / prior_variance;
      out.H_hat(s, m) = hermitian_solve(0.5 * (p + p.adjoint()), rhs);
    } else {
      // Noiseless or flat prior: least squares on the support.
      out.H_hat(s, m) = ts.colPivHouseholderQr().solve(meas.Y_tilde.col(m));
    }
  }
  return out;
}

BaselineResult oracle_mmse(const MeasurementSet& meas, const GroundTruth& gt) {
  return oracle_mmse(meas, gt.U_true, oracle_prior_variance(gt.H_tilde));
}

BaselineResult omp(const MeasurementSet& meas, int sparsity_k) {
  const CMatrix& theta = meas.Theta_tilde;
  if (sparsity_k < 1) throw ConfigError("omp: sparsity must be >= 1");
  if (sparsity_k > theta.rows()) throw ConfigError("omp: sparsity exceeds the number of observations");
  const RVector col_norm = theta.colwise().norm().transpose();
  BaselineResult out;
  out.H_hat = CMatrix::Zero(theta.cols(), meas.Y_tilde.cols());
  out.U_hat = SupportMatrix::Zero(theta.cols(), meas.Y_tilde.cols());
  out.iters = sparsity_k;
  for (Eigen::Index m = 0; m < meas.Y_tilde.cols(); ++m) {
    const CVector y = meas.Y_tilde.col(m);
    const double stop = 1e-13 * std::max(y.norm(), std::numeric_limits<double>::min());
    std::vector<Eigen::Index> s;
    std::vector<bool> used(theta.cols(), false);
    CVector resid = y;
    CVector coef;
    for (int it = 0; it < sparsity_k && resid.norm() > stop; ++it) {
      const CVector corr = theta.adjoint() * resid;
      Eigen::Index best = -1;
      double best_val = -1.0;
      for (Eigen::Index n = 0; n < theta.cols(); ++n) {
        if (used[n] || col_norm(n) == 0.0) continue;
        const double v = std::abs(corr(n)) / col_norm(n);
        if (v > best_val) {
          best_val = v;
          best = n;
        }
      }
      if (best < 0) break;
      used[best] = true;
      s.push_back(best);
      const CMatrix ts = theta(Eigen::all, s);
      coef = ts.colPivHouseholderQr().solve(y);
      resid = y - ts * coef;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      out.H_hat(s[i], m) = coef(static_cast<Eigen::Index>(i));
      out.U_hat(s[i], m) = 1;
    }
  }
  return out;
}

BaselineResult save_variant(const MeasurementSet& meas, const SolverOptions& opts, const IterationObserver& observer) {
  detail::VemResult r =
      detail::run_vem(meas, opts, detail::EStepKind::kCoordinate, detail::PriorKind::kCoupled, observer);
  BaselineResult out;
  out.H_hat = std::move(r.mu);
  out.U_hat = std::move(r.prior.U_hat);
  out.iters = r.trace.iters;
  out.converged = r.trace.converged;
  return out;
}

BaselineResult save_variant(const MeasurementSet& meas, const ScenarioConfig& cfg) {
  return save_variant(meas, SolverOptions::from(cfg));
}

}  // namespace rissbl
