#include <cmath>
#include <limits>

#include "rissbl/errors.hpp"
#include "rissbl/fmsbl.hpp"
#include "rissbl/smsbl.hpp"
#include "rissbl/vem_common.hpp"

namespace rissbl::detail {
namespace {

struct Block {
  CMatrix theta;
  CMatrix gram;
  Eigen::Index row0, col0;
};

}  // namespace

VemResult run_vem(const MeasurementSet& meas, const SolverOptions& opts, EStepKind estep, PriorKind prior_kind,
                  const IterationObserver& observer) {
  opts.validate();
  if (!(meas.sigma2 > 0.0)) throw DomainError("solver: sigma2 must be positive");
  const int kb = meas.blocks;
  const Eigen::Index q = meas.block_rows(), n = meas.block_cols();
  const Eigen::Index nk = meas.Theta_tilde.cols(), m_cols = meas.Y_tilde.cols();
  const double sigma2 = meas.sigma2;

  std::vector<Block> blocks(kb);
  MajorizerState maj;
  maj.a.resize(nk);
  for (int k = 0; k < kb; ++k) {
    blocks[k].theta = meas.theta_block(k);
    blocks[k].row0 = k * q;
    blocks[k].col0 = k * n;
    if (estep == EStepKind::kStructured) blocks[k].gram = blocks[k].theta.adjoint() * blocks[k].theta;
    if (estep == EStepKind::kMajorized) {
      const MajorizerState mk = make_majorizer(blocks[k].theta);
      maj.L = std::max(maj.L, mk.L);
      maj.a.segment(k * n, n) = mk.a;
    }
  }

  VemResult res;
  res.prior = initial_prior(nk, m_cols);
  res.prior.c = opts.c;
  res.prior.d = opts.d;
  res.mu = CMatrix::Zero(nk, m_cols);
  res.tau = RMatrix::Constant(nk, m_cols, kInitialVariance);
  RMatrix gamma = RMatrix::Constant(nk, m_cols, kInitialVariance);
  if (estep == EStepKind::kStructured) {
    res.sigma.assign(m_cols, std::vector<CMatrix>(kb));
    for (auto& col : res.sigma) {
      for (auto& s : col) s = CMatrix::Identity(n, n) * kInitialVariance;
    }
  }
  const double threshold = llrt_threshold(opts.epsilon_fa);

  auto column_elbo = [&](Eigen::Index m) {
    double acc = 0.0;
    for (int k = 0; k < kb; ++k) {
      const Block& b = blocks[k];
      const CVector y = meas.Y_tilde.col(m).segment(b.row0, q);
      const RVector g = gamma.col(m).segment(b.col0, n);
      const CVector mu = res.mu.col(m).segment(b.col0, n);
      if (estep == EStepKind::kStructured) {
        acc += elbo_structured(mu, res.sigma[m][k], g, y, b.theta, b.gram, sigma2);
      } else {
        acc += elbo_factorized(mu, res.tau.col(m).segment(b.col0, n), g, y, b.theta, sigma2);
      }
    }
    return acc;
  };

  for (int t = 1; t <= opts.t_max; ++t) {
    const CMatrix old_mu = res.mu;
    RVector pre(m_cols), post(m_cols);
    if (opts.track_elbo) {
      for (Eigen::Index m = 0; m < m_cols; ++m) pre(m) = column_elbo(m);
    }

    for (Eigen::Index m = 0; m < m_cols; ++m) {
      for (int k = 0; k < kb; ++k) {
        const Block& b = blocks[k];
        const CVector y = meas.Y_tilde.col(m).segment(b.row0, q);
        const RVector g = gamma.col(m).segment(b.col0, n);
        switch (estep) {
          case EStepKind::kStructured: {
            StructuredEStep s = estep_update(y, b.theta, b.gram, g, sigma2);
            res.mu.col(m).segment(b.col0, n) = s.mu;
            res.tau.col(m).segment(b.col0, n) = s.Sigma.diagonal().real();
            res.sigma[m][k] = std::move(s.Sigma);
            break;
          }
          case EStepKind::kMajorized: {
            MajorizerState mk{maj.L, maj.a.segment(b.col0, n)};
            const CVector mu_prev = res.mu.col(m).segment(b.col0, n);
            FactorizedEStep s = fm_estep_update(mu_prev, y, b.theta, g, sigma2, mk);
            res.mu.col(m).segment(b.col0, n) = s.mu;
            res.tau.col(m).segment(b.col0, n) = s.tau;
            break;
          }
          case EStepKind::kCoordinate: {
            const CVector mu_prev = res.mu.col(m).segment(b.col0, n);
            FactorizedEStep s = coordinate_estep_update(mu_prev, y, b.theta, g, sigma2);
            res.mu.col(m).segment(b.col0, n) = s.mu;
            res.tau.col(m).segment(b.col0, n) = s.tau;
            break;
          }
        }
      }
    }

    if (!res.mu.allFinite() || !res.tau.allFinite()) throw SolverFailure("non-finite posterior", t);
    if (opts.track_elbo) {
      for (Eigen::Index m = 0; m < m_cols; ++m) post(m) = column_elbo(m);
      if (!post.allFinite()) throw SolverFailure("non-finite ELBO", t);
      res.trace.elbo_pre_estep.push_back(pre);
      res.trace.elbo_per_iter.push_back(post);
    }

    const RMatrix e = second_moments(res.mu, res.tau);
    RMatrix gamma_next;
    Eigen::Matrix2Xd a_before;
    SupportMatrix u_before;
    if (prior_kind == PriorKind::kCoupled) {
      u_before = res.prior.U_hat;
      a_before = mstep_precision(u_before, e, opts.c, opts.d, opts.rule);
      const RMatrix gamma_llrt = assemble_gamma(a_before, u_before);
      SupportMatrix u_new(nk, m_cols);
      for (Eigen::Index m = 0; m < m_cols; ++m) {
        for (int k = 0; k < kb; ++k) {
          const Block& b = blocks[k];
          u_new.col(m).segment(b.col0, n) =
              llrt_support_column(meas.Y_tilde.col(m).segment(b.row0, q), b.theta,
                                  gamma_llrt.col(m).segment(b.col0, n), sigma2, threshold);
        }
      }
      res.prior.A = mstep_precision(u_new, e, opts.c, opts.d, opts.rule);
      res.prior.U_hat = std::move(u_new);
      gamma_next = assemble_gamma(res.prior);
    } else {
      gamma_next = (e.array() + opts.d) / opts.c;
      a_before = res.prior.A;
      u_before = res.prior.U_hat;
    }
    if (!gamma_next.allFinite() || !(gamma_next.array() > 0.0).all()) {
      throw SolverFailure("degenerate prior variances", t);
    }

    const double delta = convergence_delta(old_mu, res.mu);
    res.trace.delta_per_iter.push_back(delta);
    res.trace.iters = t;
    if (observer) {
      observer(IterationView{t, res.mu, res.tau, estep == EStepKind::kStructured ? &res.sigma : nullptr, gamma, e,
                             a_before, u_before, res.prior.A, res.prior.U_hat, delta});
    }
    gamma = std::move(gamma_next);
    if (delta < opts.eta) {
      res.trace.converged = true;
      break;
    }
  }
  res.gamma = std::move(gamma);
  return res;
}

}  // namespace rissbl::detail
