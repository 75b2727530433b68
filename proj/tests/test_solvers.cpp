#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rissbl/errors.hpp"
#include "rissbl/fmsbl.hpp"
#include "rissbl/smsbl.hpp"
#include "rissbl/vem_common.hpp"
#include "test_util.hpp"

using namespace rissbl;
using namespace testutil;

namespace {

/// Standard normal upper tail from erfc, independent of the library inverse.
double gaussian_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Monte Carlo estimate of E_q[ln p(y, h) - ln q(h)] with q = CN(mu, sigma), returned
/// together with the standard error. Uses the full (undropped) densities.
std::pair<double, double> mc_elbo(Philox4x32& rng, const CVector& mu, const CMatrix& sigma, const RVector& gamma,
                                  const CVector& y, const CMatrix& theta, double sigma2, int samples) {
  const Eigen::Index n = mu.size(), q = y.size();
  const Eigen::LLT<CMatrix> llt(sigma);
  const CMatrix l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().real().array().log().sum();
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    const CVector z = random_cvector(rng, n);
    const CVector h = mu + l * z;
    const double lp_y = -static_cast<double>(q) * std::log(M_PI * sigma2) - (y - theta * h).squaredNorm() / sigma2;
    double lp_h = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) lp_h += -std::log(M_PI * gamma(i)) - std::norm(h(i)) / gamma(i);
    const double lq = -static_cast<double>(n) * std::log(M_PI) - logdet - z.squaredNorm();
    const double v = lp_y + lp_h - lq;
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / samples;
  const double var = sum2 / samples - mean * mean;
  return {mean, std::sqrt(var / samples)};
}

/// Constant dropped from the ELBO expressions: -Q ln(pi sigma2) - sum ln gamma + NK.
double dropped_constant(Eigen::Index q, const RVector& gamma, double sigma2) {
  return -static_cast<double>(q) * std::log(M_PI * sigma2) - gamma.array().log().sum() +
         static_cast<double>(gamma.size());
}

MeasurementSet small_measurements(std::uint32_t trial, double snr_db = 10.0) {
  return make_scenario(small_config(snr_db), 0, trial).meas;
}

/// Noiseless overdetermined instance with a tiny working noise variance.
std::pair<MeasurementSet, CMatrix> noiseless_overdetermined(std::uint32_t trial) {
  ScenarioConfig cfg = small_config();
  cfg.Q = 24;  // per block Q = 24 > N = 8
  cfg.snr_db = std::numeric_limits<double>::infinity();
  const Scenario sc = make_scenario(cfg, 0, trial);
  MeasurementSet meas = sc.meas;
  meas.sigma2 = 1e-10;
  return {meas, sc.truth.H_tilde};
}

}  // namespace

TEST_SUITE("vem_common") {
  TEST_CASE("mstep examples") {
    SupportMatrix u = SupportMatrix::Zero(3, 1);
    RMatrix e = RMatrix::Constant(3, 1, 0.7);
    const Eigen::Matrix2Xd a = mstep_precision(u, e, 1.0, 1e-8);
    CHECK(a(0, 0) == 1e8);
    u << 1, 0, 0;
    e(0, 0) = 1.0;
    const Eigen::Matrix2Xd b = mstep_precision(u, e, 1.0, 1e-8);
    CHECK(b(0, 0) == doctest::Approx(1.0 / (1.0 + 1e-8)).epsilon(1e-15));
    u.setOnes();
    CHECK(mstep_precision(u, e, 1.0, 1e-8)(1, 0) == 1e8);
  }

  TEST_CASE("mstep precisions lie in the admissible interval") {
    Philox4x32 rng(40);
    for (int t = 0; t < 50; ++t) {
      SupportMatrix u(12, 5);
      RMatrix e(12, 5);
      for (Eigen::Index m = 0; m < 5; ++m) {
        for (Eigen::Index n = 0; n < 12; ++n) {
          u(n, m) = static_cast<int>(rng.below(2));
          e(n, m) = 1e-3 + 2.0 * rng.uniform();
        }
      }
      const Eigen::Matrix2Xd lb = mstep_precision(u, e, 1.0, 1e-8, PrecisionRule::kLowerBound);
      const Eigen::Matrix2Xd st = mstep_precision(u, e, 1.0, 1e-8, PrecisionRule::kStationary);
      for (Eigen::Index m = 0; m < 5; ++m) {
        const auto iv = precision_interval(u, e, m, 1.0, 1e-8);
        for (int r = 0; r < 2; ++r) {
          CHECK(lb(r, m) >= iv[r].lower);
          CHECK((lb(r, m) < iv[r].upper || iv[r].lower == iv[r].upper));
          CHECK(st(r, m) >= iv[r].lower);
          CHECK(st(r, m) <= iv[r].upper);
        }
        // Oracle: sum the group second moments directly.
        double s1 = 0.0, s0 = 0.0, n1 = 0.0, n0 = 0.0;
        for (Eigen::Index n = 0; n < 12; ++n) {
          (u(n, m) ? s1 : s0) += e(n, m);
          (u(n, m) ? n1 : n0) += 1.0;
        }
        CHECK(lb(0, m) == doctest::Approx(1.0 / (s1 + 1e-8)).epsilon(1e-12));
        CHECK(st(1, m) == doctest::Approx((1.0 + n0) / (s0 + 1e-8)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("LLRT threshold and inverse Gaussian tail") {
    CHECK(std::abs(llrt_threshold(0.05) - 3.8415) < 1e-3);
    for (double p : {1e-10, 1e-6, 1e-3, 0.005, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97, 0.999}) {
      const double x = inverse_gaussian_tail(p);
      CHECK(std::abs(gaussian_tail(x) - p) <= 1e-9 * p);
    }
    CHECK(inverse_gaussian_tail(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(inverse_gaussian_tail(0.0), DomainError);
    CHECK_THROWS_AS(inverse_gaussian_tail(1.0), DomainError);
  }

  TEST_CASE("LLRT examples") {
    Philox4x32 rng(41);
    const CMatrix theta = random_cmatrix(rng, 6, 8) / std::sqrt(6.0);
    RVector gamma = RVector::Constant(8, 1e-6);
    const CVector y = theta.col(3) * cplx(30.0, -10.0);
    CHECK(llrt_statistic(y, theta, gamma, 3, 0.01) > 100.0 * llrt_threshold(0.01));
    CHECK(llrt_support(y, theta, gamma, 3, 0.01, 0.01) == 1);
    CHECK(llrt_statistic(CVector::Zero(6), theta, gamma, 3, 0.01) == 0.0);
    CHECK(llrt_support(CVector::Zero(6), theta, gamma, 3, 0.01, 0.01) == 0);
  }

  TEST_CASE("LLRT statistic matches the scalar formula with an explicit inverse") {
    Philox4x32 rng(42);
    const CMatrix theta = random_cmatrix(rng, 5, 7);
    const RVector gamma = random_positive(rng, 7, 0.1, 2.0);
    const CVector y = random_cvector(rng, 5);
    for (Eigen::Index n = 0; n < 7; ++n) {
      RVector g = gamma;
      g(n) = 0.0;
      CMatrix c = theta * g.asDiagonal() * theta.adjoint();
      c.diagonal().array() += 0.3;
      const CMatrix ci = lu_inverse(c);
      const cplx num = (theta.col(n).adjoint() * ci * y)(0, 0);
      const double den = (theta.col(n).adjoint() * ci * theta.col(n))(0, 0).real();
      CHECK(llrt_statistic(y, theta, gamma, n, 0.3) == doctest::Approx(std::norm(num) / den).epsilon(1e-10));
    }
  }

  TEST_CASE("column LLRT equals the direct statistic for every index") {
    Philox4x32 rng(43);
    for (int t = 0; t < 20; ++t) {
      const Eigen::Index q = 3 + static_cast<Eigen::Index>(rng.below(10));
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(14));
      const CMatrix theta = random_cmatrix(rng, q, n) / std::sqrt(static_cast<double>(q));
      RVector gamma = random_positive(rng, n, 1e-4, 3.0);
      if (t % 3 == 0) gamma(0) = 1e8;  // strong prior entry exercises the fallback
      const CVector y = random_cvector(rng, q);
      const double sigma2 = 0.05 + rng.uniform();
      RVector stats;
      const Eigen::VectorXi u = llrt_support_column(y, theta, gamma, sigma2, llrt_threshold(0.01), &stats);
      // Both paths factor a matrix of this conditioning; allow round-off at that scale.
      CMatrix c = theta * gamma.asDiagonal() * theta.adjoint();
      c.diagonal().array() += sigma2;
      const RVector ev = c.selfadjointView<Eigen::Lower>().eigenvalues();
      const double tol = 1e-10 + 1e-14 * ev.maxCoeff() / ev.minCoeff();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double direct = llrt_statistic(y, theta, gamma, i, sigma2);
        CHECK(stats(i) == doctest::Approx(direct).epsilon(tol));
        CHECK(u(i) == (direct >= llrt_threshold(0.01) ? 1 : 0));
      }
    }
  }

  TEST_CASE("convergence delta") {
    CMatrix a(2, 2), b(2, 2);
    a << 1.0, 0.0, 0.0, 0.0;
    b = a;
    CHECK(convergence_delta(a, b) == 0.0);
    b(0, 0) = 1.5;
    CHECK(convergence_delta(a, b) == doctest::Approx(0.5));
    b(1, 1) = 1.0;
    CHECK(std::isinf(convergence_delta(a, b)));
  }

  TEST_CASE("solver options validation") {
    SolverOptions o;
    CHECK_NOTHROW(o.validate());
    o.epsilon_fa = 0.0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
    o = SolverOptions{};
    o.t_max = 0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
  }
}

TEST_SUITE("smsbl") {
  TEST_CASE("ELBO zero-operator example") {
    Philox4x32 rng(50);
    const CVector y = random_cvector(rng, 3);
    const double v = elbo_structured(CVector::Zero(4), CMatrix::Identity(4, 4), RVector::Ones(4), y,
                                     CMatrix::Zero(3, 4), 0.5);
    CHECK(v == doctest::Approx(-y.squaredNorm() / 0.5 - 4.0));
    CMatrix bad = CMatrix::Identity(4, 4);
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(elbo_structured(CVector::Zero(4), bad, RVector::Ones(4), y, CMatrix::Zero(3, 4), 0.5),
                    DomainError);
  }

  TEST_CASE("ELBO matches a Monte Carlo expectation") {
    Philox4x32 rng(51);
    for (int t = 0; t < 3; ++t) {
      const CMatrix theta = random_cmatrix(rng, 3, 4);
      const CVector y = random_cvector(rng, 3);
      const RVector gamma = random_positive(rng, 4, 0.3, 2.0);
      const CVector mu = 0.5 * random_cvector(rng, 4);
      const CMatrix sigma = 0.2 * random_hpd(rng, 4, 0.5);
      const double sigma2 = 0.7;
      const double analytic = elbo_structured(mu, sigma, gamma, y, theta, sigma2) + dropped_constant(3, gamma, sigma2);
      const auto [mc, se] = mc_elbo(rng, mu, sigma, gamma, y, theta, sigma2, 100000);
      CHECK(std::abs(mc - analytic) <= 3.0 * se);
    }
  }

  TEST_CASE("E-step examples") {
    Philox4x32 rng(52);
    const CVector y = random_cvector(rng, 5);
    const StructuredEStep s = estep_update(y, CMatrix::Identity(5, 5), RVector::Ones(5), 1.0);
    CHECK(max_abs(s.Sigma - 0.5 * CMatrix::Identity(5, 5)) < 1e-14);
    CHECK(max_abs(s.mu - 0.5 * y) < 1e-14);

    const CMatrix theta = random_cmatrix(rng, 4, 9);
    const CVector y2 = random_cvector(rng, 4);
    const StructuredEStep tiny = estep_update(y2, theta, RVector::Constant(9, 1e-12), 0.1);
    CHECK(tiny.mu.norm() < 1e-6 * y2.norm());
  }

  TEST_CASE("E-step agrees with the explicit inverse on both paths") {
    Philox4x32 rng(53);
    for (int t = 0; t < 20; ++t) {
      const Eigen::Index q = 2 + static_cast<Eigen::Index>(rng.below(12));
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(12));
      const CMatrix theta = random_cmatrix(rng, q, n);
      const RVector gamma = random_positive(rng, n, 0.05, 2.0);
      const CVector y = random_cvector(rng, q);
      const double sigma2 = 0.1 + rng.uniform();
      CMatrix prec = theta.adjoint() * theta / sigma2;
      prec.diagonal().array() += gamma.cwiseInverse().array();
      const CMatrix sigma = lu_inverse(prec);
      const CVector mu = sigma * theta.adjoint() * y / sigma2;
      const StructuredEStep s = estep_update(y, theta, gamma, sigma2);
      CHECK(max_abs(s.Sigma - sigma) < 1e-10);
      CHECK(max_abs(s.mu - mu) < 1e-10);
      CHECK(is_hermitian(s.Sigma, 1e-10));
      CHECK((s.Sigma.diagonal().real().array() > 0.0).all());
    }
  }

  TEST_CASE("gradient examples and finite differences") {
    Philox4x32 rng(54);
    const CVector mu0 = random_cvector(rng, 4);
    const ElboGradients g0 = elbo_gradients(mu0, CMatrix::Identity(4, 4), RVector::Ones(4), CVector::Zero(3),
                                            CMatrix::Zero(3, 4), 1.0);
    CHECK(max_abs(g0.grad_mu + 2.0 * mu0) < 1e-14);

    for (int t = 0; t < 10; ++t) {
      const CMatrix theta = random_cmatrix(rng, 5, 6);
      const CVector y = random_cvector(rng, 5);
      const RVector gamma = random_positive(rng, 6, 0.2, 2.0);
      const CVector mu = random_cvector(rng, 6);
      const CMatrix sigma = random_hpd(rng, 6, 0.5);
      const double sigma2 = 0.4;
      const ElboGradients g = elbo_gradients(mu, sigma, gamma, y, theta, sigma2);
      const double h = 1e-5;
      CVector fd(6);
      for (Eigen::Index n = 0; n < 6; ++n) {
        CVector p = mu, m = mu;
        p(n) += h;
        m(n) -= h;
        const double dre = (elbo_structured(p, sigma, gamma, y, theta, sigma2) -
                            elbo_structured(m, sigma, gamma, y, theta, sigma2)) / (2 * h);
        p = mu;
        m = mu;
        p(n) += cplx(0, h);
        m(n) -= cplx(0, h);
        const double dim = (elbo_structured(p, sigma, gamma, y, theta, sigma2) -
                            elbo_structured(m, sigma, gamma, y, theta, sigma2)) / (2 * h);
        fd(n) = cplx(dre, dim);
      }
      CHECK((fd - g.grad_mu).norm() <= 1e-4 * g.grad_mu.norm());

      // Sigma gradient along a random Hermitian direction D: d/ds ELBO(Sigma + sD) = Re tr(G D).
      const CMatrix d = random_hermitian(rng, 6);
      const double hs = 1e-5;
      const double fds = (elbo_structured(mu, sigma + hs * d, gamma, y, theta, sigma2) -
                          elbo_structured(mu, sigma - hs * d, gamma, y, theta, sigma2)) / (2 * hs);
      const double an = (g.grad_Sigma * d).trace().real();
      CHECK(std::abs(fds - an) <= 1e-4 * std::max(1.0, std::abs(an)));
    }
  }

  TEST_CASE("E-step output is stationary and dominates random probes") {
    Philox4x32 rng(55);
    for (int t = 0; t < 10; ++t) {
      const Eigen::Index q = 3 + static_cast<Eigen::Index>(rng.below(6));
      const CMatrix theta = random_cmatrix(rng, q, 8) / std::sqrt(static_cast<double>(q));
      const CVector y = random_cvector(rng, q);
      const RVector gamma = random_positive(rng, 8, 0.1, 2.0);
      const double sigma2 = 0.3;
      const StructuredEStep s = estep_update(y, theta, gamma, sigma2);
      const ElboGradients g = elbo_gradients(s.mu, s.Sigma, gamma, y, theta, sigma2);
      CHECK(g.grad_mu.cwiseAbs().maxCoeff() < 1e-8);
      CHECK(g.grad_Sigma.cwiseAbs().maxCoeff() < 1e-8);
      const double best = elbo_structured(s.mu, s.Sigma, gamma, y, theta, sigma2);
      for (int probe = 0; probe < 100; ++probe) {
        const double scale = probe < 50 ? 1e-2 : 1.0;
        const CVector mu = s.mu + scale * random_cvector(rng, 8);
        const CMatrix sig = probe % 2 ? CMatrix(s.Sigma + scale * random_hpd(rng, 8, 0.1) * 0.1)
                                      : CMatrix(random_hpd(rng, 8, 0.05));
        CHECK(elbo_structured(mu, sig, gamma, y, theta, sigma2) <= best + 1e-9 * std::abs(best));
      }
      // Ascent direction probe from a random point.
      const CVector mu1 = random_cvector(rng, 8);
      const CMatrix sig1 = random_hpd(rng, 8, 0.3);
      const ElboGradients g1 = elbo_gradients(mu1, sig1, gamma, y, theta, sigma2);
      CHECK(elbo_structured(mu1 + 1e-4 * g1.grad_mu, sig1, gamma, y, theta, sigma2) >
            elbo_structured(mu1, sig1, gamma, y, theta, sigma2));
    }
  }

  TEST_CASE("E-step never decreases the ELBO inside a run") {
    SolverOptions o;
    o.track_elbo = true;
    o.t_max = 40;
    for (std::uint32_t trial = 0; trial < 3; ++trial) {
      const SmsblResult r = run_smsbl(small_measurements(trial), o);
      REQUIRE(r.trace.elbo_per_iter.size() == static_cast<std::size_t>(r.trace.iters));
      for (std::size_t t = 0; t < r.trace.elbo_per_iter.size(); ++t) {
        const RVector& post = r.trace.elbo_per_iter[t];
        const RVector& pre = r.trace.elbo_pre_estep[t];
        for (Eigen::Index m = 0; m < post.size(); ++m) CHECK(post(m) >= pre(m) - 1e-9 * std::abs(pre(m)));
      }
    }
  }

  TEST_CASE("precisions stay in the admissible interval during a run") {
    SolverOptions o;
    o.t_max = 30;
    for (PrecisionRule rule : {PrecisionRule::kLowerBound, PrecisionRule::kStationary}) {
      o.rule = rule;
      int violations = 0;
      run_smsbl(small_measurements(5), o, [&](const IterationView& v) {
        for (Eigen::Index m = 0; m < v.A.cols(); ++m) {
          const auto before = precision_interval(v.U_before, v.second_moment, m, o.c, o.d);
          const auto after = precision_interval(v.U, v.second_moment, m, o.c, o.d);
          for (int r = 0; r < 2; ++r) {
            const bool open = rule == PrecisionRule::kLowerBound;
            // An empty group collapses the interval to the single point c / d.
            auto inside = [&](double a, const PrecisionInterval& iv) {
              if (iv.lower == iv.upper) return a == iv.lower;
              return a >= iv.lower && (open ? a < iv.upper : a <= iv.upper);
            };
            violations += !inside(v.A_before_llrt(r, m), before[r]);
            violations += !inside(v.A(r, m), after[r]);
          }
        }
      });
      CHECK(violations == 0);
    }
  }

  TEST_CASE("columns are processed independently") {
    const MeasurementSet meas = small_measurements(6);
    MeasurementSet swapped = meas;
    const Eigen::Index m = meas.Y_tilde.cols();
    swapped.Y_tilde = meas.Y_tilde.rowwise().reverse();
    SolverOptions o;
    o.eta = 0.0;
    o.t_max = 15;
    const SmsblResult a = run_smsbl(meas, o), b = run_smsbl(swapped, o);
    for (Eigen::Index j = 0; j < m; ++j) {
      CHECK(a.H_hat.col(j) == b.H_hat.col(m - 1 - j));
      CHECK(a.U_hat.col(j) == b.U_hat.col(m - 1 - j));
    }
  }

  TEST_CASE("noiseless overdetermined recovery") {
    for (std::uint32_t trial = 0; trial < 3; ++trial) {
      const auto [meas, h] = noiseless_overdetermined(trial);
      const SmsblResult r = run_smsbl(meas, SolverOptions{});
      CHECK((r.H_hat - h).norm() < 1e-3 * h.norm());
    }
  }

  TEST_CASE("zero measurements give a zero estimate and empty support") {
    const MeasurementSet base = small_measurements(7);
    const MeasurementSet meas =
        make_measurement_set(CMatrix::Zero(base.Y_tilde.rows(), base.Y_tilde.cols()), base.Theta_tilde, 0.1,
                             base.blocks);
    const SmsblResult r = run_smsbl(meas, SolverOptions{});
    CHECK(r.H_hat.isZero(0.0));
    CHECK(r.U_hat.isZero());
  }

  TEST_CASE("posterior covariance blocks are Hermitian with positive diagonal") {
    SolverOptions o;
    o.t_max = 10;
    const SmsblResult r = run_smsbl(small_measurements(8), o);
    for (Eigen::Index m = 0; m < r.H_hat.cols(); ++m) {
      const CMatrix s = r.posterior.covariance(m);
      CHECK(s.rows() == r.H_hat.rows());
      CHECK(is_hermitian(s, 1e-10));
      CHECK((s.diagonal().real().array() > 0.0).all());
    }
  }
}

TEST_SUITE("fmsbl") {
  TEST_CASE("factorized ELBO equals the structured ELBO at a diagonal covariance") {
    Philox4x32 rng(60);
    for (int t = 0; t < 20; ++t) {
      const CMatrix theta = random_cmatrix(rng, 4, 6);
      const CVector y = random_cvector(rng, 4), mu = random_cvector(rng, 6);
      const RVector tau = random_positive(rng, 6, 0.05, 2.0), gamma = random_positive(rng, 6, 0.1, 3.0);
      const double f = elbo_factorized(mu, tau, gamma, y, theta, 0.6);
      const double s = elbo_structured(mu, CMatrix(tau.cast<cplx>().asDiagonal()), gamma, y, theta, 0.6);
      CHECK(f == doctest::Approx(s).epsilon(1e-12));
    }
    const CVector y = random_cvector(rng, 3);
    CHECK(elbo_factorized(CVector::Zero(5), RVector::Ones(5), RVector::Ones(5), y, CMatrix::Zero(3, 5), 2.0) ==
          doctest::Approx(-y.squaredNorm() / 2.0 - 5.0));
  }

  TEST_CASE("factorized ELBO matches a Monte Carlo expectation") {
    Philox4x32 rng(61);
    const CMatrix theta = random_cmatrix(rng, 3, 4);
    const CVector y = random_cvector(rng, 3), mu = 0.3 * random_cvector(rng, 4);
    const RVector tau = random_positive(rng, 4, 0.1, 0.8), gamma = random_positive(rng, 4, 0.5, 2.0);
    const double analytic = elbo_factorized(mu, tau, gamma, y, theta, 0.9) + dropped_constant(3, gamma, 0.9);
    const auto [mc, se] =
        mc_elbo(rng, mu, CMatrix(tau.cast<cplx>().asDiagonal()), gamma, y, theta, 0.9, 100000);
    CHECK(std::abs(mc - analytic) <= 3.0 * se);
  }

  TEST_CASE("majorizer constants") {
    Philox4x32 rng(62);
    const CMatrix theta = random_cmatrix(rng, 6, 9);
    const MajorizerState maj = make_majorizer(theta);
    const CMatrix gram = theta.adjoint() * theta;
    CHECK(maj.L == doctest::Approx(2.0 * gram.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff()));
    CHECK(maj.L >= 2.0 * maj.a.maxCoeff());
    CHECK(max_abs(CMatrix(maj.a.cast<cplx>()) - CMatrix(gram.diagonal())) < 1e-12);
    CHECK((maj.a.array() >= 0.0).all());
  }

  TEST_CASE("majorizer tangency and domination") {
    Philox4x32 rng(63);
    for (int t = 0; t < 10; ++t) {
      const CMatrix theta = random_cmatrix(rng, 5, 8);
      const MajorizerState maj = make_majorizer(theta);
      const CVector y = random_cvector(rng, 5), mu = random_cvector(rng, 8);
      const RVector tau = random_positive(rng, 8, 0.1, 1.0), gamma = random_positive(rng, 8, 0.1, 2.0);
      const double f = elbo_factorized(mu, tau, gamma, y, theta, 0.5);
      CHECK(elbo_majorized(mu, tau, mu, maj.L, gamma, y, theta, 0.5) == doctest::Approx(f).epsilon(1e-13));
      for (int probe = 0; probe < 100; ++probe) {
        const CVector delta = mu + (probe < 50 ? 0.01 : 3.0) * random_cvector(rng, 8);
        CHECK(elbo_majorized(mu, tau, delta, maj.L, gamma, y, theta, 0.5) <= f + 1e-9 * std::abs(f));
      }
    }
    const CVector y = random_cvector(rng, 3), mu = random_cvector(rng, 4), delta = random_cvector(rng, 4);
    const CMatrix zero = CMatrix::Zero(3, 4);
    const double f0 = elbo_factorized(mu, RVector::Ones(4), RVector::Ones(4), y, zero, 1.0);
    CHECK(elbo_majorized(mu, RVector::Ones(4), delta, 0.0, RVector::Ones(4), y, zero, 1.0) == doctest::Approx(f0));
  }

  TEST_CASE("identity operator example") {
    Philox4x32 rng(64);
    const CVector y = random_cvector(rng, 6);
    const CMatrix eye = CMatrix::Identity(6, 6);
    const MajorizerState maj = make_majorizer(eye);
    CVector mu = random_cvector(rng, 6);
    FactorizedEStep s{};
    for (int it = 0; it < 200; ++it) {
      s = fm_estep_update(mu, y, eye, RVector::Ones(6), 1.0, maj);
      mu = s.mu;
    }
    CHECK(max_abs(s.mu - 0.5 * y) < 1e-12);
    CHECK(max_abs(s.mu - estep_update(y, eye, RVector::Ones(6), 1.0).mu) < 1e-12);
    CHECK((s.tau.array() - 0.5).abs().maxCoeff() < 1e-15);
  }

  TEST_CASE("one majorized step increases the factorized ELBO") {
    Philox4x32 rng(65);
    for (int t = 0; t < 30; ++t) {
      const CMatrix theta = random_cmatrix(rng, 4, 7);
      const MajorizerState maj = make_majorizer(theta);
      const CVector y = random_cvector(rng, 4), mu = random_cvector(rng, 7);
      const RVector tau = random_positive(rng, 7, 0.1, 1.0), gamma = random_positive(rng, 7, 0.1, 2.0);
      const FactorizedEStep s = fm_estep_update(mu, y, theta, gamma, 0.4, maj);
      CHECK(elbo_factorized(s.mu, s.tau, gamma, y, theta, 0.4) > elbo_factorized(mu, tau, gamma, y, theta, 0.4));
      // Explicit formula oracle.
      const double l = maj.L;
      const CVector zeta = (l / 2 * mu - theta.adjoint() * (theta * mu - y)) / 0.4;
      for (Eigen::Index n = 0; n < 7; ++n) {
        const double d = 1.0 / (l / (2 * 0.4) + 1.0 / gamma(n));
        CHECK(std::abs(s.mu(n) - d * zeta(n)) < 1e-12 * (1.0 + std::abs(s.mu(n))));
        CHECK(s.tau(n) == doctest::Approx(1.0 / (maj.a(n) / 0.4 + 1.0 / gamma(n))));
      }
    }
  }

  TEST_CASE("majorized and coordinate steps converge to the structured mean") {
    Philox4x32 rng(66);
    for (int t = 0; t < 5; ++t) {
      const Eigen::Index nk = 8 + 8 * (t % 3);  // up to 24
      const CMatrix theta = random_cmatrix(rng, 12, nk) / std::sqrt(12.0);
      const CVector y = random_cvector(rng, 12);
      const RVector gamma = random_positive(rng, nk, 0.2, 1.5);
      const double sigma2 = 0.2;
      const CVector target = estep_update(y, theta, gamma, sigma2).mu;
      const MajorizerState maj = make_majorizer(theta);
      CVector fm = CVector::Zero(nk), sv = CVector::Zero(nk);
      for (int it = 0; it < 20000; ++it) fm = fm_estep_update(fm, y, theta, gamma, sigma2, maj).mu;
      for (int it = 0; it < 5000; ++it) sv = coordinate_estep_update(sv, y, theta, gamma, sigma2).mu;
      CHECK((fm - target).norm() <= 1e-6 * target.norm());
      CHECK((sv - target).norm() <= 1e-6 * target.norm());
      CHECK((sv - fm).norm() <= 1e-5 * fm.norm());
    }
  }

  TEST_CASE("coordinate sweep never decreases the factorized ELBO") {
    Philox4x32 rng(67);
    const CMatrix theta = random_cmatrix(rng, 5, 10);
    const CVector y = random_cvector(rng, 5);
    const RVector gamma = random_positive(rng, 10, 0.1, 2.0);
    CVector mu = random_cvector(rng, 10);
    RVector tau = RVector::Constant(10, 0.3);
    double prev = elbo_factorized(mu, tau, gamma, y, theta, 0.3);
    for (int it = 0; it < 50; ++it) {
      const FactorizedEStep s = coordinate_estep_update(mu, y, theta, gamma, 0.3);
      const double cur = elbo_factorized(s.mu, s.tau, gamma, y, theta, 0.3);
      CHECK(cur >= prev - 1e-9 * std::abs(prev));
      prev = cur;
      mu = s.mu;
      tau = s.tau;
    }
  }

  TEST_CASE("E-step ascent inside a full run") {
    SolverOptions o;
    o.track_elbo = true;
    for (std::uint32_t trial = 0; trial < 3; ++trial) {
      const FmsblResult r = run_fmsbl(small_measurements(trial), o);
      for (std::size_t t = 0; t < r.trace.elbo_per_iter.size(); ++t) {
        const RVector& post = r.trace.elbo_per_iter[t];
        const RVector& pre = r.trace.elbo_pre_estep[t];
        for (Eigen::Index m = 0; m < post.size(); ++m) CHECK(post(m) >= pre(m) - 1e-9 * std::abs(pre(m)));
      }
      CHECK((r.posterior.tau.array() > 0.0).all());
    }
  }

  TEST_CASE("noiseless overdetermined recovery") {
    for (std::uint32_t trial = 0; trial < 3; ++trial) {
      const auto [meas, h] = noiseless_overdetermined(trial);
      const FmsblResult r = run_fmsbl(meas, SolverOptions{});
      CHECK((r.H_hat - h).norm() < 1e-3 * h.norm());
    }
  }

  TEST_CASE("final NMSE close to the structured solver") {
    double gap = 0.0;
    for (std::uint32_t trial = 0; trial < 4; ++trial) {
      const Scenario sc = make_scenario(small_config(10.0), 0, trial);
      const double sm = (run_smsbl(sc.meas, SolverOptions{}).H_hat - sc.truth.H_tilde).squaredNorm();
      const double fm = (run_fmsbl(sc.meas, SolverOptions{}).H_hat - sc.truth.H_tilde).squaredNorm();
      gap += 10.0 * std::log10(fm / sm);
    }
    CHECK(std::abs(gap / 4.0) <= 1.0);
  }
}
