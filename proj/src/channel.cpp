#include "rissbl/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rissbl/errors.hpp"

namespace rissbl {

double ScenarioConfig::sigma2() const { return std::pow(10.0, -snr_db / 10.0); }

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid scenario: " + msg); };
  if (M1 < 1 || M2 < 1 || N1 < 1 || N2 < 1 || K < 1 || Q < 1) fail("all dimensions must be >= 1");
  if (L_C < 1 || L_R_k < 1 || L_R < 1) fail("path counts must be >= 1");
  if (L_R > L_R_k) fail("L_R must not exceed L_R_k");
  if (L_R_k > N()) fail("L_R_k must not exceed N");
  if (L_C > std::min(M(), N())) fail("L_C must not exceed min(M, N)");
  if (!(epsilon_fa > 0.0 && epsilon_fa < 1.0)) fail("epsilon_fa must lie in (0, 1)");
  if (t_max < 1) fail("t_max must be >= 1");
  if (!(eta >= 0.0)) fail("eta must be >= 0");
  if (std::isnan(snr_db)) fail("snr_db is NaN");
  if (!(d_over_lambda > 0.0)) fail("d_over_lambda must be positive");
  if (coherence_symbols < Q) fail("coherence_symbols must be >= Q");
}

MeasurementSet make_measurement_set(CMatrix y_tilde, CMatrix theta_tilde, double sigma2, int blocks,
                                    bool allow_noiseless) {
  if (blocks < 1) throw ConfigError("measurement set: blocks must be >= 1");
  if (y_tilde.rows() != theta_tilde.rows()) throw ConfigError("measurement set: Y and Theta row counts differ");
  if (theta_tilde.rows() % blocks != 0 || theta_tilde.cols() % blocks != 0) {
    throw ConfigError("measurement set: Theta is not divisible into the requested blocks");
  }
  if (allow_noiseless ? !(sigma2 >= 0.0) : !(sigma2 > 0.0)) {
    throw ConfigError("measurement set: noise variance must be positive");
  }
  if (!y_tilde.allFinite() || !theta_tilde.allFinite()) throw ConfigError("measurement set: non-finite entries");
  MeasurementSet out{std::move(y_tilde), std::move(theta_tilde), sigma2, blocks};
  const Eigen::Index br = out.block_rows(), bc = out.block_cols();
  for (int i = 0; i < blocks; ++i) {
    for (int j = 0; j < blocks; ++j) {
      if (i != j && !out.Theta_tilde.block(i * br, j * bc, br, bc).isZero(0.0)) {
        throw ConfigError("measurement set: Theta is not block diagonal");
      }
    }
  }
  return out;
}

double virtual_angle(int index, int size) {
  const double u = static_cast<double>(index) / size;
  return u < 0.5 ? u : u - 1.0;
}

CVector steering_vector_virtual(double u1, double u2, int n1, int n2) {
  CVector out(n1 * n2);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n1 * n2));
  for (int a = 0; a < n1; ++a) {
    for (int b = 0; b < n2; ++b) {
      out(a * n2 + b) = std::polar(norm, -2.0 * M_PI * (u1 * a + u2 * b));
    }
  }
  return out;
}

CVector steering_vector_upa(double theta, double psi, int n1, int n2, double d_over_lambda) {
  const double s = std::sin(theta);
  return steering_vector_virtual(d_over_lambda * s * std::cos(psi), d_over_lambda * s, n1, n2);
}

CMatrix steering_dictionary(int n1, int n2) {
  CMatrix u(n1 * n2, n1 * n2);
  for (int i2 = 0; i2 < n2; ++i2) {
    for (int i1 = 0; i1 < n1; ++i1) {
      u.col(i1 + n1 * i2) = steering_vector_virtual(virtual_angle(i1, n1), virtual_angle(i2, n2), n1, n2);
    }
  }
  return u;
}

Dictionaries build_dictionaries(const ScenarioConfig& cfg) {
  return {steering_dictionary(cfg.M1, cfg.M2), steering_dictionary(cfg.N1, cfg.N2)};
}

int add_grid_index(int a, int b, int n1, int n2) {
  const int i1 = (a % n1 + b % n1) % n1;
  const int i2 = (a / n1 + b / n1) % n2;
  return i1 + n1 * i2;
}

CMatrix effective_phase_matrix(const CMatrix& pilots, const CMatrix& u_n) {
  return (u_n.transpose() * pilots).adjoint();
}

CMatrix joint_phase_matrix(const CMatrix& block, int k) {
  CMatrix out = CMatrix::Zero(block.rows() * k, block.cols() * k);
  for (int i = 0; i < k; ++i) out.block(i * block.rows(), i * block.cols(), block.rows(), block.cols()) = block;
  return out;
}

CMatrix physical_to_vad(const CMatrix& h_physical, const Dictionaries& dict) {
  return dict.U_N.transpose() * h_physical.adjoint() * dict.U_M;
}

CMatrix vad_to_physical(const CMatrix& h_vad, const Dictionaries& dict) {
  return dict.U_M * h_vad.adjoint() * dict.U_N.transpose();
}

CMatrix ue_block(const CMatrix& joint, int k, int n) { return joint.middleRows(static_cast<Eigen::Index>(k) * n, n); }

GroundTruth generate_channels(const ScenarioConfig& cfg, Philox4x32& rng) {
  cfg.validate();
  const int m = cfg.M(), n = cfg.N(), k_ues = cfg.K;
  if (static_cast<long>(cfg.L_C) * cfg.L_R_k > static_cast<long>(n) * m) {
    throw ConfigError("infeasible support: L_C * L_R_k exceeds the N x M grid");
  }
  const Dictionaries dict = build_dictionaries(cfg);

  // BS-RIS paths: distinct AoA grid points (the common column support).
  const std::vector<int> bs_index = sample_without_replacement(rng, m, cfg.L_C);
  std::vector<int> ris_index(cfg.L_C);
  std::vector<cplx> gain_g(cfg.L_C);
  for (int l = 0; l < cfg.L_C; ++l) {
    ris_index[l] = static_cast<int>(rng.below(n));
    gain_g[l] = rng.complex_normal();
  }

  // RIS-UE paths: L_R shared grid points plus L_R_k - L_R UE-specific ones.
  const std::vector<int> shared = sample_without_replacement(rng, n, cfg.L_R);
  std::vector<int> pool;
  for (int i = 0; i < n; ++i) {
    if (std::find(shared.begin(), shared.end(), i) == shared.end()) pool.push_back(i);
  }
  const std::size_t specific = static_cast<std::size_t>(cfg.L_R_k - cfg.L_R);
  std::vector<std::vector<int>> ue_paths(k_ues, shared);
  if (pool.size() >= specific * k_ues) {
    const std::vector<int> drawn = sample_without_replacement(rng, pool, specific * k_ues);
    for (int k = 0; k < k_ues; ++k) {
      ue_paths[k].insert(ue_paths[k].end(), drawn.begin() + k * specific, drawn.begin() + (k + 1) * specific);
    }
  } else {
    for (int k = 0; k < k_ues; ++k) {
      const std::vector<int> drawn = sample_without_replacement(rng, pool, specific);
      ue_paths[k].insert(ue_paths[k].end(), drawn.begin(), drawn.end());
    }
  }

  CMatrix g = CMatrix::Zero(m, n);
  for (int l = 0; l < cfg.L_C; ++l) {
    g += gain_g[l] * dict.U_M.col(bs_index[l]) * dict.U_N.col(ris_index[l]).transpose();
  }
  g *= std::sqrt(static_cast<double>(m) * n / cfg.L_C);

  GroundTruth gt;
  gt.H_tilde = CMatrix::Zero(static_cast<Eigen::Index>(n) * k_ues, m);
  gt.U_true = SupportMatrix::Zero(static_cast<Eigen::Index>(n) * k_ues, m);
  gt.column_support = bs_index;
  std::sort(gt.column_support.begin(), gt.column_support.end());

  for (int k = 0; k < k_ues; ++k) {
    CVector h_rk = CVector::Zero(n);
    for (int idx : ue_paths[k]) h_rk += rng.complex_normal() * dict.U_N.col(idx);
    h_rk *= std::sqrt(static_cast<double>(n) / cfg.L_R_k);

    CMatrix h_phys = g * h_rk.asDiagonal();
    CMatrix h_vad = physical_to_vad(h_phys, dict);

    SupportMatrix mask = SupportMatrix::Zero(n, m);
    for (int l = 0; l < cfg.L_C; ++l) {
      for (int idx : ue_paths[k]) mask(add_grid_index(ris_index[l], idx, cfg.N1, cfg.N2), bs_index[l]) = 1;
    }
    // Off-support entries are round-off only; make the sparsity exact.
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!mask(i, j)) h_vad(i, j) = 0.0;
      }
    }
    gt.H_tilde.middleRows(static_cast<Eigen::Index>(k) * n, n) = h_vad;
    gt.U_true.middleRows(static_cast<Eigen::Index>(k) * n, n) = mask;
    gt.H_physical_per_ue.push_back(std::move(h_phys));
  }

  for (int col : gt.column_support) {
    std::vector<int> common;
    for (int i = 0; i < n; ++i) {
      bool all = true;
      for (int k = 0; k < k_ues && all; ++k) all = gt.U_true(static_cast<Eigen::Index>(k) * n + i, col) != 0;
      if (all) common.push_back(i);
    }
    gt.row_supports.push_back(std::move(common));
  }
  return gt;
}

CMatrix generate_pilots(const ScenarioConfig& cfg, Philox4x32& rng) {
  const int n = cfg.N();
  const double v = 1.0 / std::sqrt(static_cast<double>(n));
  CMatrix out(n, cfg.Q);
  for (Eigen::Index q = 0; q < out.cols(); ++q) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, q) = (rng.next_u32() & 1u) ? v : -v;
  }
  return out;
}

MeasurementSet synthesize_measurements(const GroundTruth& gt, const CMatrix& pilots, const ScenarioConfig& cfg,
                                       Philox4x32& rng) {
  const Dictionaries dict = build_dictionaries(cfg);
  const double sigma2 = cfg.sigma2();
  const double noise_scale = std::sqrt(sigma2);
  const int m = cfg.M(), q = cfg.Q;
  CMatrix y_joint(static_cast<Eigen::Index>(q) * cfg.K, m);
  for (int k = 0; k < cfg.K; ++k) {
    CMatrix w(m, q);
    for (Eigen::Index j = 0; j < q; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) w(i, j) = noise_scale * rng.complex_normal();
    }
    const CMatrix y = gt.H_physical_per_ue[k] * pilots + w;
    y_joint.middleRows(static_cast<Eigen::Index>(k) * q, q) = (dict.U_M.adjoint() * y).adjoint();
  }
  CMatrix theta = joint_phase_matrix(effective_phase_matrix(pilots, dict.U_N), cfg.K);
  return make_measurement_set(std::move(y_joint), std::move(theta), sigma2, cfg.K, /*allow_noiseless=*/true);
}

Scenario make_scenario(const ScenarioConfig& cfg, std::uint32_t value_index, std::uint32_t trial) {
  Philox4x32 channel_rng(cfg.seed, substream_id(stream_purpose::kChannel, value_index, trial));
  Philox4x32 pilot_rng(cfg.seed, substream_id(stream_purpose::kPilots, value_index, trial));
  Philox4x32 noise_rng(cfg.seed, substream_id(stream_purpose::kNoise, value_index, trial));
  Scenario s;
  s.cfg = cfg;
  s.truth = generate_channels(cfg, channel_rng);
  s.pilots = generate_pilots(cfg, pilot_rng);
  s.meas = synthesize_measurements(s.truth, s.pilots, cfg, noise_rng);
  return s;
}

}  // namespace rissbl
