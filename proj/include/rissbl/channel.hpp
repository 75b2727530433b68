#pragma once

#include <cstdint>
#include <vector>

#include "rissbl/linalg.hpp"
#include "rissbl/rng.hpp"

namespace rissbl {

using SupportMatrix = Eigen::MatrixXi;

/// Simulation dimensions and estimator knobs. Field names double as the keys of
/// the key=value config format (see config.hpp).
struct ScenarioConfig {
  int M1 = 4;  ///< BS UPA horizontal
  int M2 = 4;  ///< BS UPA vertical
  int N1 = 8;  ///< RIS UPA horizontal
  int N2 = 4;  ///< RIS UPA vertical
  int K = 2;   ///< UEs
  int Q = 40;  ///< pilot slots
  int L_C = 3;
  int L_R_k = 4;
  int L_R = 2;
  double snr_db = 10.0;
  double d_over_lambda = 0.5;
  std::uint64_t seed = 1;
  double epsilon_fa = 0.01;
  int t_max = 200;
  double eta = 1e-4;
  int coherence_symbols = 1000;  ///< T_c for the spectral-efficiency prefactor

  int M() const { return M1 * M2; }
  int N() const { return N1 * N2; }
  int NK() const { return N() * K; }
  int QK() const { return Q * K; }
  /// sigma^2 = 1 / SNR (unit transmit power).
  double sigma2() const;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

struct GroundTruth {
  CMatrix H_tilde;                             ///< NK x M joint VAD channel
  SupportMatrix U_true;                        ///< NK x M, 1 where H_tilde != 0
  std::vector<CMatrix> H_physical_per_ue;      ///< K matrices, M x N
  std::vector<int> column_support;             ///< common nonzero columns, sorted
  std::vector<std::vector<int>> row_supports;  ///< rows (in [0, N)) shared by all UEs, per nonzero column
};

/// Effective joint pilots. `Theta_tilde` is block diagonal with `blocks` equal
/// diagonal blocks; the solvers exploit this, dense callers pass blocks = 1.
struct MeasurementSet {
  CMatrix Y_tilde;      ///< QK x M
  CMatrix Theta_tilde;  ///< QK x NK
  double sigma2 = 1.0;
  int blocks = 1;

  Eigen::Index block_rows() const { return Theta_tilde.rows() / blocks; }
  Eigen::Index block_cols() const { return Theta_tilde.cols() / blocks; }
  auto theta_block(int k) const {
    return Theta_tilde.block(k * block_rows(), k * block_cols(), block_rows(), block_cols());
  }
};

/// Validates shapes, sigma2 > 0 (or == 0 when `allow_noiseless`), and that the
/// off-diagonal blocks of Theta_tilde are zero. Throws ConfigError.
MeasurementSet make_measurement_set(CMatrix y_tilde, CMatrix theta_tilde, double sigma2, int blocks = 1,
                                    bool allow_noiseless = false);

struct Dictionaries {
  CMatrix U_M;
  CMatrix U_N;
};

/// Grid point i of an n-point uniform sine-domain grid, in [-1/2, 1/2).
double virtual_angle(int index, int size);

/// (1/sqrt(n1 n2)) [e^{-j 2 pi u1 n}]_{n<n1} (x) [e^{-j 2 pi u2 n}]_{n<n2}.
CVector steering_vector_virtual(double u1, double u2, int n1, int n2);

/// UPA steering vector at azimuth `theta` and elevation `psi`:
/// u1 = d sin(theta) cos(psi), u2 = d sin(theta).
CVector steering_vector_upa(double theta, double psi, int n1, int n2, double d_over_lambda);

/// n1 n2 x n1 n2 unitary dictionary; column i1 + n1 i2 steers to grid point (i1, i2).
CMatrix steering_dictionary(int n1, int n2);

Dictionaries build_dictionaries(const ScenarioConfig& cfg);

/// Index of the dictionary column equal (up to 1/sqrt(N)) to the elementwise
/// product of columns a and b on an n1 x n2 grid.
int add_grid_index(int a, int b, int n1, int n2);

/// Effective phase matrix (U_N^T Theta)^H, Q x N.
CMatrix effective_phase_matrix(const CMatrix& pilots, const CMatrix& u_n);

/// Block-diagonal lift of a Q x N block to QK x NK.
CMatrix joint_phase_matrix(const CMatrix& block, int k);

CMatrix physical_to_vad(const CMatrix& h_physical, const Dictionaries& dict);
CMatrix vad_to_physical(const CMatrix& h_vad, const Dictionaries& dict);

/// Rows [kN, (k+1)N) of a joint NK x M matrix.
CMatrix ue_block(const CMatrix& joint, int k, int n);

GroundTruth generate_channels(const ScenarioConfig& cfg, Philox4x32& rng);

/// N x Q matrix with entries +-1/sqrt(N), equiprobable.
CMatrix generate_pilots(const ScenarioConfig& cfg, Philox4x32& rng);

/// Draws W^k ~ CN(0, sigma2) at the BS, forms Y^k = H^k Theta + W^k and maps it to
/// the effective domain, stacking the K UEs.
MeasurementSet synthesize_measurements(const GroundTruth& gt, const CMatrix& pilots, const ScenarioConfig& cfg,
                                       Philox4x32& rng);

struct Scenario {
  ScenarioConfig cfg;
  GroundTruth truth;
  CMatrix pilots;
  MeasurementSet meas;
};

/// Channel, pilots and noise drawn from three substreams of cfg.seed tagged
/// with (value_index, trial).
Scenario make_scenario(const ScenarioConfig& cfg, std::uint32_t value_index = 0, std::uint32_t trial = 0);

}  // namespace rissbl
