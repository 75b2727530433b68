#include "rissbl/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rissbl/errors.hpp"

namespace rissbl {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  put_u64(os, bits);
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ConfigError("container: truncated stream");
  return to_little(v);
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

CMatrix scalar(double v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

void write_container(std::ostream& os, const Magic& magic, const std::vector<CMatrix>& matrices) {
  os.write(magic.data(), magic.size());
  put_u64(os, kContainerVersion);
  put_u64(os, matrices.size());
  for (const CMatrix& m : matrices) {
    put_u64(os, static_cast<std::uint64_t>(m.rows()));
    put_u64(os, static_cast<std::uint64_t>(m.cols()));
  }
  for (const CMatrix& m : matrices) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        put_f64(os, m(i, j).real());
        put_f64(os, m(i, j).imag());
      }
    }
  }
  if (!os) throw ConfigError("container: write failed");
}

std::vector<CMatrix> read_container(std::istream& is, const Magic& expected) {
  Magic magic{};
  if (!is.read(magic.data(), magic.size())) throw ConfigError("container: truncated header");
  if (magic != expected) throw ConfigError("container: bad magic");
  if (get_u64(is) != kContainerVersion) throw ConfigError("container: unsupported version");
  const std::uint64_t count = get_u64(is);
  if (count > (1u << 20)) throw ConfigError("container: implausible matrix count");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> dims(count);
  for (auto& [r, c] : dims) {
    r = get_u64(is);
    c = get_u64(is);
    if (r > (1u << 24) || c > (1u << 24)) throw ConfigError("container: implausible dimensions");
  }
  std::vector<CMatrix> out;
  out.reserve(count);
  for (const auto& [r, c] : dims) {
    CMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        m(i, j) = {re, im};
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

void save_ground_truth(const std::string& path, const GroundTruth& gt) {
  std::vector<CMatrix> mats{gt.H_tilde, gt.U_true.cast<double>().cast<cplx>()};
  for (const CMatrix& h : gt.H_physical_per_ue) mats.push_back(h);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  write_container(os, kGroundTruthMagic, mats);
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  std::vector<CMatrix> mats = read_container(is, kGroundTruthMagic);
  if (mats.size() < 2) throw ConfigError("container: ground truth needs at least two matrices");
  GroundTruth gt;
  gt.H_tilde = std::move(mats[0]);
  gt.U_true = mats[1].real().array().round().cast<int>().matrix();
  gt.H_physical_per_ue.assign(std::make_move_iterator(mats.begin() + 2), std::make_move_iterator(mats.end()));
  const Eigen::Index k = static_cast<Eigen::Index>(gt.H_physical_per_ue.size());
  if (k > 0 && gt.H_tilde.rows() % k == 0) {
    const Eigen::Index n = gt.H_tilde.rows() / k;
    for (Eigen::Index m = 0; m < gt.U_true.cols(); ++m) {
      if (gt.U_true.col(m).any()) gt.column_support.push_back(static_cast<int>(m));
    }
    for (int m : gt.column_support) {
      std::vector<int> common;
      for (Eigen::Index i = 0; i < n; ++i) {
        bool all = true;
        for (Eigen::Index u = 0; u < k && all; ++u) all = gt.U_true(u * n + i, m) != 0;
        if (all) common.push_back(static_cast<int>(i));
      }
      gt.row_supports.push_back(std::move(common));
    }
  }
  return gt;
}

void save_measurements(const std::string& path, const MeasurementSet& meas) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  write_container(os, kMeasurementMagic,
                  {meas.Y_tilde, meas.Theta_tilde, scalar(meas.sigma2), scalar(meas.blocks)});
}

MeasurementSet load_measurements(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  std::vector<CMatrix> mats = read_container(is, kMeasurementMagic);
  if (mats.size() != 4 || mats[2].size() != 1 || mats[3].size() != 1) {
    throw ConfigError("container: malformed measurement set");
  }
  return make_measurement_set(std::move(mats[0]), std::move(mats[1]), mats[2](0, 0).real(),
                              static_cast<int>(mats[3](0, 0).real()), /*allow_noiseless=*/true);
}

}  // namespace rissbl
