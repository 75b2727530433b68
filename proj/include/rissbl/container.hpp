#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rissbl/channel.hpp"

namespace rissbl {

/// Binary matrix container.
///
/// Layout (all integers little-endian u64):
///   magic[16] | version | n_matrices | (rows, cols) x n_matrices | payload
/// The payload stores each matrix in turn, row-major, as interleaved
/// little-endian IEEE-754 doubles (re, im). Real quantities (sigma2, support
/// masks) are stored as complex matrices with zero imaginary part.
using Magic = std::array<char, 16>;

inline constexpr Magic kGroundTruthMagic = {'R', 'I', 'S', 'S', 'B', 'L', '_', 'G',
                                            'T', 'R', 'U', 'T', 'H', '_', 'V', '1'};
inline constexpr Magic kMeasurementMagic = {'R', 'I', 'S', 'S', 'B', 'L', '_', 'M',
                                            'E', 'A', 'S', 'S', 'E', 'T', '_', '1'};
inline constexpr std::uint64_t kContainerVersion = 1;

void write_container(std::ostream& os, const Magic& magic, const std::vector<CMatrix>& matrices);
/// Throws ConfigError on a magic/version mismatch or truncated stream.
std::vector<CMatrix> read_container(std::istream& is, const Magic& expected);

/// Matrices: H_tilde, U_true, then H_physical_per_ue[0..K).
void save_ground_truth(const std::string& path, const GroundTruth& gt);
GroundTruth load_ground_truth(const std::string& path);

/// Matrices: Y_tilde, Theta_tilde, [sigma2] (1x1), [blocks] (1x1).
void save_measurements(const std::string& path, const MeasurementSet& meas);
MeasurementSet load_measurements(const std::string& path);

}  // namespace rissbl
