#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fracseg/grid.hpp"

namespace fracseg {

/// Leaders below this value are clamped before taking log2.
inline constexpr double kLeaderFloor = 1e-300;

struct WaveletConfig {
  int vanishing_moments = 3;  // least asymmetric Daubechies, 1..4 supported
  int j1 = 2;
  int j2 = 5;
  int neighborhood = 1;  // leader neighborhood half-width in cells (1 -> 3x3)
};

/// Throws ConfigError unless 1 <= j1 < j2 and a rows x cols image can be
/// decomposed down to octave j2 with at least two coefficients per side.
void validate(const WaveletConfig& cfg, std::size_t rows, std::size_t cols);

/// Orthonormal lowpass analysis filter with the given number of vanishing moments.
std::span<const double> scaling_filter(int vanishing_moments);

struct DetailBands {
  // Orthonormal coefficients of the three orientations at one octave:
  // (row-high/col-low, row-low/col-high, row-high/col-high).
  std::array<ScalarField, 3> bands;
};

struct WaveletDecomposition {
  std::vector<DetailBands> details;  // details[j-1] holds octave j
  ScalarField approximation;         // coarsest lowpass band

  int octaves() const { return static_cast<int>(details.size()); }
  double energy() const;
};

/// Separable periodized 2D DWT down to octave cfg.j2.
WaveletDecomposition dwt2(const ScalarField& x, const WaveletConfig& cfg);

/// Per-octave leader grids (linear domain) at their native resolution,
/// octaves cfg.j1..cfg.j2. Neighborhoods wrap periodically.
std::vector<ScalarField> leader_grids(const WaveletDecomposition& dwt, const WaveletConfig& cfg);

struct LeaderPyramid {
  std::vector<int> octaves;
  std::vector<ScalarField> fields;  // one pixel-grid field per octave
  bool log_domain = false;
  std::size_t clamped = 0;  // number of values raised to kLeaderFloor

  std::size_t rows() const { return fields.empty() ? 0 : fields.front().rows(); }
  std::size_t cols() const { return fields.empty() ? 0 : fields.front().cols(); }
  const ScalarField& at_octave(int j) const;
};

/// Leader pyramid in the log2 domain, upsampled to the pixel grid by block
/// replication.
LeaderPyramid leaders(const WaveletDecomposition& dwt, const WaveletConfig& cfg,
                      std::size_t rows, std::size_t cols);

/// Converts a linear-domain pyramid to log2 (clamping at kLeaderFloor); a
/// pyramid already in the log domain is returned unchanged.
LeaderPyramid loglead(LeaderPyramid pyramid);

/// dwt2 followed by leaders.
LeaderPyramid analyze(const ScalarField& x, const WaveletConfig& cfg);

}  // namespace fracseg
