#pragma once

// Piecewise homogeneous fractal textures with known ground truth.
//
// A fractional Brownian field B is drawn by spectral synthesis on a 2N x 2N
// periodic grid (then cropped), with amplitude |f|^-(H+1) / C(H) on the
// frequency lattice f = 2 pi k / 2N, k in [-N, N)^2; the DC bin is zero.
// Spectrum::Aliased adds the copies f + 2 pi a, |a_i| <= kAliasRadius, plus an
// integral for the rest, so that lattice samples carry the covariance of the
// continuous field. A final lattice calibration makes
// E[(B_{n+d e1} - B_n)^2] = Sigma^2 d^2H exactly for either spectrum.
//
// The texture Y is the normalized sum of horizontal and vertical increments
//   Y_n = Sigma / (2 d^H sqrt(1 - 2^(H-2))) (B_{n+d e1} + B_{n+d e2} - 2 B_n)
// computed from a unit fBf, so that E[Y_n^2] = Sigma^2.

#include <cstdint>
#include <vector>

#include "fracseg/grid.hpp"

namespace fracseg {

inline constexpr int kAliasRadius = 3;

enum class Spectrum {
  Lattice,  // kernel on the principal frequency band only
  Aliased,  // point samples of the continuous field
};

struct FractalParams {
  double H = 0.5;
  double sigma = 1.0;  // standard deviation of Y
  std::uint64_t seed = 0;
  std::size_t N = 256;
  int lag = 1;
  Spectrum spectrum = Spectrum::Lattice;
};

/// Throws ParameterError unless 0 < H < 1, sigma > 0, lag >= 1 and N is a
/// power of two >= 64.
void validate(const FractalParams& p);

enum class VarianceMode {
  Exact,  // each field is affinely rescaled so its sample mean is 0 and std is sigma
  Raw,    // spectral synthesis only; E[Y^2] = sigma^2 holds in expectation
};

/// Normalizing constant of the harmonizable fBf representation in dimension d.
double c_of_h(double H, int d = 2);

/// N x N fBf with B at the origin pixel equal to 0.
ScalarField synth_fbf(const FractalParams& params);

ScalarField synth_y(const FractalParams& params, VarianceMode mode = VarianceMode::Exact);

/// Closed-form covariance E[Y_{n+dn} Y_n] of the increment field.
double y_covariance(double H, double sigma, int lag, double dr, double dc);

struct PiecewiseSpec {
  LabelMap mask;  // value m selects regions[m]
  std::vector<FractalParams> regions;
};

/// One independent Y per region (each with its own seed), copied per mask.
ScalarField synth_piecewise(const PiecewiseSpec& spec, VarianceMode mode = VarianceMode::Exact);

/// Splitmix64 stream derivation: seed for region `index` under `master`.
std::uint64_t region_seed(std::uint64_t master, std::uint64_t index);

struct Ellipse {
  double center_row = 0.0;
  double center_col = 0.0;
  double semi_rows = 0.0;  // vertical semi-axis in pixels
  double semi_cols = 0.0;  // horizontal semi-axis in pixels
};

/// Default ellipse: centered, semi-axes (0.30 N horizontal, 0.22 N vertical).
Ellipse default_ellipse(std::size_t N);

/// Pixel (r, c) is in region 1 iff its center (r + 1/2, c + 1/2) lies inside
/// the ellipse. Throws ConfigError if the ellipse leaves the grid.
LabelMap ellipse_mask(std::size_t N, const Ellipse& e);
LabelMap ellipse_mask(std::size_t N);

}  // namespace fracseg
