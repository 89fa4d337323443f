#pragma once

// Least-squares log-log regression term
//   Phi(v, h) = 1/2 sum_j || v + j h - log2 L_j ||^2
// and everything derived from it: the regression statistics (S, T), the
// matrix J, per-pixel linear regression, prox, strong convexity constant
// and Fenchel conjugate.

#include <array>

#include "fracseg/grid.hpp"
#include "fracseg/wavelet.hpp"

namespace fracseg {

/// Symmetric 2x2 matrix [[a, b], [b, c]].
struct Sym2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double det() const { return a * c - b * b; }
  double min_eigenvalue() const;
  double max_eigenvalue() const;
  Sym2 inverse() const;
  std::array<double, 2> apply(double x, double y) const { return {a * x + b * y, b * x + c * y}; }
};

struct RegressionSystem {
  int j1 = 0;
  int j2 = 0;
  double R0 = 0.0, R1 = 0.0, R2 = 0.0;  // sum_j j^m over j1..j2
  Sym2 J;
  Sym2 J_inv;
  double mu = 0.0;           // smallest eigenvalue of J
  double J_inv_norm = 0.0;   // spectral norm of J^-1, equals 1/mu
};

RegressionSystem build_system(int j1, int j2);

struct RegressionData {
  ScalarField S;  // sum_j log2 L_j
  ScalarField T;  // sum_j j log2 L_j
  double log_sq_sum = 0.0;  // sum_j sum_n (log2 L_{j,n})^2
};

struct EstimatePair {
  ScalarField v;
  ScalarField h;
};

/// Throws ConfigError unless the log-domain pyramid holds exactly octaves j1..j2.
RegressionData regression_stats(const LeaderPyramid& pyr, const RegressionSystem& sys);

EstimatePair linreg(const RegressionData& data, const RegressionSystem& sys);

double phi(const EstimatePair& x, const LeaderPyramid& pyr, const RegressionSystem& sys);

/// Phi evaluated from the sufficient statistics (identical value, O(pixels)).
double phi(const EstimatePair& x, const RegressionData& data, const RegressionSystem& sys);

EstimatePair grad_phi(const EstimatePair& x, const RegressionData& data,
                      const RegressionSystem& sys);

/// prox of step*Phi: per pixel (I + step J) z = x + step (S, T).
EstimatePair prox_phi(const EstimatePair& x, double step, const RegressionData& data,
                      const RegressionSystem& sys);

/// Fenchel conjugate of Phi, including its additive constant.
double phi_conj(const EstimatePair& y, const RegressionData& data, const RegressionSystem& sys);

/// The constant term of phi_conj (its value at y = 0).
double phi_conj_constant(const RegressionData& data, const RegressionSystem& sys);

}  // namespace fracseg
