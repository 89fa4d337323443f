#pragma once

#include <cmath>
#include <random>

#include "fracseg/grid.hpp"
#include "fracseg/wavelet.hpp"

namespace testutil {

inline fracseg::ScalarField random_field(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                         double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  fracseg::ScalarField x(rows, cols);
  for (auto& v : x.values()) v = n(rng);
  return x;
}

inline fracseg::VectorField random_vfield(std::size_t channels, std::size_t rows, std::size_t cols,
                                          std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  fracseg::VectorField y(channels, rows, cols);
  for (auto& v : y.values()) v = n(rng);
  return y;
}

inline double sup_diff(const fracseg::ScalarField& a, const fracseg::ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Log-domain pyramid with random values for octaves j1..j2.
inline fracseg::LeaderPyramid random_pyramid(std::size_t rows, std::size_t cols, int j1, int j2,
                                             std::mt19937_64& rng) {
  fracseg::LeaderPyramid p;
  p.log_domain = true;
  for (int j = j1; j <= j2; ++j) {
    p.octaves.push_back(j);
    p.fields.push_back(random_field(rows, cols, rng, 2.0));
  }
  return p;
}

}  // namespace testutil
