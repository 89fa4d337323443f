#include "fracseg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fracseg/error.hpp"

namespace fracseg {

ScalarField::ScalarField(std::size_t rows, std::size_t cols, double value)
    : rows_(rows), cols_(cols), data_(rows * cols, value) {}

ScalarField::ScalarField(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ConfigError("ScalarField: data size does not match dimensions");
  }
}

bool ScalarField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

VectorField::VectorField(std::size_t channels, std::size_t rows, std::size_t cols, double value)
    : channels_(channels), rows_(rows), cols_(cols), data_(channels * rows * cols, value) {}

bool VectorField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::size_t LabelMap::count(std::uint8_t value) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), value));
}

double op_norm_grad() { return 2.0 * std::sqrt(2.0); }

namespace kernels {

void forward_diff(std::span<const double> x, std::size_t rows, std::size_t cols,
                  double scale, std::span<double> gh, std::span<double> gv) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * cols;
    double* hr = gh.data() + r * cols;
    for (std::size_t c = 0; c + 1 < cols; ++c) hr[c] = scale * (xr[c + 1] - xr[c]);
    hr[cols - 1] = 0.0;
  }
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    const double* xr = x.data() + r * cols;
    const double* xn = xr + cols;
    double* vr = gv.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) vr[c] = scale * (xn[c] - xr[c]);
  }
  std::fill_n(gv.data() + (rows - 1) * cols, cols, 0.0);
}

void forward_diff_adjoint_add(std::span<const double> gh, std::span<const double> gv,
                              std::size_t rows, std::size_t cols, double scale,
                              std::span<double> out) {
  // D^* y = -div y, with the divergence matching the zero last increment.
  for (std::size_t r = 0; r < rows; ++r) {
    const double* hr = gh.data() + r * cols;
    const double* vr = gv.data() + r * cols;
    const double* vp = r > 0 ? vr - cols : nullptr;
    double* o = out.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      double div = 0.0;
      if (c + 1 < cols) div += hr[c];
      if (c > 0) div -= hr[c - 1];
      if (r + 1 < rows) div += vr[c];
      if (vp) div -= vp[c];
      o[c] -= scale * div;
    }
  }
}

void project_ball(std::span<const std::span<double>> channels, double radius) {
  const std::size_t n = channels.front().size();
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& ch : channels) s += ch[i] * ch[i];
    if (s > r2) {
      const double f = radius / std::sqrt(s);
      for (const auto& ch : channels) ch[i] *= f;
    }
  }
}

double pixel_norm_sum(std::span<const std::span<const double>> channels) {
  const std::size_t n = channels.front().size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& ch : channels) s += ch[i] * ch[i];
    total += std::sqrt(s);
  }
  return total;
}

}  // namespace kernels

VectorField grad(const ScalarField& x) {
  VectorField g(2, x.rows(), x.cols());
  kernels::forward_diff(x.values(), x.rows(), x.cols(), 1.0, g.channel(0), g.channel(1));
  return g;
}

ScalarField grad_adjoint(const VectorField& y) {
  if (y.channels() != 2) throw ConfigError("grad_adjoint expects a 2-channel field");
  ScalarField out(y.rows(), y.cols());
  kernels::forward_diff_adjoint_add(y.channel(0), y.channel(1), y.rows(), y.cols(), 1.0,
                                    out.values());
  return out;
}

namespace {

std::vector<std::span<const double>> const_channels(const VectorField& y) {
  std::vector<std::span<const double>> chans;
  for (std::size_t c = 0; c < y.channels(); ++c) chans.push_back(y.channel(c));
  return chans;
}

}  // namespace

double norm21(const VectorField& y) {
  if (y.channels() == 0 || y.pixels() == 0) return 0.0;
  const auto chans = const_channels(y);
  return kernels::pixel_norm_sum(chans);
}

VectorField prox_conj_norm21(const VectorField& y, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("prox_conj_norm21: lambda must be positive");
  VectorField out = y;
  std::vector<std::span<double>> chans;
  for (std::size_t c = 0; c < out.channels(); ++c) chans.push_back(out.channel(c));
  if (!chans.empty() && out.pixels() > 0) kernels::project_ball(chans, lambda);
  return out;
}

double inner(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(inner(a, a)); }

double power_iteration_norm(std::size_t rows, std::size_t cols, int iterations,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ScalarField x(rows, cols);
  for (auto& v : x.values()) v = normal(rng);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nx = norm2(x.values());
    for (auto& v : x.values()) v /= nx;
    ScalarField y = grad_adjoint(grad(x));
    // Rayleigh quotient <x, D*D x> with ||x|| = 1.
    estimate = std::sqrt(std::max(0.0, inner(x.values(), y.values())));
    x = std::move(y);
  }
  return estimate;
}

}  // namespace fracseg
