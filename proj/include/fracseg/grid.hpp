#pragma once

// Discrete gradient on a regular 2D grid, its adjoint, mixed l2,1 norms and
// the per-pixel ball projection shared by every TV solver.
//
// Layout conventions:
//  * ScalarField is row-major, index (row, col) -> row * cols + col.
//  * VectorField stores channels contiguously, channel-major. For a gradient
//    the channel order is (horizontal, vertical); a stacked coupled field is
//    (Dv horizontal, Dv vertical, alpha*Dh horizontal, alpha*Dh vertical).
//  * The gradient uses forward differences with a zero increment on the last
//    column (horizontal channel) and last row (vertical channel).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fracseg {

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(std::size_t rows, std::size_t cols, double value = 0.0);
  ScalarField(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const ScalarField& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class VectorField {
 public:
  VectorField() = default;
  VectorField(std::size_t channels, std::size_t rows, std::size_t cols, double value = 0.0);

  std::size_t channels() const { return channels_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t pixels() const { return rows_ * cols_; }

  std::span<double> channel(std::size_t c) {
    return std::span<double>(data_).subspan(c * pixels(), pixels());
  }
  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * pixels(), pixels());
  }
  double& at(std::size_t c, std::size_t r, std::size_t col) {
    return data_[c * pixels() + r * cols_ + col];
  }
  double at(std::size_t c, std::size_t r, std::size_t col) const {
    return data_[c * pixels() + r * cols_ + col];
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const VectorField& other) const {
    return channels_ == other.channels_ && rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

 private:
  std::size_t channels_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Binary label grid, row-major (0 = region 0, 1 = region 1).
struct LabelMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> labels;

  LabelMap() = default;
  LabelMap(std::size_t r, std::size_t c, std::uint8_t value = 0)
      : rows(r), cols(c), labels(r * c, value) {}

  std::uint8_t operator()(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return labels[r * cols + c]; }
  std::size_t count(std::uint8_t value) const;
  bool operator==(const LabelMap&) const = default;
};

/// Operator norm of the forward-difference gradient (2*sqrt(2)).
double op_norm_grad();

/// Power iteration on D*D for a rows x cols grid; returns an estimate of ||D||.
double power_iteration_norm(std::size_t rows, std::size_t cols, int iterations,
                            std::uint64_t seed = 1);

VectorField grad(const ScalarField& x);
ScalarField grad_adjoint(const VectorField& y);

/// Sum over pixels of the Euclidean norm of the per-pixel C-vector.
double norm21(const VectorField& y);

/// Radial projection of every per-pixel vector onto the ball of radius lambda.
/// This is the proximal operator of the conjugate of lambda*||.||_{2,1}.
VectorField prox_conj_norm21(const VectorField& y, double lambda);

double inner(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

namespace kernels {

// Raw kernels used in the solver hot loops. All spans hold rows*cols values.

/// gh = scale * horizontal increments, gv = scale * vertical increments.
void forward_diff(std::span<const double> x, std::size_t rows, std::size_t cols,
                  double scale, std::span<double> gh, std::span<double> gv);

/// out += scale * D^*(gh, gv).
void forward_diff_adjoint_add(std::span<const double> gh, std::span<const double> gv,
                              std::size_t rows, std::size_t cols, double scale,
                              std::span<double> out);

/// Projects the per-pixel vectors formed by `channels` onto the ball of
/// radius `radius`, in place.
void project_ball(std::span<const std::span<double>> channels, double radius);

/// Sum over pixels of the per-pixel norm of the vector formed by `channels`.
double pixel_norm_sum(std::span<const std::span<const double>> channels);

}  // namespace kernels

}  // namespace fracseg
