#include "fracseg/fidelity.hpp"

#include <cmath>
#include <string>

#include "fracseg/error.hpp"

namespace fracseg {

double Sym2::min_eigenvalue() const {
  const double half_trace = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  // Evaluate the smaller root as det / larger root to avoid cancellation.
  const double big = half_trace + disc;
  return big != 0.0 ? det() / big : half_trace - disc;
}

double Sym2::max_eigenvalue() const {
  return 0.5 * (a + c) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
}

Sym2 Sym2::inverse() const {
  const double d = det();
  if (!(std::abs(d) > 1e-9)) throw ParameterError("singular 2x2 matrix");
  return {c / d, -b / d, a / d};
}

RegressionSystem build_system(int j1, int j2) {
  if (j1 < 1 || j2 <= j1) {
    throw ConfigError("regression octaves must satisfy 1 <= j1 < j2 (got " + std::to_string(j1) +
                      ", " + std::to_string(j2) + ")");
  }
  RegressionSystem sys;
  sys.j1 = j1;
  sys.j2 = j2;
  long r0 = 0, r1 = 0, r2 = 0;
  for (long j = j1; j <= j2; ++j) {
    r0 += 1;
    r1 += j;
    r2 += j * j;
  }
  sys.R0 = static_cast<double>(r0);
  sys.R1 = static_cast<double>(r1);
  sys.R2 = static_cast<double>(r2);
  sys.J = {sys.R0, sys.R1, sys.R2};
  sys.J_inv = sys.J.inverse();
  sys.mu = sys.J.min_eigenvalue();
  sys.J_inv_norm = 1.0 / sys.mu;
  return sys;
}

RegressionData regression_stats(const LeaderPyramid& pyr, const RegressionSystem& sys) {
  if (!pyr.log_domain) throw ConfigError("regression_stats expects a log-domain pyramid");
  const auto expected = static_cast<std::size_t>(sys.j2 - sys.j1 + 1);
  if (pyr.octaves.size() != expected) throw ConfigError("pyramid octave count mismatch");
  for (std::size_t i = 0; i < expected; ++i) {
    if (pyr.octaves[i] != sys.j1 + static_cast<int>(i)) {
      throw ConfigError("pyramid octaves do not match the regression range");
    }
  }
  RegressionData data{ScalarField(pyr.rows(), pyr.cols()), ScalarField(pyr.rows(), pyr.cols()),
                      0.0};
  for (std::size_t i = 0; i < expected; ++i) {
    const double j = pyr.octaves[i];
    const auto& f = pyr.fields[i];
    if (f.rows() != pyr.rows() || f.cols() != pyr.cols()) {
      throw ConfigError("pyramid octaves have inconsistent sizes");
    }
    for (std::size_t n = 0; n < f.size(); ++n) {
      data.S[n] += f[n];
      data.T[n] += j * f[n];
      data.log_sq_sum += f[n] * f[n];
    }
  }
  return data;
}

EstimatePair linreg(const RegressionData& data, const RegressionSystem& sys) {
  EstimatePair x{ScalarField(data.S.rows(), data.S.cols()),
                 ScalarField(data.S.rows(), data.S.cols())};
  for (std::size_t n = 0; n < data.S.size(); ++n) {
    const auto vh = sys.J_inv.apply(data.S[n], data.T[n]);
    x.v[n] = vh[0];
    x.h[n] = vh[1];
  }
  return x;
}

namespace {

void check_dims(const EstimatePair& x, const RegressionData& data) {
  if (!x.v.same_shape(data.S) || !x.h.same_shape(data.S)) {
    throw ConfigError("estimate dimensions do not match the regression data");
  }
}

}  // namespace

double phi(const EstimatePair& x, const LeaderPyramid& pyr, const RegressionSystem& sys) {
  if (!pyr.log_domain) throw ConfigError("phi expects a log-domain pyramid");
  double total = 0.0;
  for (std::size_t i = 0; i < pyr.octaves.size(); ++i) {
    const double j = pyr.octaves[i];
    if (pyr.octaves[i] < sys.j1 || pyr.octaves[i] > sys.j2) continue;
    const auto& f = pyr.fields[i];
    if (!f.same_shape(x.v) || !f.same_shape(x.h)) throw ConfigError("phi: dimension mismatch");
    for (std::size_t n = 0; n < f.size(); ++n) {
      const double r = x.v[n] + j * x.h[n] - f[n];
      total += r * r;
    }
  }
  return 0.5 * total;
}

double phi(const EstimatePair& x, const RegressionData& data, const RegressionSystem& sys) {
  check_dims(x, data);
  // 1/2 x^T J x - (S,T).x + 1/2 sum log^2, per pixel.
  double total = 0.0;
  for (std::size_t n = 0; n < data.S.size(); ++n) {
    const double v = x.v[n];
    const double h = x.h[n];
    total += 0.5 * (sys.R0 * v * v + 2.0 * sys.R1 * v * h + sys.R2 * h * h) -
             (data.S[n] * v + data.T[n] * h);
  }
  return total + 0.5 * data.log_sq_sum;
}

EstimatePair grad_phi(const EstimatePair& x, const RegressionData& data,
                      const RegressionSystem& sys) {
  check_dims(x, data);
  EstimatePair g{ScalarField(x.v.rows(), x.v.cols()), ScalarField(x.v.rows(), x.v.cols())};
  for (std::size_t n = 0; n < data.S.size(); ++n) {
    g.v[n] = sys.R0 * x.v[n] + sys.R1 * x.h[n] - data.S[n];
    g.h[n] = sys.R1 * x.v[n] + sys.R2 * x.h[n] - data.T[n];
  }
  return g;
}

EstimatePair prox_phi(const EstimatePair& x, double step, const RegressionData& data,
                      const RegressionSystem& sys) {
  if (!(step > 0.0)) throw ParameterError("prox_phi: step must be positive");
  check_dims(x, data);
  const Sym2 m{1.0 + step * sys.R0, step * sys.R1, 1.0 + step * sys.R2};
  const Sym2 inv = m.inverse();
  EstimatePair p{ScalarField(x.v.rows(), x.v.cols()), ScalarField(x.v.rows(), x.v.cols())};
  for (std::size_t n = 0; n < data.S.size(); ++n) {
    const auto pq = inv.apply(x.v[n] + step * data.S[n], x.h[n] + step * data.T[n]);
    p.v[n] = pq[0];
    p.h[n] = pq[1];
  }
  return p;
}

double phi_conj_constant(const RegressionData& data, const RegressionSystem& sys) {
  double quad = 0.0;
  for (std::size_t n = 0; n < data.S.size(); ++n) {
    const auto w = sys.J_inv.apply(data.S[n], data.T[n]);
    quad += data.S[n] * w[0] + data.T[n] * w[1];
  }
  return 0.5 * quad - 0.5 * data.log_sq_sum;
}

double phi_conj(const EstimatePair& y, const RegressionData& data, const RegressionSystem& sys) {
  check_dims(y, data);
  double total = 0.0;
  for (std::size_t n = 0; n < data.S.size(); ++n) {
    const auto jy = sys.J_inv.apply(y.v[n], y.h[n]);
    total += 0.5 * (y.v[n] * jy[0] + y.h[n] * jy[1]) + data.S[n] * jy[0] + data.T[n] * jy[1];
  }
  return total + phi_conj_constant(data, sys);
}

}  // namespace fracseg
