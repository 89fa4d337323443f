#include "fracseg/synthesis.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <tuple>

#include "fracseg/error.hpp"

namespace fracseg {

void validate(const FractalParams& p) {
  if (!(p.H > 0.0 && p.H < 1.0)) throw ParameterError("H must lie in (0, 1)");
  if (!(p.sigma > 0.0)) throw ParameterError("sigma must be positive");
  if (p.lag < 1) throw ParameterError("increment lag must be >= 1");
  if (p.N < 64 || (p.N & (p.N - 1)) != 0) {
    throw ParameterError("grid side must be a power of two >= 64 (got " + std::to_string(p.N) +
                         ")");
  }
}

double c_of_h(double H, int d) {
  if (!(H > 0.0 && H < 1.0)) throw ParameterError("c_of_h: H must lie in (0, 1)");
  const double pi = std::numbers::pi;
  return std::sqrt(pi) * std::tgamma(H + 0.5) /
         (std::pow(2.0, d / 2.0) * H * std::tgamma(2.0 * H) * std::sin(pi * H) *
          std::tgamma(H + d / 2.0));
}

std::uint64_t region_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double signed_frequency(std::size_t k, std::size_t m) {
  const double ks = k < m / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(m);
  return 2.0 * std::numbers::pi * ks / static_cast<double>(m);
}

// Aliases beyond the explicit square |a_i| <= kAliasRadius, replaced by the
// integral of |2 pi a|^-p over the complement of the square. The f-dependence
// of this remainder is second order and dropped.
double alias_tail(double p) {
  const double pi = std::numbers::pi;
  const double half_width = 2.0 * pi * (kAliasRadius + 0.5);
  // 8 * integral_0^{pi/4} cos^(p-2), midpoint rule.
  const int steps = 2000;
  double angular = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) * (pi / 4.0) / steps;
    angular += std::pow(std::cos(t), p - 2.0);
  }
  angular *= 8.0 * (pi / 4.0) / steps;
  return angular * std::pow(half_width, 2.0 - p) / ((p - 2.0) * 4.0 * pi * pi);
}

// Spectral amplitude on an m x m lattice (row-major, FFT index order).
std::shared_ptr<const std::vector<double>> spectral_amplitude(double H, std::size_t m,
                                                               Spectrum spectrum) {
  static std::mutex cache_mutex;
  static std::map<std::tuple<double, std::size_t, Spectrum>, std::shared_ptr<const std::vector<double>>>
      cache;
  {
    std::lock_guard lock(cache_mutex);
    auto it = cache.find({H, m, spectrum});
    if (it != cache.end()) return it->second;
  }
  auto amp = std::make_shared<std::vector<double>>(m * m, 0.0);
  const double expo = -(H + 1.0);  // half of -(2H + 2), applied to |f|^2
  const double two_pi = 2.0 * std::numbers::pi;
  const double scale = 1.0 / c_of_h(H, 2);
  const int radius = spectrum == Spectrum::Aliased ? kAliasRadius : 0;
  const double tail = spectrum == Spectrum::Aliased ? alias_tail(2.0 * H + 2.0) : 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double fr = signed_frequency(r, m);
    for (std::size_t c = 0; c < m; ++c) {
      if (r == 0 && c == 0) continue;
      const double fc = signed_frequency(c, m);
      double density = tail;
      for (int ar = -radius; ar <= radius; ++ar) {
        const double gr = fr + two_pi * ar;
        for (int ac = -radius; ac <= radius; ++ac) {
          const double gc = fc + two_pi * ac;
          density += std::pow(gr * gr + gc * gc, expo);
        }
      }
      (*amp)[r * m + c] = scale * std::sqrt(density);
    }
  }
  std::lock_guard lock(cache_mutex);
  if (cache.size() > 16) cache.clear();
  cache.emplace(std::make_tuple(H, m, spectrum), amp);
  return amp;
}

struct RawField {
  std::size_t m = 0;
  std::vector<double> values;  // real part of the synthesized periodic field
  std::shared_ptr<const std::vector<double>> amplitude;
};

RawField synthesize_periodic(const FractalParams& p) {
  const double H = p.H;
  const std::size_t n = p.N;
  RawField out;
  out.m = 2 * n;
  const std::size_t m = out.m;
  out.amplitude = spectral_amplitude(H, m, p.spectrum);

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m * m));
  if (!buf) throw Error("fftw_malloc failed");
  for (std::size_t i = 0; i < m * m; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    buf[i][0] = (*out.amplitude)[i] * re;
    buf[i][1] = (*out.amplitude)[i] * im;
  }
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(m), static_cast<int>(m), buf, buf, FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  out.values.resize(m * m);
  for (std::size_t i = 0; i < m * m; ++i) out.values[i] = buf[i][0];
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

// Expected squared modulus of a linear functional of the raw field whose
// frequency response is `response(fr, fc)`.
template <class Response>
double expected_power(const RawField& raw, Response response) {
  const std::size_t m = raw.m;
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double fr = signed_frequency(r, m);
    for (std::size_t c = 0; c < m; ++c) {
      const double a = (*raw.amplitude)[r * m + c];
      total += a * a * std::norm(response(fr, signed_frequency(c, m)));
    }
  }
  return total;
}

}  // namespace

ScalarField synth_fbf(const FractalParams& params) {
  validate(params);
  const RawField raw = synthesize_periodic(params);
  const double d = params.lag;
  const double power = expected_power(raw, [d](double, double fc) {
    return std::polar(1.0, fc * d) - 1.0;
  });
  const double calib = params.sigma * std::pow(d, params.H) / std::sqrt(power);
  const std::size_t n = params.N;
  ScalarField b(n, n);
  const double origin = raw.values[0];
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) b(r, c) = calib * (raw.values[r * raw.m + c] - origin);
  }
  return b;
}

ScalarField synth_y(const FractalParams& params, VarianceMode mode) {
  validate(params);
  const RawField raw = synthesize_periodic(params);
  const double H = params.H;
  const double d = params.lag;
  const auto lag = static_cast<std::size_t>(params.lag);

  // Unit fBf: the sum of the two increments has variance d^2H (4 - 2^H).
  const double power = expected_power(raw, [d](double fr, double fc) {
    return std::polar(1.0, fc * d) + std::polar(1.0, fr * d) - 2.0;
  });
  const double unit = std::sqrt(std::pow(d, 2.0 * H) * (4.0 - std::pow(2.0, H)) / power);
  const double prefactor = params.sigma / (2.0 * std::pow(d, H) * std::sqrt(1.0 - std::pow(2.0, H - 2.0)));

  const std::size_t n = params.N;
  const std::size_t m = raw.m;
  ScalarField y(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double b0 = raw.values[r * m + c];
      const double inc = raw.values[r * m + c + lag] + raw.values[(r + lag) * m + c] - 2.0 * b0;
      y(r, c) = prefactor * unit * inc;
    }
  }
  if (mode == VarianceMode::Exact) {
    double mean = 0.0;
    for (double v : y.values()) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    const double f = params.sigma / std::sqrt(var);
    for (auto& v : y.values()) v = f * (v - mean);
  }
  return y;
}

double y_covariance(double H, double sigma, int lag, double dr, double dc) {
  const double d = lag;
  auto p = [H](double r, double c) { return std::pow(std::hypot(r, c), 2.0 * H); };
  // e1 is horizontal (column) and e2 vertical (row).
  const double sum = p(dr, dc + d) + p(dr, dc - d) + p(dr + d, dc) + p(dr - d, dc) -
                     3.0 * p(dr, dc) - 0.5 * p(dr - d, dc + d) - 0.5 * p(dr + d, dc - d);
  return sigma * sigma * std::pow(d, -2.0 * H) / (4.0 - std::pow(2.0, H)) * sum;
}

ScalarField synth_piecewise(const PiecewiseSpec& spec, VarianceMode mode) {
  if (spec.regions.empty()) throw ConfigError("piecewise spec has no regions");
  const std::size_t n = spec.regions.front().N;
  if (spec.mask.rows != n || spec.mask.cols != n || spec.mask.labels.size() != n * n) {
    throw ConfigError("piecewise mask does not match the region grid size");
  }
  for (const auto& r : spec.regions) {
    if (r.N != n) throw ConfigError("all regions must share the grid size");
  }
  for (auto label : spec.mask.labels) {
    if (label >= spec.regions.size()) throw ConfigError("mask label has no matching region");
  }
  ScalarField x(n, n);
  for (std::size_t m = 0; m < spec.regions.size(); ++m) {
    const ScalarField y = synth_y(spec.regions[m], mode);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (spec.mask.labels[i] == m) x[i] = y[i];
    }
  }
  return x;
}

Ellipse default_ellipse(std::size_t N) {
  const double n = static_cast<double>(N);
  return Ellipse{0.5 * n, 0.5 * n, 0.22 * n, 0.30 * n};
}

LabelMap ellipse_mask(std::size_t N, const Ellipse& e) {
  const double n = static_cast<double>(N);
  if (e.semi_rows < 0.0 || e.semi_cols < 0.0) throw ConfigError("ellipse semi-axes must be >= 0");
  if (e.center_row - e.semi_rows < 0.0 || e.center_row + e.semi_rows > n ||
      e.center_col - e.semi_cols < 0.0 || e.center_col + e.semi_cols > n) {
    throw ConfigError("ellipse exceeds the grid");
  }
  LabelMap mask(N, N);
  if (e.semi_rows == 0.0 || e.semi_cols == 0.0) return mask;
  for (std::size_t r = 0; r < N; ++r) {
    const double y = (static_cast<double>(r) + 0.5 - e.center_row) / e.semi_rows;
    for (std::size_t c = 0; c < N; ++c) {
      const double x = (static_cast<double>(c) + 0.5 - e.center_col) / e.semi_cols;
      if (x * x + y * y <= 1.0) mask(r, c) = 1;
    }
  }
  return mask;
}

LabelMap ellipse_mask(std::size_t N) { return ellipse_mask(N, default_ellipse(N)); }

}  // namespace fracseg
