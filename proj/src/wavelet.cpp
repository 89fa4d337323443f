#include "fracseg/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fracseg/error.hpp"

namespace fracseg {

namespace {

// Least asymmetric Daubechies lowpass filters. For 2 and 3 vanishing moments
// the least asymmetric solution coincides with the extremal phase one.
constexpr std::array<double, 2> kHaar{0.7071067811865476, 0.7071067811865476};
constexpr std::array<double, 4> kSym2{-0.12940952255092145, 0.22414386804185735,
                                      0.836516303737469, 0.48296291314469025};
// Closed form for 3 vanishing moments; 4 from a high-precision spectral
// factorization (published tables carry only about 12 correct digits).
constexpr std::array<double, 6> kSym3{0.035226291885709536,  -0.085441273882026662,
                                      -0.13501102001025459,  0.45987750211849157,
                                      0.80689150931109258,   0.33267055295008262};
constexpr std::array<double, 8> kSym4{-0.075765714789502213, -0.029635527646002492,
                                      0.49761866763277499,   0.80373875180513208,
                                      0.29785779560530605,   -0.099219543576633533,
                                      -0.012603967262031304, 0.032223100604051468};

std::vector<double> highpass_from(std::span<const double> h) {
  const std::size_t len = h.size();
  std::vector<double> g(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    g[n] = sign * h[len - 1 - n];
  }
  return g;
}

// One periodized analysis step along a strided line of even length m.
// Filter taps start at 2k - (len/2 - 1) so that output k is centered on
// samples {2k, 2k+1}; otherwise the support drifts forward at every octave.
void analyze_line(const double* in, std::size_t stride, std::size_t m, std::span<const double> h,
                  std::span<const double> g, double* lo, double* hi, std::size_t out_stride) {
  const std::size_t half = m / 2;
  const std::size_t back = m - (h.size() / 2 - 1) % m;
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t n = 0; n < h.size(); ++n) {
      const double v = in[((2 * k + n + back) % m) * stride];
      a += h[n] * v;
      d += g[n] * v;
    }
    lo[k * out_stride] = a;
    hi[k * out_stride] = d;
  }
}

struct Quad {
  ScalarField ll, hl, lh, hh;
};

Quad analyze_level(const ScalarField& x, std::span<const double> h, std::span<const double> g) {
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  const std::size_t hr = rows / 2;
  const std::size_t hc = cols / 2;
  // Filter along each row (horizontal direction).
  ScalarField low(rows, hc), high(rows, hc);
  for (std::size_t r = 0; r < rows; ++r) {
    analyze_line(&x.values()[r * cols], 1, cols, h, g, &low.values()[r * hc],
                 &high.values()[r * hc], 1);
  }
  // Then along each column (vertical direction).
  Quad q{ScalarField(hr, hc), ScalarField(hr, hc), ScalarField(hr, hc), ScalarField(hr, hc)};
  for (std::size_t c = 0; c < hc; ++c) {
    analyze_line(&low.values()[c], hc, rows, h, g, &q.ll.values()[c], &q.lh.values()[c], hc);
    analyze_line(&high.values()[c], hc, rows, h, g, &q.hl.values()[c], &q.hh.values()[c], hc);
  }
  return q;
}

}  // namespace

std::span<const double> scaling_filter(int vanishing_moments) {
  switch (vanishing_moments) {
    case 1: return kHaar;
    case 2: return kSym2;
    case 3: return kSym3;
    case 4: return kSym4;
    default:
      throw ConfigError("unsupported number of vanishing moments: " +
                        std::to_string(vanishing_moments));
  }
}

void validate(const WaveletConfig& cfg, std::size_t rows, std::size_t cols) {
  if (cfg.j1 < 1 || cfg.j2 <= cfg.j1) {
    throw ConfigError("octave range must satisfy 1 <= j1 < j2");
  }
  if (cfg.neighborhood < 0) throw ConfigError("leader neighborhood must be non-negative");
  scaling_filter(cfg.vanishing_moments);
  if (cfg.j2 > 30) throw ConfigError("octave j2 too large");
  const std::size_t block = std::size_t{1} << cfg.j2;
  if (rows % block != 0 || cols % block != 0 || rows / block < 2 || cols / block < 2) {
    throw ConfigError("image of size " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " too small or not divisible for octave j2=" + std::to_string(cfg.j2));
  }
}

double WaveletDecomposition::energy() const {
  double e = norm2(approximation.values());
  e *= e;
  for (const auto& level : details) {
    for (const auto& band : level.bands) {
      const double n = norm2(band.values());
      e += n * n;
    }
  }
  return e;
}

WaveletDecomposition dwt2(const ScalarField& x, const WaveletConfig& cfg) {
  validate(cfg, x.rows(), x.cols());
  const auto h = scaling_filter(cfg.vanishing_moments);
  const auto g = highpass_from(h);
  WaveletDecomposition out;
  ScalarField current = x;
  for (int j = 1; j <= cfg.j2; ++j) {
    Quad q = analyze_level(current, h, g);
    out.details.push_back(DetailBands{{std::move(q.hl), std::move(q.lh), std::move(q.hh)}});
    current = std::move(q.ll);
  }
  out.approximation = std::move(current);
  return out;
}

std::vector<ScalarField> leader_grids(const WaveletDecomposition& dwt, const WaveletConfig& cfg) {
  if (dwt.octaves() < cfg.j2) throw ConfigError("decomposition does not reach octave j2");
  std::vector<ScalarField> result;
  ScalarField finer_sup;  // supremum over the dyadic cube and all finer octaves
  for (int j = 1; j <= cfg.j2; ++j) {
    const auto& bands = dwt.details[j - 1].bands;
    const std::size_t rows = bands[0].rows();
    const std::size_t cols = bands[0].cols();
    // The leader normalization 2^j |d| applied to L1-normalized coefficients
    // d = 2^-j c reduces to the orthonormal modulus |c|.
    ScalarField sup(rows, cols);
    for (std::size_t i = 0; i < sup.size(); ++i) {
      double m = 0.0;
      for (const auto& b : bands) m = std::max(m, std::abs(b[i]));
      sup[i] = m;
    }
    if (j > 1) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double children = std::max(
              std::max(finer_sup(2 * r, 2 * c), finer_sup(2 * r, 2 * c + 1)),
              std::max(finer_sup(2 * r + 1, 2 * c), finer_sup(2 * r + 1, 2 * c + 1)));
          sup(r, c) = std::max(sup(r, c), children);
        }
      }
    }
    if (j >= cfg.j1) {
      const long w = cfg.neighborhood;
      const long nr = static_cast<long>(rows);
      const long nc = static_cast<long>(cols);
      ScalarField lead(rows, cols);
      for (long r = 0; r < nr; ++r) {
        for (long c = 0; c < nc; ++c) {
          double m = 0.0;
          for (long dr = -w; dr <= w; ++dr) {
            const long rr = ((r + dr) % nr + nr) % nr;
            for (long dc = -w; dc <= w; ++dc) {
              const long cc = ((c + dc) % nc + nc) % nc;
              m = std::max(m, sup(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)));
            }
          }
          lead(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m;
        }
      }
      result.push_back(std::move(lead));
    }
    finer_sup = std::move(sup);
  }
  return result;
}

const ScalarField& LeaderPyramid::at_octave(int j) const {
  for (std::size_t i = 0; i < octaves.size(); ++i) {
    if (octaves[i] == j) return fields[i];
  }
  throw ConfigError("octave " + std::to_string(j) + " not present in pyramid");
}

LeaderPyramid loglead(LeaderPyramid pyramid) {
  if (pyramid.log_domain) return pyramid;
  for (auto& field : pyramid.fields) {
    for (auto& v : field.values()) {
      if (!(v >= kLeaderFloor)) {
        v = kLeaderFloor;
        ++pyramid.clamped;
      }
      v = std::log2(v);
    }
  }
  pyramid.log_domain = true;
  return pyramid;
}

LeaderPyramid leaders(const WaveletDecomposition& dwt, const WaveletConfig& cfg,
                      std::size_t rows, std::size_t cols) {
  validate(cfg, rows, cols);
  auto grids = leader_grids(dwt, cfg);
  LeaderPyramid pyr;
  for (int j = cfg.j1; j <= cfg.j2; ++j) {
    const ScalarField& g = grids[static_cast<std::size_t>(j - cfg.j1)];
    if (g.rows() << j != rows || g.cols() << j != cols) {
      throw ConfigError("leader grid does not match the requested pixel grid");
    }
    ScalarField up(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) up(r, c) = g(r >> j, c >> j);
    }
    pyr.octaves.push_back(j);
    pyr.fields.push_back(std::move(up));
  }
  return loglead(std::move(pyr));
}

LeaderPyramid analyze(const ScalarField& x, const WaveletConfig& cfg) {
  return leaders(dwt2(x, cfg), cfg, x.rows(), x.cols());
}

}  // namespace fracseg
