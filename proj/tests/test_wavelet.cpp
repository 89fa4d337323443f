#include <doctest.h>

#include <cmath>
#include <random>

#include "fracseg/error.hpp"
#include "fracseg/wavelet.hpp"
#include "helpers.hpp"

using namespace fracseg;

namespace {

double total_energy(const ScalarField& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return s;
}

}  // namespace

TEST_CASE("scaling filters are orthonormal with vanishing moments") {
  for (int m = 1; m <= 4; ++m) {
    const auto h = scaling_filter(m);
    double sum = 0.0, sq = 0.0;
    for (double v : h) {
      sum += v;
      sq += v * v;
    }
    CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(sq == doctest::Approx(1.0).epsilon(1e-12));
    // Even shifts are orthogonal.
    for (std::size_t s = 2; s < h.size(); s += 2) {
      double c = 0.0;
      for (std::size_t i = 0; i + s < h.size(); ++i) c += h[i] * h[i + s];
      CHECK(std::abs(c) < 1e-12);
    }
    // Highpass moments 0..m-1 vanish.
    for (int k = 0; k < m; ++k) {
      double mom = 0.0;
      for (std::size_t n = 0; n < h.size(); ++n) {
        const double g = ((n % 2) ? -1.0 : 1.0) * h[h.size() - 1 - n];
        mom += g * std::pow(static_cast<double>(n), k);
      }
      CHECK(std::abs(mom) < 1e-9);
    }
  }
  CHECK_THROWS_AS(scaling_filter(0), ConfigError);
  CHECK_THROWS_AS(scaling_filter(5), ConfigError);
}

TEST_CASE("dwt2 zero and constant images") {
  WaveletConfig cfg;
  const auto zero = dwt2(ScalarField(64, 64), cfg);
  for (const auto& d : zero.details) {
    for (const auto& b : d.bands) {
      for (double v : b.values()) CHECK(v == 0.0);
    }
  }
  const auto cst = dwt2(ScalarField(64, 64, 2.5), cfg);
  for (const auto& d : cst.details) {
    for (const auto& b : d.bands) {
      for (double v : b.values()) CHECK(std::abs(v) < 1e-12);
    }
  }
}

TEST_CASE("Parseval on random 256x256 input") {
  std::mt19937_64 rng(17);
  for (int m = 1; m <= 4; ++m) {
    WaveletConfig cfg;
    cfg.vanishing_moments = m;
    const ScalarField x = testutil::random_field(256, 256, rng);
    const auto d = dwt2(x, cfg);
    CHECK(d.octaves() == cfg.j2);
    const double e = total_energy(x);
    CHECK(std::abs(d.energy() - e) / e < 1e-8);
  }
}

TEST_CASE("configuration validation") {
  WaveletConfig cfg;
  CHECK_NOTHROW(validate(cfg, 64, 64));
  CHECK_THROWS_AS(validate(cfg, 32, 32), ConfigError);  // 32 / 2^5 = 1 coefficient per side
  CHECK_THROWS_AS(validate(cfg, 96, 100), ConfigError);
  WaveletConfig bad;
  bad.j1 = 3;
  bad.j2 = 3;
  CHECK_THROWS_AS(validate(bad, 256, 256), ConfigError);
  bad.j1 = 0;
  bad.j2 = 2;
  CHECK_THROWS_AS(validate(bad, 256, 256), ConfigError);
  CHECK_THROWS_AS(dwt2(ScalarField(16, 16), cfg), ConfigError);
}

TEST_CASE("leaders of a zero image are clamped") {
  WaveletConfig cfg;
  const LeaderPyramid p = analyze(ScalarField(64, 64), cfg);
  CHECK(p.log_domain);
  CHECK(p.octaves == std::vector<int>{2, 3, 4, 5});
  CHECK(p.clamped == 4u * 64 * 64);
  for (const auto& f : p.fields) {
    CHECK(f.rows() == 64);
    for (double v : f.values()) {
      CHECK(std::isfinite(v));
      CHECK(v == doctest::Approx(std::log2(kLeaderFloor)));
    }
  }
  CHECK(std::log2(kLeaderFloor) == doctest::Approx(-996.578).epsilon(1e-5));
}

TEST_CASE("loglead") {
  LeaderPyramid p;
  p.octaves = {2};
  p.fields = {ScalarField(1, 3, std::vector<double>{8.0, 1.0, 0.0})};
  const LeaderPyramid l = loglead(p);
  CHECK(l.log_domain);
  CHECK(l.fields[0][0] == 3.0);
  CHECK(l.fields[0][1] == 0.0);
  CHECK(l.fields[0][2] == doctest::Approx(std::log2(1e-300)));
  CHECK(l.clamped == 1);
  const LeaderPyramid again = loglead(l);
  CHECK(again.fields[0].data() == l.fields[0].data());
}

TEST_CASE("leader properties on random input") {
  std::mt19937_64 rng(19);
  WaveletConfig cfg;
  const ScalarField x = testutil::random_field(128, 128, rng);
  const auto d = dwt2(x, cfg);
  const auto grids = leader_grids(d, cfg);
  REQUIRE(grids.size() == 4);

  SUBCASE("leaders dominate same-scale coefficients in the neighborhood") {
    for (int j = cfg.j1; j <= cfg.j2; ++j) {
      const auto& g = grids[j - cfg.j1];
      const auto& bands = d.details[j - 1].bands;
      const long n = static_cast<long>(g.rows());
      for (long r = 0; r < n; ++r) {
        for (long c = 0; c < n; ++c) {
          for (long dr = -1; dr <= 1; ++dr) {
            for (long dc = -1; dc <= 1; ++dc) {
              const auto rr = static_cast<std::size_t>((r + dr + n) % n);
              const auto cc = static_cast<std::size_t>((c + dc + n) % n);
              for (const auto& b : bands) CHECK(g(r, c) >= std::abs(b(rr, cc)));
            }
          }
        }
      }
    }
  }

  SUBCASE("monotone in coefficient modulus") {
    auto bumped = d;
    bumped.details[0].bands[1](10, 10) = 1e6;
    const auto g2 = leader_grids(bumped, cfg);
    for (std::size_t k = 0; k < grids.size(); ++k) {
      for (std::size_t i = 0; i < grids[k].size(); ++i) CHECK(g2[k][i] >= grids[k][i]);
    }
    // The coefficient at octave 1, cell (10, 10) lies under octave-2 cell (5, 5).
    CHECK(g2[0](5, 5) == 1e6);
    CHECK(g2[0](4, 6) == 1e6);
    CHECK(g2[0](2, 2) < 1e6);
  }

  SUBCASE("larger neighborhoods never decrease a leader") {
    WaveletConfig wide = cfg;
    wide.neighborhood = 2;
    const auto g2 = leader_grids(d, wide);
    for (std::size_t k = 0; k < grids.size(); ++k) {
      for (std::size_t i = 0; i < grids[k].size(); ++i) CHECK(g2[k][i] >= grids[k][i]);
    }
  }
}

TEST_CASE("shift covariance by one dyadic block") {
  WaveletConfig cfg;
  const int j = 3;
  ScalarField a(128, 128), b(128, 128);
  a(60, 60) = 1.0;
  b(60, 60 + (1 << j)) = 1.0;
  const auto ga = leader_grids(dwt2(a, cfg), cfg);
  const auto gb = leader_grids(dwt2(b, cfg), cfg);
  const auto& la = ga[j - cfg.j1];
  const auto& lb = gb[j - cfg.j1];
  for (std::size_t r = 0; r < la.rows(); ++r) {
    for (std::size_t c = 0; c + 1 < la.cols(); ++c) {
      CHECK(lb(r, c + 1) == doctest::Approx(la(r, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("pyramid upsampling by block replication") {
  std::mt19937_64 rng(23);
  WaveletConfig cfg;
  const ScalarField x = testutil::random_field(64, 64, rng);
  const auto d = dwt2(x, cfg);
  const auto grids = leader_grids(d, cfg);
  const LeaderPyramid p = leaders(d, cfg, 64, 64);
  for (int j = cfg.j1; j <= cfg.j2; ++j) {
    const auto& f = p.at_octave(j);
    const auto& g = grids[j - cfg.j1];
    for (std::size_t r = 0; r < 64; ++r) {
      for (std::size_t c = 0; c < 64; ++c) CHECK(f(r, c) == std::log2(g(r >> j, c >> j)));
    }
  }
  CHECK_THROWS_AS(p.at_octave(1), ConfigError);
}
