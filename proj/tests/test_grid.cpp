#include <doctest.h>

#include <cmath>
#include <random>

#include "fracseg/error.hpp"
#include "fracseg/grid.hpp"
#include "helpers.hpp"

using namespace fracseg;

TEST_CASE("grad of a constant field is zero") {
  ScalarField x(5, 7, 7.0);
  const VectorField g = grad(x);
  for (double v : g.values()) CHECK(v == 0.0);
}

TEST_CASE("grad on a 2x2 field") {
  ScalarField x(2, 2, std::vector<double>{0, 1, 2, 3});
  const VectorField g = grad(x);
  CHECK(g.at(0, 0, 0) == 1.0);
  CHECK(g.at(0, 0, 1) == 0.0);
  CHECK(g.at(0, 1, 0) == 1.0);
  CHECK(g.at(0, 1, 1) == 0.0);
  CHECK(g.at(1, 0, 0) == 2.0);
  CHECK(g.at(1, 0, 1) == 2.0);
  CHECK(g.at(1, 1, 0) == 0.0);
  CHECK(g.at(1, 1, 1) == 0.0);
}

TEST_CASE("grad norm bound on random fields") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const ScalarField x = testutil::random_field(64, 64, rng);
    const VectorField g = grad(x);
    CHECK(norm2(g.values()) <= op_norm_grad() * norm2(x.values()));
  }
}

TEST_CASE("adjoint identity") {
  std::mt19937_64 rng(5);
  SUBCASE("20 pairs at 16x16") {
    for (int k = 0; k < 20; ++k) {
      const ScalarField x = testutil::random_field(16, 16, rng);
      const VectorField y = testutil::random_vfield(2, 16, 16, rng);
      const double lhs = inner(grad(x).values(), y.values());
      const double rhs = inner(x.values(), grad_adjoint(y).values());
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), 1.0));
    }
  }
  SUBCASE("non-square sizes down to 2x2") {
    for (auto [r, c] : {std::pair{2, 2}, {2, 9}, {13, 3}, {31, 17}}) {
      const ScalarField x = testutil::random_field(r, c, rng);
      const VectorField y = testutil::random_vfield(2, r, c, rng);
      const double lhs = inner(grad(x).values(), y.values());
      const double rhs = inner(x.values(), grad_adjoint(y).values());
      CHECK(std::abs(lhs - rhs) <= 1e-10 * norm2(x.values()) * norm2(y.values()));
    }
  }
}

TEST_CASE("grad_adjoint edge cases") {
  const ScalarField z = grad_adjoint(VectorField(2, 6, 6));
  for (double v : z.values()) CHECK(v == 0.0);
  const ScalarField c = grad_adjoint(grad(ScalarField(6, 6, 3.5)));
  for (double v : c.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(grad_adjoint(VectorField(4, 3, 3)), ConfigError);
}

TEST_CASE("norm21") {
  CHECK(norm21(VectorField(2, 4, 4)) == 0.0);
  VectorField y(2, 3, 3);
  y.at(0, 1, 2) = 3.0;
  y.at(1, 1, 2) = 4.0;
  CHECK(norm21(y) == doctest::Approx(5.0).epsilon(1e-15));
  std::mt19937_64 rng(9);
  const VectorField r = testutil::random_vfield(2, 8, 8, rng);
  CHECK(norm21(r) >= norm2(r.values()));
}

TEST_CASE("prox_conj_norm21 projects onto the ball") {
  VectorField y(2, 1, 1);
  y.at(0, 0, 0) = 3.0;
  y.at(1, 0, 0) = 4.0;
  const VectorField p = prox_conj_norm21(y, 1.0);
  CHECK(p.at(0, 0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p.at(1, 0, 0) == doctest::Approx(0.8).epsilon(1e-15));

  std::mt19937_64 rng(11);
  const VectorField inside = testutil::random_vfield(2, 8, 8, rng, 0.01);
  const VectorField same = prox_conj_norm21(inside, 10.0);
  for (std::size_t i = 0; i < same.values().size(); ++i) CHECK(same.values()[i] == inside.values()[i]);

  const VectorField big = testutil::random_vfield(4, 8, 8, rng, 3.0);
  const VectorField once = prox_conj_norm21(big, 0.7);
  const VectorField twice = prox_conj_norm21(once, 0.7);
  // Rounding can leave a projected vector a hair outside the ball.
  for (std::size_t i = 0; i < once.values().size(); ++i) {
    CHECK(twice.values()[i] == doctest::Approx(once.values()[i]).epsilon(1e-15));
  }
  for (std::size_t p = 0; p < once.pixels(); ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += once.channel(c)[p] * once.channel(c)[p];
    CHECK(std::sqrt(s) <= 0.7 + 1e-12);
  }

  CHECK_THROWS_AS(prox_conj_norm21(big, 0.0), ParameterError);
  CHECK_THROWS_AS(prox_conj_norm21(big, -1.0), ParameterError);
}

TEST_CASE("Moreau decomposition matches vector soft-thresholding") {
  std::mt19937_64 rng(13);
  const double lambda = 0.8;
  const VectorField y = testutil::random_vfield(2, 10, 10, rng);
  const VectorField p = prox_conj_norm21(y, lambda);
  for (std::size_t i = 0; i < y.pixels(); ++i) {
    const double a = y.channel(0)[i], b = y.channel(1)[i];
    const double n = std::hypot(a, b);
    const double shrink = n > lambda ? 1.0 - lambda / n : 0.0;
    CHECK(std::abs((a - p.channel(0)[i]) - shrink * a) <= 1e-12);
    CHECK(std::abs((b - p.channel(1)[i]) - shrink * b) <= 1e-12);
  }
}

TEST_CASE("operator norm of the gradient") {
  CHECK(op_norm_grad() == doctest::Approx(2.8284271247461903).epsilon(1e-15));
  const double big = power_iteration_norm(128, 128, 200);
  CHECK(big <= op_norm_grad());
  CHECK(big >= 2.8);
  CHECK(power_iteration_norm(8, 8, 200) <= op_norm_grad());
}

TEST_CASE("field construction") {
  CHECK_THROWS_AS(ScalarField(2, 2, std::vector<double>{1, 2, 3}), ConfigError);
  ScalarField x(2, 2);
  CHECK(x.all_finite());
  x[1] = std::nan("");
  CHECK_FALSE(x.all_finite());
  LabelMap m(3, 3);
  m(1, 1) = 1;
  CHECK(m.count(1) == 1);
  CHECK(m.count(0) == 8);
}
