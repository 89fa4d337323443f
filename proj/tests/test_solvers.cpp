#include <doctest.h>

#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "fracseg/error.hpp"
#include "fracseg/fidelity.hpp"
#include "fracseg/solvers.hpp"
#include "fracseg/synthesis.hpp"
#include "fracseg/wavelet.hpp"
#include "helpers.hpp"

using namespace fracseg;

namespace {

struct Instance {
  RegressionSystem sys;
  RegressionData data;
  EstimatePair lr;
};

// Two-region fractal texture at 64x64 and its regression statistics.
Instance texture_instance(std::uint64_t seed) {
  const std::size_t n = 64;
  FractalParams bg;
  bg.H = 0.5;
  bg.sigma = std::sqrt(0.6);
  bg.N = n;
  bg.seed = region_seed(seed, 0);
  FractalParams fg = bg;
  fg.H = 0.7;
  fg.sigma = std::sqrt(0.7);
  fg.seed = region_seed(seed, 1);
  const ScalarField x = synth_piecewise({ellipse_mask(n), {bg, fg}});
  Instance inst;
  inst.sys = build_system(2, 5);
  inst.data = regression_stats(analyze(x, WaveletConfig{}), inst.sys);
  inst.lr = linreg(inst.data, inst.sys);
  return inst;
}

double total_variation(const ScalarField& x) { return norm21(grad(x)); }

double sup_diff(const std::vector<ScalarField>& a, const std::vector<ScalarField>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, testutil::sup_diff(a[k], b[k]));
  return m;
}

// Strong convexity of the primal: |x - x*|_2 <= sqrt(2 gap / mu).
double distance_bound(const TvProblem& prob, const Solution& s) {
  const double gap = duality_gap(prob, s.primal, s.dual).gap;
  return std::sqrt(2.0 * std::max(gap, 0.0) / prob.mu());
}

}  // namespace

TEST_CASE("engine and problem names") {
  CHECK(parse_engine("fista") == Engine::FISTA);
  CHECK(parse_engine("AcPD") == Engine::AcPD);
  CHECK(parse_engine("DFB") == Engine::DFB);
  CHECK(parse_engine("pd") == Engine::PD);
  CHECK_THROWS_AS(parse_engine("newton"), ConfigError);
  CHECK(parse_problem("T-ROF") == ProblemKind::ROF);
  CHECK(parse_problem("coupled") == ProblemKind::Coupled);
  CHECK(to_string(Termination::GapMet) == "gap-met");
  CHECK(to_string(Termination::IterCap) == "iter-cap");
}

TEST_CASE("parameter validation") {
  SolverParams p;
  CHECK_NOTHROW(validate(p));
  p.lambda = 0.0;
  CHECK_THROWS_AS(validate(p), ParameterError);
  p = {};
  p.alpha = -1.0;
  CHECK_THROWS_AS(validate(p), ParameterError);
  p = {};
  p.b = 2.0;
  CHECK_THROWS_AS(validate(p), ParameterError);
  p = {};
  p.gap_tol = 0.0;
  CHECK_THROWS_AS(validate(p), ParameterError);
  p = {};
  p.max_iter = 0;
  CHECK_THROWS_AS(validate(p), ParameterError);
}

TEST_CASE("ROF limits") {
  std::mt19937_64 rng(61);
  const ScalarField h = testutil::random_field(32, 32, rng, 0.3);
  SUBCASE("vanishing regularization returns the input") {
    SolverParams p;
    p.lambda = 1e-12;
    p.max_iter = 20000;
    const TvProblem prob = TvProblem::rof(h, p.lambda);
    for (Engine e : {Engine::DFB, Engine::FISTA}) CHECK(testutil::sup_diff(solve_rof(h, p, e).h, h) < 1e-10);
    // The primal-dual warm start y0 = D h is far from feasible for tiny
    // lambda, so these engines are held to their certified distance.
    for (Engine e : {Engine::PD, Engine::AcPD}) {
      CAPTURE(to_string(e));
      const Solution s = solve(prob, e, p);
      CHECK(testutil::sup_diff(s.primal[0], h) <= distance_bound(prob, s) + 1e-10);
    }
  }
  SUBCASE("huge regularization returns the mean") {
    const double mean = std::accumulate(h.values().begin(), h.values().end(), 0.0) / h.size();
    SolverParams p;
    p.lambda = 1e9;
    p.gap_tol = 1e-12;
    p.max_iter = 200000;
    const RofResult r = solve_rof(h, p, Engine::AcPD);
    for (double v : r.h.values()) CHECK(std::abs(v - mean) < 1e-4);
  }
  SUBCASE("constant input is a fixed point") {
    const ScalarField c(16, 16, 0.37);
    for (double lam : {1e-3, 1.0, 1e3}) {
      SolverParams p;
      p.lambda = lam;
      for (Engine e : {Engine::FISTA, Engine::AcPD}) {
        const RofResult r = solve_rof(c, p, e);
        CHECK(testutil::sup_diff(r.h, c) < 1e-12);
      }
    }
  }
}

TEST_CASE("joint and coupled with vanishing regularization") {
  const Instance inst = texture_instance(3);
  const std::vector<ScalarField> lr{inst.lr.v, inst.lr.h};
  SolverParams p;
  p.lambda = 1e-12;
  p.max_iter = 20000;
  for (const TvProblem& prob : {TvProblem::joint(inst.data, inst.sys, p.lambda, p.alpha),
                                TvProblem::coupled(inst.data, inst.sys, p.lambda, p.alpha)}) {
    for (Engine e : {Engine::DFB, Engine::FISTA}) CHECK(sup_diff(solve(prob, e, p).primal, lr) < 1e-9);
    for (Engine e : {Engine::PD, Engine::AcPD}) {
      CAPTURE(to_string(e));
      const Solution s = solve(prob, e, p);
      CHECK(sup_diff(s.primal, lr) <= distance_bound(prob, s) + 1e-9);
    }
  }
}

TEST_CASE("termination certificates") {
  const Instance inst = texture_instance(5);
  SolverParams p;
  p.lambda = 10.0;
  p.alpha = 1.0;
  const EstimateResult j = solve_joint(inst.data, inst.sys, p, Engine::AcPD);
  REQUIRE(j.trace.reason == Termination::GapMet);
  CHECK(j.trace.checkpoints.back().gap_normalized <= kGapTolRofJoint);
  const EstimateResult c = solve_coupled(inst.data, inst.sys, p, Engine::AcPD);
  REQUIRE(c.trace.reason == Termination::GapMet);
  CHECK(c.trace.checkpoints.back().gap_normalized <= kGapTolCoupled);
  CHECK(c.trace.iterations % p.checkpoint_every == 0);
}

TEST_CASE("engines agree on the minimizer") {
  const Instance inst = texture_instance(7);
  SolverParams p;
  p.lambda = 3.0;
  p.alpha = 1.0;
  p.gap_tol = 1e-8;
  p.max_iter = 50000;
  for (const TvProblem& prob : {TvProblem::rof(inst.lr.h, p.lambda),
                                TvProblem::joint(inst.data, inst.sys, p.lambda, p.alpha),
                                TvProblem::coupled(inst.data, inst.sys, p.lambda, p.alpha)}) {
    CAPTURE(to_string(prob.kind()));
    const Solution ref = solve(prob, Engine::AcPD, p);
    const double ref_bound = distance_bound(prob, ref);
    for (Engine e : {Engine::DFB, Engine::FISTA, Engine::PD}) {
      CAPTURE(to_string(e));
      const Solution s = solve(prob, e, p);
      CHECK(sup_diff(s.primal, ref.primal) <= distance_bound(prob, s) + ref_bound);
      if (e == Engine::FISTA) CHECK(sup_diff(s.primal, ref.primal) < 1e-3);
    }
  }
}

TEST_CASE("heavy alpha flattens h in the coupled problem") {
  std::mt19937_64 rng(67);
  const RegressionSystem sys = build_system(2, 5);
  const LeaderPyramid pyr = testutil::random_pyramid(32, 32, 2, 5, rng);
  const RegressionData d = regression_stats(pyr, sys);
  const EstimatePair lr = linreg(d, sys);
  SolverParams p;
  p.lambda = 1.0;
  p.alpha = 1e3;
  const EstimateResult r = solve_coupled(d, sys, p, Engine::AcPD);
  CHECK(total_variation(r.estimate.h) < 1e-2 * total_variation(lr.h));
}

TEST_CASE("weak duality at every checkpoint") {
  for (std::uint64_t seed : {11, 12, 13}) {
    const Instance inst = texture_instance(seed);
    SolverParams p;
    p.lambda = 3.0;
    p.alpha = 0.5;
    p.max_iter = 3000;
    for (Engine e : {Engine::DFB, Engine::FISTA, Engine::PD, Engine::AcPD}) {
      for (const auto& trace : {solve_rof(inst.lr.h, p, e).trace,
                                solve_joint(inst.data, inst.sys, p, e).trace,
                                solve_coupled(inst.data, inst.sys, p, e).trace}) {
        for (const auto& c : trace.checkpoints) {
          CHECK(c.gap >= -1e-10);
          CHECK(c.gap_normalized >= -1e-12);
        }
      }
    }
  }
}

TEST_CASE("gap at the linear regression estimate with a zero dual") {
  const Instance inst = texture_instance(17);
  const TvProblem prob = TvProblem::joint(inst.data, inst.sys, 1.0, 1.0);
  const std::vector<ScalarField> x{inst.lr.v, inst.lr.h};
  const VectorField y(prob.dual_channels(), 64, 64);
  const GapValue g = duality_gap(prob, x, y);
  CHECK(g.gap >= 0.0);
  // Phi vanishes at its minimizer up to the residual, so the gap is the TV term
  // plus Phi(x_lr) + Phi*(0) = 0.
  const double tv = norm21(grad(inst.lr.v)) + norm21(grad(inst.lr.h));
  CHECK(g.gap == doctest::Approx(tv).epsilon(1e-9));
}

TEST_CASE("infeasible dual gives an infinite gap") {
  const Instance inst = texture_instance(19);
  const TvProblem prob = TvProblem::rof(inst.lr.h, 0.5);
  VectorField y(2, 64, 64);
  y.at(0, 3, 3) = 0.6;
  CHECK(std::isinf(duality_gap(prob, {inst.lr.h}, y).gap));
  y.at(0, 3, 3) = 0.5 * (1 + 1e-10);
  CHECK(std::isfinite(duality_gap(prob, {inst.lr.h}, y).gap));
}

TEST_CASE("2x2 ROF saddle point against a dense dual oracle") {
  // Independent solve of the dual of min 1/2|h - f|^2 + lam |Dh|_{2,1} on a
  // 2x2 grid: maximize -1/2 |f - D^T y|^2 subject to per-pixel balls, by
  // projected gradient with an explicit 8x4 matrix.
  const ScalarField f(2, 2, std::vector<double>{0.1, 0.9, 0.4, -0.3});
  const double lam = 0.15;
  double D[8][4] = {};
  // Channel 0 (horizontal), pixels (0,0) and (1,0); channel 1 (vertical), pixels (0,0), (0,1).
  D[0][0] = -1, D[0][1] = 1;
  D[2][2] = -1, D[2][3] = 1;
  D[4][0] = -1, D[4][2] = 1;
  D[5][1] = -1, D[5][3] = 1;
  std::array<double, 8> y{};
  for (int it = 0; it < 200000; ++it) {
    std::array<double, 4> h{};
    for (int k = 0; k < 4; ++k) {
      double s = 0.0;
      for (int r = 0; r < 8; ++r) s += D[r][k] * y[r];
      h[k] = f[k] - s;
    }
    for (int r = 0; r < 8; ++r) {
      double g = 0.0;
      for (int k = 0; k < 4; ++k) g += D[r][k] * h[k];
      y[r] += 0.12 * g;
    }
    for (int p = 0; p < 4; ++p) {
      const double n = std::hypot(y[p], y[4 + p]);
      if (n > lam) {
        y[p] *= lam / n;
        y[4 + p] *= lam / n;
      }
    }
  }
  std::array<double, 4> h{};
  for (int k = 0; k < 4; ++k) {
    double s = 0.0;
    for (int r = 0; r < 8; ++r) s += D[r][k] * y[r];
    h[k] = f[k] - s;
  }
  const TvProblem prob = TvProblem::rof(f, lam);
  VectorField yv(2, 2, 2);
  for (int r = 0; r < 8; ++r) yv.values()[r] = y[r];
  const ScalarField hx(2, 2, std::vector<double>(h.begin(), h.end()));
  CHECK(duality_gap(prob, {hx}, yv).gap <= 1e-8);

  SolverParams p;
  p.lambda = lam;
  p.gap_tol = 1e-12;
  for (Engine e : {Engine::FISTA, Engine::AcPD}) {
    const RofResult r = solve_rof(f, p, e);
    CHECK(testutil::sup_diff(r.h, hx) < 1e-5);
  }
}

TEST_CASE("normalized gap trend over an accelerated run") {
  const Instance inst = texture_instance(23);
  SolverParams p;
  p.lambda = 30.0;
  p.alpha = 1.0;
  p.gap_tol = 1e-300;
  p.max_iter = 10000;
  const auto r = solve_coupled(inst.data, inst.sys, p, Engine::AcPD);
  double at100 = 0, at10k = 0;
  for (const auto& c : r.trace.checkpoints) {
    if (c.iteration == 100) at100 = c.gap_normalized;
    if (c.iteration == 10000) at10k = c.gap_normalized;
  }
  CHECK(r.trace.reason == Termination::IterCap);
  CHECK(r.trace.iterations == 10000);
  CHECK(at10k < at100);
}

TEST_CASE("dual forward-backward objective is non-increasing") {
  const Instance inst = texture_instance(29);
  SolverParams p;
  p.lambda = 3.0;
  p.alpha = 2.0;
  p.max_iter = 5000;
  for (const auto& trace : {solve_rof(inst.lr.h, p, Engine::DFB).trace,
                            solve_joint(inst.data, inst.sys, p, Engine::DFB).trace,
                            solve_coupled(inst.data, inst.sys, p, Engine::DFB).trace}) {
    for (std::size_t i = 1; i < trace.checkpoints.size(); ++i) {
      CHECK(trace.checkpoints[i].objective <= trace.checkpoints[i - 1].objective + 1e-10);
    }
  }
}

TEST_CASE("acceleration ordering on a fixed instance") {
  const Instance inst = texture_instance(31);
  SolverParams p;
  p.lambda = 5.0;
  p.alpha = 1.0;
  p.max_iter = 50000;
  auto iters = [&](int kind, Engine e) {
    if (kind == 0) return solve_rof(inst.lr.h, p, e).trace.iterations;
    if (kind == 1) return solve_joint(inst.data, inst.sys, p, e).trace.iterations;
    return solve_coupled(inst.data, inst.sys, p, e).trace.iterations;
  };
  for (int kind = 0; kind < 3; ++kind) {
    CAPTURE(kind);
    CHECK(iters(kind, Engine::FISTA) <= iters(kind, Engine::DFB));
    CHECK(iters(kind, Engine::AcPD) <= iters(kind, Engine::PD));
  }
}

TEST_CASE("step sizes violating the contraction condition are rejected") {
  const Instance inst = texture_instance(37);
  const TvProblem joint = TvProblem::joint(inst.data, inst.sys, 1.0, 1.0);
  const TvProblem coupled = TvProblem::coupled(inst.data, inst.sys, 1.0, 4.0);
  for (const TvProblem* prob : {&joint, &coupled}) {
    const double l2 = prob->op_norm() * prob->op_norm();
    SolverParams p;
    p.max_iter = 10;
    p.gamma = 2.0 / (prob->fidelity_inverse_norm() * l2);
    CHECK_THROWS_AS(solve(*prob, Engine::FISTA, p), ParameterError);
    CHECK_THROWS_AS(solve(*prob, Engine::DFB, p), ParameterError);
    p.gamma.reset();
    p.delta0 = std::sqrt(2.0) / prob->op_norm();
    p.nu0 = std::sqrt(2.0) / prob->op_norm();
    CHECK_THROWS_AS(solve(*prob, Engine::AcPD, p), ParameterError);
    CHECK_THROWS_AS(solve(*prob, Engine::PD, p), ParameterError);
    p.delta0 = 0.5 / prob->op_norm();
    p.nu0 = 0.5 / prob->op_norm();
    CHECK_NOTHROW(solve(*prob, Engine::PD, p));
  }
  CHECK(coupled.op_norm() == doctest::Approx(4.0 * op_norm_grad()));
}

TEST_CASE("gap met at the final checkpoint is reported as gap-met") {
  const Instance inst = texture_instance(41);
  SolverParams p;
  p.lambda = 2.0;
  p.max_iter = 50;
  p.gap_tol = 1.0;
  const auto r = solve_rof(inst.lr.h, p, Engine::PD);
  CHECK(r.trace.iterations == 50);
  CHECK(r.trace.reason == Termination::GapMet);
}
