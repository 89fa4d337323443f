#include "fracseg/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fracseg/error.hpp"

namespace fracseg {

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::ROF: return "rof";
    case ProblemKind::Joint: return "joint";
    case ProblemKind::Coupled: return "coupled";
  }
  return "?";
}

std::string_view to_string(Engine engine) {
  switch (engine) {
    case Engine::DFB: return "DFB";
    case Engine::FISTA: return "FISTA";
    case Engine::PD: return "PD";
    case Engine::AcPD: return "AcPD";
  }
  return "?";
}

std::string_view to_string(Termination t) {
  return t == Termination::GapMet ? "gap-met" : "iter-cap";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

ProblemKind parse_problem(std::string_view name) {
  const auto n = lower(name);
  if (n == "rof" || n == "t-rof") return ProblemKind::ROF;
  if (n == "joint" || n == "t-joint") return ProblemKind::Joint;
  if (n == "coupled" || n == "t-coupled") return ProblemKind::Coupled;
  throw ConfigError("unknown method: " + std::string(name));
}

Engine parse_engine(std::string_view name) {
  const auto n = lower(name);
  if (n == "dfb") return Engine::DFB;
  if (n == "fista") return Engine::FISTA;
  if (n == "pd") return Engine::PD;
  if (n == "acpd") return Engine::AcPD;
  throw ConfigError("unknown engine: " + std::string(name));
}

void validate(const SolverParams& p) {
  if (!(p.lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (!(p.alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (!(p.b > 2.0)) throw ParameterError("FISTA inertia parameter b must exceed 2");
  if (p.max_iter <= 0) throw ParameterError("max_iter must be positive");
  if (p.checkpoint_every <= 0) throw ParameterError("checkpoint cadence must be positive");
  if (p.gap_tol && !(*p.gap_tol > 0.0)) throw ParameterError("gap_tol must be positive");
  for (const auto& step : {p.gamma, p.delta0, p.nu0}) {
    if (step && !(*step > 0.0)) throw ParameterError("step sizes must be positive");
  }
}

// ---------------------------------------------------------------------------
// TvProblem

TvProblem TvProblem::rof(const ScalarField& h_lr, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (h_lr.rows() < 2 || h_lr.cols() < 2) throw ConfigError("grid must be at least 2x2");
  TvProblem p;
  p.kind_ = ProblemKind::ROF;
  p.rows_ = h_lr.rows();
  p.cols_ = h_lr.cols();
  p.A_ = {1.0, 0.0, 1.0};
  p.A_inv_ = {1.0, 0.0, 1.0};
  p.linear_ = {h_lr};
  const double n = norm2(h_lr.values());
  p.constant_ = 0.5 * n * n;
  p.mu_ = 1.0;
  p.blocks_ = {Block{lambda, {Component{0, 1.0, 0}}}};
  return p;
}

namespace {

TvProblem::Block make_block(double radius, std::vector<TvProblem::Component> comps) {
  return TvProblem::Block{radius, std::move(comps)};
}

}  // namespace

TvProblem TvProblem::joint(const RegressionData& data, const RegressionSystem& sys, double lambda,
                           double alpha) {
  if (!(lambda > 0.0) || !(alpha > 0.0)) throw ParameterError("lambda and alpha must be positive");
  if (data.S.rows() < 2 || data.S.cols() < 2) throw ConfigError("grid must be at least 2x2");
  TvProblem p;
  p.kind_ = ProblemKind::Joint;
  p.rows_ = data.S.rows();
  p.cols_ = data.S.cols();
  p.A_ = sys.J;
  p.A_inv_ = sys.J_inv;
  p.linear_ = {data.S, data.T};
  p.constant_ = 0.5 * data.log_sq_sum;
  p.mu_ = sys.mu;
  p.blocks_ = {make_block(lambda, {Component{0, 1.0, 0}}),
               make_block(lambda * alpha, {Component{1, 1.0, 2}})};
  return p;
}

TvProblem TvProblem::coupled(const RegressionData& data, const RegressionSystem& sys,
                             double lambda, double alpha) {
  TvProblem p = joint(data, sys, lambda, alpha);
  p.kind_ = ProblemKind::Coupled;
  p.blocks_ = {make_block(lambda, {Component{0, 1.0, 0}, Component{1, alpha, 2}})};
  return p;
}

std::size_t TvProblem::dual_channels() const { return 2 * primal_count(); }

double TvProblem::op_norm() const {
  double worst = 0.0;
  for (std::size_t p = 0; p < primal_count(); ++p) {
    double s2 = 0.0;
    for (const auto& b : blocks_) {
      for (const auto& c : b.components) {
        if (c.primal == p) s2 += c.scale * c.scale;
      }
    }
    worst = std::max(worst, std::sqrt(s2));
  }
  return worst * op_norm_grad();
}

double TvProblem::default_gap_tol() const {
  return kind_ == ProblemKind::Coupled ? kGapTolCoupled : kGapTolRofJoint;
}

std::vector<ScalarField> TvProblem::fidelity_minimizer() const {
  std::vector<ScalarField> zero(primal_count(), ScalarField(rows_, cols_));
  std::vector<ScalarField> x;
  primal_from_dual(zero, x);
  return x;
}

void TvProblem::apply_L(const std::vector<ScalarField>& x, VectorField& y) const {
  if (y.channels() != dual_channels() || y.rows() != rows_ || y.cols() != cols_) {
    y = VectorField(dual_channels(), rows_, cols_);
  }
  for (const auto& b : blocks_) {
    for (const auto& c : b.components) {
      kernels::forward_diff(x[c.primal].values(), rows_, cols_, c.scale, y.channel(c.channel),
                            y.channel(c.channel + 1));
    }
  }
}

void TvProblem::apply_Lt(const VectorField& y, std::vector<ScalarField>& out) const {
  out.resize(primal_count());
  for (auto& f : out) {
    if (f.rows() != rows_ || f.cols() != cols_) {
      f = ScalarField(rows_, cols_);
    } else {
      std::fill(f.values().begin(), f.values().end(), 0.0);
    }
  }
  for (const auto& b : blocks_) {
    for (const auto& c : b.components) {
      kernels::forward_diff_adjoint_add(y.channel(c.channel), y.channel(c.channel + 1), rows_,
                                        cols_, c.scale, out[c.primal].values());
    }
  }
}

namespace {

template <class Span, class Field>
std::vector<Span> block_channels(const TvProblem::Block& b, Field& y) {
  std::vector<Span> chans;
  for (const auto& c : b.components) {
    chans.push_back(y.channel(c.channel));
    chans.push_back(y.channel(c.channel + 1));
  }
  return chans;
}

}  // namespace

void TvProblem::project(VectorField& y) const {
  for (const auto& b : blocks_) {
    auto chans = block_channels<std::span<double>>(b, y);
    kernels::project_ball(chans, b.radius);
  }
}

double TvProblem::max_dual_ratio(const VectorField& y) const {
  double worst = 0.0;
  for (const auto& b : blocks_) {
    auto chans = block_channels<std::span<const double>>(b, y);
    for (std::size_t i = 0; i < y.pixels(); ++i) {
      double s = 0.0;
      for (const auto& ch : chans) s += ch[i] * ch[i];
      worst = std::max(worst, std::sqrt(s) / b.radius);
    }
  }
  return worst;
}

double TvProblem::primal_value(const std::vector<ScalarField>& x) const {
  double fid = 0.0;
  const std::size_t n = rows_ * cols_;
  if (primal_count() == 1) {
    const auto& b = linear_[0];
    for (std::size_t i = 0; i < n; ++i) fid += 0.5 * A_.a * x[0][i] * x[0][i] - b[i] * x[0][i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x[0][i];
      const double h = x[1][i];
      fid += 0.5 * (A_.a * v * v + 2.0 * A_.b * v * h + A_.c * h * h) -
             (linear_[0][i] * v + linear_[1][i] * h);
    }
  }
  fid += constant_;
  VectorField lx;
  apply_L(x, lx);
  double reg = 0.0;
  for (const auto& b : blocks_) {
    auto chans = block_channels<std::span<const double>>(b, std::as_const(lx));
    reg += b.radius * kernels::pixel_norm_sum(chans);
  }
  return fid + reg;
}

double TvProblem::dual_value(const VectorField& y) const {
  std::vector<ScalarField> lt;
  apply_Lt(y, lt);
  const std::size_t n = rows_ * cols_;
  double total = 0.0;
  if (primal_count() == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = linear_[0][i] - lt[0][i];
      total += 0.5 * A_inv_.a * w * w;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double w0 = linear_[0][i] - lt[0][i];
      const double w1 = linear_[1][i] - lt[1][i];
      const auto aw = A_inv_.apply(w0, w1);
      total += 0.5 * (w0 * aw[0] + w1 * aw[1]);
    }
  }
  return total - constant_;
}

GapValue TvProblem::gap(const std::vector<ScalarField>& x, const VectorField& y) const {
  GapValue g;
  g.primal_value = primal_value(x);
  if (max_dual_ratio(y) > 1.0 + 1e-9) {
    g.dual_value = std::numeric_limits<double>::infinity();
    g.gap = g.normalized = std::numeric_limits<double>::infinity();
    return g;
  }
  g.dual_value = dual_value(y);

  // Same quantity as primal_value + dual_value, rearranged into a sum of
  // per-pixel non-negative terms so that constants cancel exactly:
  //   1/2 r^T A^-1 r  with r = A x - b + L^* y,  plus  radius |Lx| - <Lx, y>.
  std::vector<ScalarField> lt;
  apply_Lt(y, lt);
  const std::size_t n = rows_ * cols_;
  double fid = 0.0;
  if (primal_count() == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = A_.a * x[0][i] - linear_[0][i] + lt[0][i];
      fid += 0.5 * A_inv_.a * r * r;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ax = A_.apply(x[0][i], x[1][i]);
      const double r0 = ax[0] - linear_[0][i] + lt[0][i];
      const double r1 = ax[1] - linear_[1][i] + lt[1][i];
      const auto ar = A_inv_.apply(r0, r1);
      fid += 0.5 * (r0 * ar[0] + r1 * ar[1]);
    }
  }
  VectorField lx;
  apply_L(x, lx);
  double reg = 0.0;
  for (const auto& b : blocks_) {
    auto q = block_channels<std::span<const double>>(b, std::as_const(lx));
    auto d = block_channels<std::span<const double>>(b, y);
    for (std::size_t i = 0; i < n; ++i) {
      double qq = 0.0;
      double qd = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        qq += q[k][i] * q[k][i];
        qd += q[k][i] * d[k][i];
      }
      reg += b.radius * std::sqrt(qq) - qd;
    }
  }
  g.gap = fid + reg;
  const double denom = std::abs(g.primal_value) + std::abs(g.dual_value);
  g.normalized = g.gap / std::max(denom, 1e-12);
  return g;
}

void TvProblem::primal_from_dual(const std::vector<ScalarField>& lt_y,
                                 std::vector<ScalarField>& x) const {
  x.resize(primal_count());
  for (auto& f : x) {
    if (f.rows() != rows_ || f.cols() != cols_) f = ScalarField(rows_, cols_);
  }
  const std::size_t n = rows_ * cols_;
  if (primal_count() == 1) {
    for (std::size_t i = 0; i < n; ++i) x[0][i] = A_inv_.a * (linear_[0][i] - lt_y[0][i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = A_inv_.apply(linear_[0][i] - lt_y[0][i], linear_[1][i] - lt_y[1][i]);
      x[0][i] = r[0];
      x[1][i] = r[1];
    }
  }
}

void TvProblem::prox_fidelity(std::vector<ScalarField>& x, double step) const {
  const std::size_t n = rows_ * cols_;
  if (primal_count() == 1) {
    const double f = 1.0 / (1.0 + step * A_.a);
    for (std::size_t i = 0; i < n; ++i) x[0][i] = f * (x[0][i] + step * linear_[0][i]);
  } else {
    const Sym2 inv = Sym2{1.0 + step * A_.a, step * A_.b, 1.0 + step * A_.c}.inverse();
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = inv.apply(x[0][i] + step * linear_[0][i], x[1][i] + step * linear_[1][i]);
      x[0][i] = r[0];
      x[1][i] = r[1];
    }
  }
}

GapValue duality_gap(const TvProblem& problem, const std::vector<ScalarField>& primal,
                     const VectorField& dual) {
  if (primal.size() != problem.primal_count() || dual.channels() != problem.dual_channels()) {
    throw ConfigError("duality_gap: variable layout does not match the problem");
  }
  return problem.gap(primal, dual);
}

// ---------------------------------------------------------------------------
// Engines

namespace {

using Clock = std::chrono::steady_clock;

class Recorder {
 public:
  Recorder(const TvProblem& problem, const SolverParams& params)
      : problem_(problem),
        params_(params),
        tol_(params.gap_tol.value_or(problem.default_gap_tol())),
        start_(Clock::now()) {}

  bool due(long iteration) const {
    return iteration % params_.checkpoint_every == 0 || iteration == params_.max_iter;
  }

  // Returns true when the stopping criterion is met.
  bool checkpoint(long iteration, const std::vector<ScalarField>& x, const VectorField& y) {
    const GapValue g = problem_.gap(x, y);
    const double secs = std::chrono::duration<double>(Clock::now() - start_).count();
    trace_.checkpoints.push_back({iteration, g.primal_value, g.gap, g.normalized, secs});
    trace_.iterations = iteration;
    if (g.normalized < tol_) {
      trace_.reason = Termination::GapMet;
      return true;
    }
    return false;
  }

  SolverTrace finish(long iteration) {
    trace_.iterations = iteration;
    trace_.seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    return std::move(trace_);
  }

 private:
  const TvProblem& problem_;
  const SolverParams& params_;
  double tol_;
  Clock::time_point start_;
  SolverTrace trace_;
};

// Forward-backward on the dual problem min_y Theta*(-L^* y) + Xi*(y). The
// primal iterate is recovered as x(y) = A^-1 (b - L^* y). The gradient step
// is taken at the inertial point ybar; with accelerated == false, ybar = y.
Solution run_dual_forward_backward(const TvProblem& problem, const SolverParams& params,
                                   bool accelerated) {
  const double l2 = problem.op_norm() * problem.op_norm();
  const double inv = problem.fidelity_inverse_norm();
  const double gamma = params.gamma.value_or(0.99 / (inv * l2));
  if (gamma * inv * l2 >= 1.0) {
    throw ParameterError("dual step gamma violates gamma * ||A^-1|| * ||L||^2 < 1");
  }

  const std::size_t channels = problem.dual_channels();
  VectorField y(channels, problem.rows(), problem.cols());
  VectorField y_bar = y;
  VectorField y_new = y;
  VectorField lx;
  std::vector<ScalarField> lt;
  std::vector<ScalarField> x_bar;

  Recorder rec(problem, params);
  long iteration = 0;
  bool converged = false;
  while (iteration < params.max_iter && !converged) {
    problem.apply_Lt(y_bar, lt);
    problem.primal_from_dual(lt, x_bar);
    problem.apply_L(x_bar, lx);
    {
      auto yn = y_new.values();
      const auto yb = y_bar.values();
      const auto g = lx.values();
      for (std::size_t i = 0; i < yn.size(); ++i) yn[i] = yb[i] + gamma * g[i];
    }
    problem.project(y_new);

    const double t = static_cast<double>(iteration);
    const double beta = (accelerated && iteration >= 1) ? (t - 1.0) / (t + params.b) : 0.0;
    {
      auto yb = y_bar.values();
      const auto yn = y_new.values();
      const auto yo = y.values();
      for (std::size_t i = 0; i < yb.size(); ++i) yb[i] = yn[i] + beta * (yn[i] - yo[i]);
    }
    std::swap(y, y_new);
    ++iteration;

    if (rec.due(iteration)) {
      std::vector<ScalarField> x;
      problem.apply_Lt(y, lt);
      problem.primal_from_dual(lt, x);
      converged = rec.checkpoint(iteration, x, y);
    }
  }

  Solution sol;
  problem.apply_Lt(y, lt);
  problem.primal_from_dual(lt, sol.primal);
  sol.dual = std::move(y);
  sol.trace = rec.finish(iteration);
  return sol;
}

// Primal-dual iterations with the primal step first and extrapolation on the
// dual variable. With accelerated == true the steps follow
// theta = (1 + 2 mu delta)^-1/2, delta <- theta delta, nu <- nu / theta.
Solution run_primal_dual(const TvProblem& problem, const SolverParams& params, bool accelerated) {
  const double lnorm = problem.op_norm();
  double delta = params.delta0.value_or(0.99 / lnorm);
  double nu = params.nu0.value_or(0.99 / lnorm);
  if (delta * nu * lnorm * lnorm >= 1.0) {
    throw ParameterError("primal-dual steps violate delta0 * nu0 * ||L||^2 < 1");
  }
  const double mu = problem.mu();

  std::vector<ScalarField> x = problem.fidelity_minimizer();
  VectorField y;
  problem.apply_L(x, y);
  VectorField y_bar = y;
  VectorField y_new = y;
  VectorField lx;
  std::vector<ScalarField> lt;

  Recorder rec(problem, params);
  long iteration = 0;
  bool converged = false;
  while (iteration < params.max_iter && !converged) {
    problem.apply_Lt(y_bar, lt);
    for (std::size_t p = 0; p < x.size(); ++p) {
      auto xv = x[p].values();
      const auto l = lt[p].values();
      for (std::size_t i = 0; i < xv.size(); ++i) xv[i] -= delta * l[i];
    }
    problem.prox_fidelity(x, delta);

    problem.apply_L(x, lx);
    {
      auto yn = y_new.values();
      const auto yo = y.values();
      const auto g = lx.values();
      for (std::size_t i = 0; i < yn.size(); ++i) yn[i] = yo[i] + nu * g[i];
    }
    problem.project(y_new);

    const double theta = accelerated ? 1.0 / std::sqrt(1.0 + 2.0 * mu * delta) : 1.0;
    delta *= theta;
    nu /= theta;
    {
      auto yb = y_bar.values();
      const auto yn = y_new.values();
      const auto yo = y.values();
      for (std::size_t i = 0; i < yb.size(); ++i) yb[i] = yn[i] + theta * (yn[i] - yo[i]);
    }
    std::swap(y, y_new);
    ++iteration;

    if (rec.due(iteration)) converged = rec.checkpoint(iteration, x, y);
  }

  Solution sol;
  sol.primal = std::move(x);
  sol.dual = std::move(y);
  sol.trace = rec.finish(iteration);
  return sol;
}

EstimatePair to_pair(std::vector<ScalarField>& x) {
  return EstimatePair{std::move(x[0]), std::move(x[1])};
}

}  // namespace

Solution solve(const TvProblem& problem, Engine engine, const SolverParams& params) {
  validate(params);
  switch (engine) {
    case Engine::DFB: return run_dual_forward_backward(problem, params, false);
    case Engine::FISTA: return run_dual_forward_backward(problem, params, true);
    case Engine::PD: return run_primal_dual(problem, params, false);
    case Engine::AcPD: return run_primal_dual(problem, params, true);
  }
  throw ParameterError("unknown engine");
}

RofResult solve_rof(const ScalarField& h_lr, const SolverParams& params, Engine engine) {
  validate(params);
  if (!h_lr.all_finite()) throw ParameterError("solve_rof: input must be finite");
  Solution s = solve(TvProblem::rof(h_lr, params.lambda), engine, params);
  return {std::move(s.primal[0]), std::move(s.dual), std::move(s.trace)};
}

EstimateResult solve_joint(const RegressionData& data, const RegressionSystem& sys,
                           const SolverParams& params, Engine engine) {
  validate(params);
  Solution s = solve(TvProblem::joint(data, sys, params.lambda, params.alpha), engine, params);
  return {to_pair(s.primal), std::move(s.dual), std::move(s.trace)};
}

EstimateResult solve_coupled(const RegressionData& data, const RegressionSystem& sys,
                             const SolverParams& params, Engine engine) {
  validate(params);
  Solution s = solve(TvProblem::coupled(data, sys, params.lambda, params.alpha), engine, params);
  return {to_pair(s.primal), std::move(s.dual), std::move(s.trace)};
}

EstimateResult solve_joint(const LeaderPyramid& pyr, const RegressionSystem& sys,
                           const SolverParams& params, Engine engine) {
  return solve_joint(regression_stats(pyr, sys), sys, params, engine);
}

EstimateResult solve_coupled(const LeaderPyramid& pyr, const RegressionSystem& sys,
                             const SolverParams& params, Engine engine) {
  return solve_coupled(regression_stats(pyr, sys), sys, params, engine);
}

}  // namespace fracseg
