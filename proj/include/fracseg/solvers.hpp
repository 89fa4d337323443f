#pragma once

// TV-regularized estimation problems and their proximal solvers.
//
// All three problems share the form
//     min_x  Theta(x) + sum_b radius_b * || (L x)_b ||_{2,1}
// where Theta is a per-pixel quadratic (1/2 x^T A x - b_n^T x + c) with A the
// identity (ROF) or the regression matrix J (joint, coupled), and L stacks
// scaled gradients of the primal components into dual blocks:
//
//   ROF      x = h        one block  (D h), radius lambda
//   joint    x = (v, h)   blocks     (D v), radius lambda; (D h), radius lambda*alpha
//   coupled  x = (v, h)   one block  (D v ; alpha D h), radius lambda
//
// Engines:
//   DFB    dual forward-backward, constant step gamma
//   FISTA  dual FISTA with inertia (t - 1) / (t + b)
//   PD     primal-dual with constant steps (delta, nu)
//   AcPD   primal-dual with steps adapted to the strong convexity constant mu

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fracseg/fidelity.hpp"
#include "fracseg/grid.hpp"

namespace fracseg {

enum class ProblemKind { ROF, Joint, Coupled };
enum class Engine { DFB, FISTA, PD, AcPD };

std::string_view to_string(ProblemKind kind);
std::string_view to_string(Engine engine);
ProblemKind parse_problem(std::string_view name);
Engine parse_engine(std::string_view name);

/// Stopping thresholds on the normalized duality gap.
inline constexpr double kGapTolRofJoint = 5e-3;
inline constexpr double kGapTolCoupled = 1e-4;

struct SolverParams {
  double lambda = 1.0;
  double alpha = 1.0;
  double b = 4.0;  // FISTA inertia parameter, must exceed 2
  long max_iter = 250000;
  std::optional<double> gap_tol;  // defaults per problem kind
  long checkpoint_every = 50;
  std::optional<double> gamma;   // dual forward-backward step
  std::optional<double> delta0;  // primal-dual primal step
  std::optional<double> nu0;     // primal-dual dual step
};

/// Throws ParameterError on lambda, alpha or gap_tol <= 0, b <= 2 or a
/// non-positive iteration budget / cadence.
void validate(const SolverParams& params);

struct Checkpoint {
  long iteration = 0;
  double objective = 0.0;
  double gap = 0.0;
  double gap_normalized = 0.0;
  double seconds = 0.0;
};

enum class Termination { GapMet, IterCap };
std::string_view to_string(Termination t);

struct SolverTrace {
  long iterations = 0;
  std::vector<Checkpoint> checkpoints;
  Termination reason = Termination::IterCap;
  double seconds = 0.0;
};

struct GapValue {
  double gap = 0.0;             // primal value + dual value
  double normalized = 0.0;      // gap / (|primal| + |dual|)
  double primal_value = 0.0;    // Theta(x) + Xi(L x)
  double dual_value = 0.0;      // Theta*(-L* y) + Xi*(y)
};

class TvProblem {
 public:
  static TvProblem rof(const ScalarField& h_lr, double lambda);
  static TvProblem joint(const RegressionData& data, const RegressionSystem& sys, double lambda,
                         double alpha);
  static TvProblem coupled(const RegressionData& data, const RegressionSystem& sys,
                           double lambda, double alpha);

  ProblemKind kind() const { return kind_; }
  std::size_t primal_count() const { return linear_.size(); }
  std::size_t dual_channels() const;
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double mu() const { return mu_; }
  double fidelity_inverse_norm() const { return 1.0 / mu_; }
  /// Upper bound on ||L|| (exact for the block-diagonal operators used here).
  double op_norm() const;
  double default_gap_tol() const;

  /// Unregularized minimizer of Theta (the linear regression estimate, or h_lr).
  std::vector<ScalarField> fidelity_minimizer() const;

  void apply_L(const std::vector<ScalarField>& x, VectorField& y) const;
  /// out = L^* y (out is resized as needed).
  void apply_Lt(const VectorField& y, std::vector<ScalarField>& out) const;
  /// Per-block projection onto the dual feasible balls.
  void project(VectorField& y) const;
  /// Largest ratio (per-pixel norm / radius) over all blocks.
  double max_dual_ratio(const VectorField& y) const;

  double primal_value(const std::vector<ScalarField>& x) const;
  double dual_value(const VectorField& y) const;

  /// Duality gap; +inf if y violates a dual ball by more than a 1e-9 relative slack.
  GapValue gap(const std::vector<ScalarField>& x, const VectorField& y) const;

  // Per-pixel fidelity algebra, exposed for the engines.
  /// x = A^-1 (b - w).
  void primal_from_dual(const std::vector<ScalarField>& lt_y, std::vector<ScalarField>& x) const;
  /// In place: x <- (I + step A)^-1 (x + step b).
  void prox_fidelity(std::vector<ScalarField>& x, double step) const;

  struct Component {
    std::size_t primal;
    double scale;
    std::size_t channel;  // first of the two gradient channels
  };
  struct Block {
    double radius;
    std::vector<Component> components;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  TvProblem() = default;

  ProblemKind kind_ = ProblemKind::ROF;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Sym2 A_;      // fidelity Hessian (only A_.a used when there is one component)
  Sym2 A_inv_;
  std::vector<ScalarField> linear_;  // b_n per component
  double constant_ = 0.0;
  double mu_ = 1.0;
  std::vector<Block> blocks_;
};

struct Solution {
  std::vector<ScalarField> primal;
  VectorField dual;
  SolverTrace trace;
};

/// Runs `engine` on `problem`. Throws ParameterError if an explicit step
/// violates the engine's contraction condition.
Solution solve(const TvProblem& problem, Engine engine, const SolverParams& params);

GapValue duality_gap(const TvProblem& problem, const std::vector<ScalarField>& primal,
                     const VectorField& dual);

struct RofResult {
  ScalarField h;
  VectorField dual;
  SolverTrace trace;
};

struct EstimateResult {
  EstimatePair estimate;
  VectorField dual;  // channels (u horizontal, u vertical, l horizontal, l vertical)
  SolverTrace trace;
};

RofResult solve_rof(const ScalarField& h_lr, const SolverParams& params,
                    Engine engine = Engine::FISTA);
EstimateResult solve_joint(const RegressionData& data, const RegressionSystem& sys,
                           const SolverParams& params, Engine engine = Engine::AcPD);
EstimateResult solve_coupled(const RegressionData& data, const RegressionSystem& sys,
                             const SolverParams& params, Engine engine = Engine::AcPD);
EstimateResult solve_joint(const LeaderPyramid& pyr, const RegressionSystem& sys,
                           const SolverParams& params, Engine engine = Engine::AcPD);
EstimateResult solve_coupled(const LeaderPyramid& pyr, const RegressionSystem& sys,
                             const SolverParams& params, Engine engine = Engine::AcPD);

}  // namespace fracseg
