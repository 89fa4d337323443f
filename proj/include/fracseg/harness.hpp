#pragma once

// Monte-Carlo experiment driver: synthesize textures for a configuration,
// run every (method, engine, lambda, alpha) cell per realization, threshold,
// score, and aggregate into score and cost tables.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fracseg/grid.hpp"
#include "fracseg/io.hpp"
#include "fracseg/solvers.hpp"
#include "fracseg/synthesis.hpp"
#include "fracseg/wavelet.hpp"

namespace fracseg {

enum class Method { TROF, TJoint, TCoupled };
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// count values log-spaced on [lo, hi] (count == 1 gives lo).
std::vector<double> log_grid(double lo, double hi, int count);

struct MethodEngines {
  Method method;
  std::vector<Engine> engines;
};

struct ExperimentConfig {
  std::string id = "custom";
  double sigma2_0 = 0.6;  // background variance of Y
  double H0 = 0.5;
  double d_sigma2 = 0.0;  // contrasts applied inside the ellipse
  double dH = 0.0;
  std::size_t N = 256;
  int realizations = 3;
  std::uint64_t master_seed = 1;
  std::vector<MethodEngines> methods;
  std::vector<double> lambdas;
  std::vector<double> alphas;  // unused by T-ROF
  WaveletConfig wavelet;
  VarianceMode variance = VarianceMode::Exact;
  Spectrum spectrum = Spectrum::Lattice;
  long max_iter = 250000;
  std::optional<double> gap_tol;
  long checkpoint_every = 50;
  unsigned workers = 1;
};

/// Throws ConfigError / ParameterError on empty grids, non-positive
/// variances or regularity outside (0, 1).
void validate(const ExperimentConfig& cfg);

/// Method/engine pairs used by presets: T-ROF with FISTA, the others with AcPD.
std::vector<MethodEngines> default_methods();

/// Presets "I".."VI" and "II'" (background (0.6, 0.5); II' reads 0.6 and
/// the contrast as standard deviations instead of variances). Full default
/// grids: 9 lambdas on [1e-1, 1e3], 6 alphas on [1e-2, 1e3].
ExperimentConfig preset(std::string_view id);
std::vector<std::string> preset_ids();

/// Builds a configuration from key = value pairs. Recognized keys:
///   preset (start from a preset), id, sigma2_0, H0, d_sigma2, dH, N,
///   realizations, seed, methods ("T-ROF:FISTA, T-joint:AcPD+PD, ..."),
///   lambda_min, lambda_max, lambda_count, alpha_min, alpha_max, alpha_count,
///   lambdas / alphas (explicit comma lists), j1, j2, vanishing_moments,
///   max_iter, gap_tol, checkpoint_every, workers, variance (exact | raw),
///   spectrum (lattice | aliased).
/// Unknown keys raise ConfigError.
ExperimentConfig config_from_keys(const io::KeyValues& kv);

/// Ground-truth regions for a configuration: index 0 is the background.
std::vector<FractalParams> region_params(const ExperimentConfig& cfg, std::uint64_t realization_seed);
std::uint64_t realization_seed(const ExperimentConfig& cfg, int realization);

struct ResultRecord {
  std::string config;
  Method method = Method::TROF;
  Engine engine = Engine::FISTA;
  double lambda = 0.0;
  double alpha = 0.0;  // 0 for T-ROF
  int realization = 0;
  std::uint64_t seed = 0;
  double score = 0.0;
  double delta_h = 0.0;
  long iterations = 0;
  double seconds = 0.0;
  Termination reason = Termination::IterCap;
  long max_iter = 0;
};

/// Deterministic record order: config, method, engine, lambda, alpha, realization.
bool record_less(const ResultRecord& a, const ResultRecord& b);

std::vector<ResultRecord> run_config(const ExperimentConfig& cfg);

struct BestCell {
  std::string config;
  Method method = Method::TROF;
  Engine engine = Engine::FISTA;
  double lambda = 0.0;
  double alpha = 0.0;
  int seeds = 0;
  double mean_score = 0.0;
  double sd_score = 0.0;
  double mean_delta_h = 0.0;
  double sd_delta_h = 0.0;
};

/// Per (config, method): the (engine, lambda, alpha) cell with the largest
/// seed-averaged score; ties go to the smaller lambda, then the smaller alpha.
/// Throws ConfigError on empty input.
std::vector<BestCell> best_over_grid(const std::vector<ResultRecord>& records);

struct CostRow {
  std::string config;
  Method method = Method::TROF;
  Engine engine = Engine::FISTA;
  int runs = 0;
  int capped = 0;
  long max_iter = 0;
  double mean_iterations = 0.0;
  double sd_iterations = 0.0;
  double mean_seconds = 0.0;
  double sd_seconds = 0.0;
  /// "mean +- sd", or "> max_iter" when any run hit the cap.
  std::string iterations_cell() const;
};

std::vector<CostRow> cost_table(const std::vector<ResultRecord>& records);

/// Both images normalized to zero mean and unit variance, then composited:
/// label 1 takes pathB, label 0 takes pathA.
ScalarField ingest_real_texture(const std::filesystem::path& pathA,
                                const std::filesystem::path& pathB, const LabelMap& mask);
ScalarField composite(const ScalarField& a, const ScalarField& b, const LabelMap& mask);

struct MuRow {
  int j1 = 0;
  int j2 = 0;
  double mu = 0.0;
  double J_inv_norm = 0.0;
};

/// Strong convexity constant for every 1 <= j1 < j2 <= jmax.
std::vector<MuRow> mu_table(int jmax = 8);

void write_records_csv(const std::filesystem::path& path, const std::vector<ResultRecord>& records);
void write_best_csv(const std::filesystem::path& path, const std::vector<BestCell>& cells);
void write_cost_csv(const std::filesystem::path& path, const std::vector<CostRow>& rows);
void write_mu_csv(const std::filesystem::path& path, const std::vector<MuRow>& rows);

}  // namespace fracseg
