// fracseg command line: texture synthesis, analysis, segmentation and
// benchmark tables.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fracseg/error.hpp"
#include "fracseg/fidelity.hpp"
#include "fracseg/harness.hpp"
#include "fracseg/io.hpp"
#include "fracseg/segmentation.hpp"
#include "fracseg/solvers.hpp"
#include "fracseg/synthesis.hpp"
#include "fracseg/wavelet.hpp"

namespace fs = std::filesystem;
using namespace fracseg;

namespace {

struct Common {
  int j1 = 2;
  int j2 = 5;
  double lambda = 1.0;
  double alpha = 1.0;
  std::string engine;
  std::string method = "T-coupled";
  std::optional<double> gap_tol;
  long max_iter = 250000;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

void add_wavelet_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--j1", c.j1, "finest octave of the regression")->capture_default_str();
  cmd->add_option("--j2", c.j2, "coarsest octave of the regression")->capture_default_str();
}

void add_solver_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--lambda", c.lambda, "TV weight")->capture_default_str();
  cmd->add_option("--alpha", c.alpha, "weight of the h-gradient (joint/coupled)")->capture_default_str();
  cmd->add_option("--engine", c.engine, "DFB | FISTA | PD | AcPD");
  cmd->add_option("--method", c.method, "T-ROF | T-joint | T-coupled")->capture_default_str();
  cmd->add_option("--gap-tol", c.gap_tol, "normalized duality gap tolerance");
  cmd->add_option("--max-iter", c.max_iter, "iteration cap")->capture_default_str();
}

WaveletConfig wavelet_of(const Common& c) {
  WaveletConfig w;
  w.j1 = c.j1;
  w.j2 = c.j2;
  return w;
}

SolverParams params_of(const Common& c) {
  SolverParams p;
  p.lambda = c.lambda;
  p.alpha = c.alpha;
  p.max_iter = c.max_iter;
  p.gap_tol = c.gap_tol;
  return p;
}

Engine engine_of(const Common& c, Method m) {
  if (!c.engine.empty()) return parse_engine(c.engine);
  return m == Method::TROF ? Engine::FISTA : Engine::AcPD;
}

struct Estimation {
  ScalarField h;
  std::optional<ScalarField> v;
  SolverTrace trace;
};

Estimation estimate(Method method, Engine engine, const RegressionData& data,
                    const RegressionSystem& sys, const SolverParams& params) {
  if (method == Method::TROF) {
    auto r = solve_rof(linreg(data, sys).h, params, engine);
    return {std::move(r.h), std::nullopt, std::move(r.trace)};
  }
  auto r = method == Method::TJoint ? solve_joint(data, sys, params, engine)
                                    : solve_coupled(data, sys, params, engine);
  return {std::move(r.estimate.h), std::move(r.estimate.v), std::move(r.trace)};
}

int run_synth(const Common& c, const std::string& preset_id, const std::string& config,
              std::size_t n) {
  ExperimentConfig cfg = config.empty() ? preset(preset_id) : config_from_keys(io::read_config(config));
  if (config.empty()) {
    cfg.N = n;
    cfg.master_seed = c.seed;
  }
  const fs::path out = c.out_dir;
  fs::create_directories(out);
  const LabelMap truth = ellipse_mask(cfg.N);
  for (int s = 0; s < cfg.realizations; ++s) {
    const auto seed = realization_seed(cfg, s);
    const ScalarField x = synth_piecewise({truth, region_params(cfg, seed)}, cfg.variance);
    const std::string stem = "texture_" + cfg.id + "_r" + std::to_string(s);
    io::write_grid(out / (stem + ".f64"), x);
    std::cout << (out / (stem + ".f64")).string() << "  seed " << seed << '\n';
  }
  io::write_mask_pgm(out / "truth.pgm", truth);
  io::write_mask_raw(out / "truth.raw", truth);
  return 0;
}

int run_analyze(const Common& c, const std::string& input) {
  const ScalarField x = io::read_image(input);
  const WaveletConfig w = wavelet_of(c);
  const LeaderPyramid pyr = analyze(x, w);
  const RegressionSystem sys = build_system(w.j1, w.j2);
  const EstimatePair lr = linreg(regression_stats(pyr, sys), sys);
  const fs::path out = c.out_dir;
  io::write_pyramid(out, "leaders", pyr);
  io::write_grid(out / "linreg_v.f64", lr.v);
  io::write_grid(out / "linreg_h.f64", lr.h);
  std::cout << "octaves " << w.j1 << ".." << w.j2 << ", clamped leaders " << pyr.clamped << '\n';
  return 0;
}

int run_segment(const Common& c, const std::string& input, const std::string& truth_path) {
  const ScalarField x = io::read_image(input);
  const WaveletConfig w = wavelet_of(c);
  const LeaderPyramid pyr = analyze(x, w);
  const RegressionSystem sys = build_system(w.j1, w.j2);
  const RegressionData data = regression_stats(pyr, sys);
  const Method method = parse_method(c.method);
  const Engine engine = engine_of(c, method);
  const Estimation est = estimate(method, engine, data, sys, params_of(c));
  SegmentationMask seg = trof_threshold(est.h);
  std::tie(seg.H0, seg.H1) = global_h(pyr, seg.map, sys);

  const fs::path out = c.out_dir;
  fs::create_directories(out);
  io::write_mask_pgm(out / "mask.pgm", seg.map);
  io::write_mask_raw(out / "mask.raw", seg.map);
  io::write_grid(out / "h.f64", est.h);
  if (est.v) io::write_grid(out / "v.f64", *est.v);
  io::write_trace_csv(out / "trace.csv", est.trace);

  std::printf("%s/%s: %ld iterations (%s), %.2f s, threshold %.4f, H0 %.4f, H1 %.4f\n",
              std::string(to_string(method)).c_str(), std::string(to_string(engine)).c_str(),
              est.trace.iterations, std::string(to_string(est.trace.reason)).c_str(),
              est.trace.seconds, seg.threshold, seg.H0, seg.H1);
  if (!truth_path.empty()) {
    const LabelMap truth = io::read_mask_pgm(truth_path);
    std::printf("score %.4f\n", classification_score(seg.map, truth));
  }
  return 0;
}

int run_bench(const Common& c, const std::string& preset_id, const std::string& config,
              std::size_t n, int realizations, unsigned workers) {
  ExperimentConfig cfg = config.empty() ? preset(preset_id) : config_from_keys(io::read_config(config));
  if (config.empty()) {
    cfg.N = n;
    cfg.realizations = realizations;
    cfg.master_seed = c.seed;
    cfg.max_iter = c.max_iter;
    cfg.gap_tol = c.gap_tol;
    cfg.wavelet = wavelet_of(c);
  }
  if (workers > 0) cfg.workers = workers;
  const auto records = run_config(cfg);
  const fs::path out = c.out_dir;
  write_records_csv(out / ("records_" + cfg.id + ".csv"), records);
  if (records.empty()) return 0;
  const auto best = best_over_grid(records);
  write_best_csv(out / ("best_" + cfg.id + ".csv"), best);
  write_cost_csv(out / ("cost_" + cfg.id + ".csv"), cost_table(records));
  for (const auto& b : best) {
    std::printf("%-4s %-9s %-5s lambda=%-8.4g alpha=%-8.4g score %.2f%% +- %.2f  dH %.3f +- %.3f\n",
                b.config.c_str(), std::string(to_string(b.method)).c_str(),
                std::string(to_string(b.engine)).c_str(), b.lambda, b.alpha, 100.0 * b.mean_score,
                100.0 * b.sd_score, b.mean_delta_h, b.sd_delta_h);
  }
  return 0;
}

int run_gap(const Common& c, const std::string& input) {
  const ScalarField x = io::read_image(input);
  const WaveletConfig w = wavelet_of(c);
  const RegressionSystem sys = build_system(w.j1, w.j2);
  const RegressionData data = regression_stats(analyze(x, w), sys);
  const Method method = parse_method(c.method);
  std::vector<Engine> engines;
  if (c.engine.empty()) {
    engines = {Engine::DFB, Engine::FISTA, Engine::PD, Engine::AcPD};
  } else {
    engines = {parse_engine(c.engine)};
  }
  const fs::path out = c.out_dir;
  fs::create_directories(out);
  for (Engine e : engines) {
    const Estimation est = estimate(method, e, data, sys, params_of(c));
    const fs::path file = out / ("gap_" + std::string(to_string(method)) + "_" +
                                 std::string(to_string(e)) + ".csv");
    io::write_trace_csv(file, est.trace);
    std::printf("%s: %ld iterations (%s)\n", file.string().c_str(), est.trace.iterations,
                std::string(to_string(est.trace.reason)).c_str());
  }
  return 0;
}

int run_mu_table(const Common& c, int jmax) {
  const fs::path out = c.out_dir;
  const auto rows = mu_table(jmax);
  write_mu_csv(out / "mu_table.csv", rows);
  for (const auto& r : rows) std::printf("%d %d %.6f %.6f\n", r.j1, r.j2, r.mu, r.J_inv_norm);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractal texture segmentation toolkit"};
  app.require_subcommand(1);
  Common c;
  std::string input, truth, preset_id = "I", config;
  std::size_t n = 256;
  int realizations = 3;
  int jmax = 8;
  unsigned workers = 0;

  auto* synth = app.add_subcommand("synth", "synthesize piecewise fractal textures");
  synth->add_option("--preset", preset_id, "configuration I..VI or II'")->capture_default_str();
  synth->add_option("--config", config, "configuration file (key = value per line)");
  synth->add_option("-n,--size", n, "grid side")->capture_default_str();
  synth->add_option("--seed", c.seed, "master seed")->capture_default_str();
  synth->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* an = app.add_subcommand("analyze", "leader pyramid and linear-regression maps");
  an->add_option("input", input, "FSEG1 grid or PGM")->required();
  add_wavelet_flags(an, c);
  an->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* seg = app.add_subcommand("segment", "estimate and threshold one texture");
  seg->add_option("input", input, "FSEG1 grid or PGM")->required();
  seg->add_option("--truth", truth, "ground-truth PGM mask for scoring");
  add_wavelet_flags(seg, c);
  add_solver_flags(seg, c);
  seg->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* bench = app.add_subcommand("bench", "grid search over a configuration");
  bench->add_option("--preset", preset_id, "configuration I..VI or II'")->capture_default_str();
  bench->add_option("--config", config, "configuration file (overrides the other flags)");
  bench->add_option("-n,--size", n)->capture_default_str();
  bench->add_option("--realizations", realizations)->capture_default_str();
  bench->add_option("--workers", workers, "worker threads");
  bench->add_option("--seed", c.seed)->capture_default_str();
  add_wavelet_flags(bench, c);
  bench->add_option("--gap-tol", c.gap_tol);
  bench->add_option("--max-iter", c.max_iter)->capture_default_str();
  bench->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* gap = app.add_subcommand("gap", "normalized duality gap traces per engine");
  gap->add_option("input", input, "FSEG1 grid or PGM")->required();
  add_wavelet_flags(gap, c);
  add_solver_flags(gap, c);
  gap->add_option("--out-dir", c.out_dir)->capture_default_str();

  auto* mu = app.add_subcommand("mu-table", "strong convexity constant per octave range");
  mu->add_option("--jmax", jmax)->capture_default_str();
  mu->add_option("--out-dir", c.out_dir)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return run_synth(c, preset_id, config, n);
    if (*an) return run_analyze(c, input);
    if (*seg) return run_segment(c, input, truth);
    if (*bench) return run_bench(c, preset_id, config, n, realizations, workers);
    if (*gap) return run_gap(c, input);
    if (*mu) return run_mu_table(c, jmax);
  } catch (const fracseg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
