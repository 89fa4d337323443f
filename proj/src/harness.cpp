#include "fracseg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>
#include <type_traits>

#include "fracseg/error.hpp"
#include "fracseg/fidelity.hpp"
#include "fracseg/io.hpp"
#include "fracseg/segmentation.hpp"

namespace fracseg {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::TROF: return "T-ROF";
    case Method::TJoint: return "T-joint";
    case Method::TCoupled: return "T-coupled";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s.rfind("t-", 0) == 0) s.erase(0, 2);
  if (s == "rof") return Method::TROF;
  if (s == "joint") return Method::TJoint;
  if (s == "coupled") return Method::TCoupled;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi >= lo) || count < 1) throw ConfigError("log_grid: need 0 < lo <= hi, count >= 1");
  std::vector<double> v;
  if (count == 1) return {lo};
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) v.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
  return v;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.lambdas.empty()) throw ConfigError(cfg.id + ": empty lambda grid");
  const bool needs_alpha = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                       [](const MethodEngines& m) { return m.method != Method::TROF; });
  if (needs_alpha && cfg.alphas.empty()) throw ConfigError(cfg.id + ": empty alpha grid");
  for (const auto& m : cfg.methods) {
    if (m.engines.empty()) throw ConfigError(cfg.id + ": method without engines");
  }
  if (cfg.realizations < 1) throw ConfigError(cfg.id + ": realizations must be >= 1");
  if (!(cfg.sigma2_0 > 0.0) || !(cfg.sigma2_0 + cfg.d_sigma2 > 0.0)) {
    throw ParameterError(cfg.id + ": region variances must be positive");
  }
  for (double h : {cfg.H0, cfg.H0 + cfg.dH}) {
    if (!(h > 0.0 && h < 1.0)) throw ParameterError(cfg.id + ": regularity outside (0, 1)");
  }
  if (cfg.workers < 1) throw ConfigError(cfg.id + ": workers must be >= 1");
  validate(cfg.wavelet, cfg.N, cfg.N);
}

std::vector<MethodEngines> default_methods() {
  return {{Method::TROF, {Engine::FISTA}},
          {Method::TJoint, {Engine::AcPD}},
          {Method::TCoupled, {Engine::AcPD}}};
}

std::vector<std::string> preset_ids() { return {"I", "II", "III", "IV", "V", "VI", "II'"}; }

ExperimentConfig preset(std::string_view id) {
  static const std::map<std::string, std::pair<double, double>, std::less<>> contrasts = {
      {"I", {0.1, 0.2}},  {"II", {0.15, 0.1}}, {"III", {0.1, 0.1}},
      {"IV", {0.05, 0.1}}, {"V", {0.1, 0.05}},  {"VI", {0.1, 0.025}},
  };
  ExperimentConfig cfg;
  cfg.id = std::string(id);
  cfg.methods = default_methods();
  cfg.lambdas = log_grid(1e-1, 1e3, 9);
  cfg.alphas = log_grid(1e-2, 1e3, 6);
  if (id == "II'") {
    // 0.6 and 0.15 read as standard deviations.
    cfg.sigma2_0 = 0.6 * 0.6;
    cfg.d_sigma2 = 0.75 * 0.75 - cfg.sigma2_0;
    cfg.dH = 0.1;
    return cfg;
  }
  auto it = contrasts.find(id);
  if (it == contrasts.end()) throw ConfigError("unknown configuration '" + std::string(id) + "'");
  cfg.d_sigma2 = it->second.first;
  cfg.dH = it->second.second;
  return cfg;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": '" + v + "' is not a number");
  }
}

long to_long(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError("config key " + key + ": integer expected");
  return static_cast<long>(d);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_keys(const io::KeyValues& kv) {
  ExperimentConfig cfg;
  if (auto it = kv.find("preset"); it != kv.end()) {
    cfg = preset(it->second);
  } else {
    cfg.methods = default_methods();
    cfg.lambdas = log_grid(1e-1, 1e3, 9);
    cfg.alphas = log_grid(1e-2, 1e3, 6);
  }
  auto num = [&](const char* key, auto& field) {
    if (auto it = kv.find(key); it != kv.end()) {
      using T = std::decay_t<decltype(field)>;
      if constexpr (std::is_floating_point_v<T>) {
        field = to_double(key, it->second);
      } else {
        const long v = to_long(key, it->second);
        if (v < 0) throw ConfigError(std::string("config key ") + key + " must be >= 0");
        field = static_cast<T>(v);
      }
    }
  };
  auto grid = [&](const std::string& name, std::vector<double>& values) {
    if (auto it = kv.find(name + "s"); it != kv.end()) {
      values.clear();
      for (const auto& tok : split(it->second, ',')) values.push_back(to_double(name + "s", tok));
    }
    const bool any = kv.count(name + "_min") || kv.count(name + "_max") || kv.count(name + "_count");
    if (!any) return;
    double lo = values.empty() ? 1.0 : values.front();
    double hi = values.empty() ? 1.0 : values.back();
    long count = static_cast<long>(values.size());
    if (auto it = kv.find(name + "_min"); it != kv.end()) lo = to_double(name + "_min", it->second);
    if (auto it = kv.find(name + "_max"); it != kv.end()) hi = to_double(name + "_max", it->second);
    if (auto it = kv.find(name + "_count"); it != kv.end()) count = to_long(name + "_count", it->second);
    values = log_grid(lo, hi, static_cast<int>(count));
  };

  static const std::vector<std::string> known = {
      "preset", "id", "sigma2_0", "H0", "d_sigma2", "dH", "N", "realizations", "seed", "methods",
      "lambda_min", "lambda_max", "lambda_count", "alpha_min", "alpha_max", "alpha_count",
      "lambdas", "alphas", "j1", "j2", "vanishing_moments", "max_iter", "gap_tol",
      "checkpoint_every", "workers", "variance", "spectrum"};
  for (const auto& [k, v] : kv) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  if (auto it = kv.find("id"); it != kv.end()) cfg.id = it->second;
  num("sigma2_0", cfg.sigma2_0);
  num("H0", cfg.H0);
  num("d_sigma2", cfg.d_sigma2);
  num("dH", cfg.dH);
  num("N", cfg.N);
  num("realizations", cfg.realizations);
  num("seed", cfg.master_seed);
  num("j1", cfg.wavelet.j1);
  num("j2", cfg.wavelet.j2);
  num("vanishing_moments", cfg.wavelet.vanishing_moments);
  num("max_iter", cfg.max_iter);
  num("checkpoint_every", cfg.checkpoint_every);
  num("workers", cfg.workers);
  if (auto it = kv.find("gap_tol"); it != kv.end()) cfg.gap_tol = to_double("gap_tol", it->second);
  if (auto it = kv.find("variance"); it != kv.end()) {
    if (it->second == "exact") {
      cfg.variance = VarianceMode::Exact;
    } else if (it->second == "raw") {
      cfg.variance = VarianceMode::Raw;
    } else {
      throw ConfigError("config key variance: expected exact or raw");
    }
  }
  if (auto it = kv.find("spectrum"); it != kv.end()) {
    if (it->second == "lattice") {
      cfg.spectrum = Spectrum::Lattice;
    } else if (it->second == "aliased") {
      cfg.spectrum = Spectrum::Aliased;
    } else {
      throw ConfigError("config key spectrum: expected lattice or aliased");
    }
  }
  if (auto it = kv.find("methods"); it != kv.end()) {
    cfg.methods.clear();
    for (const auto& item : split(it->second, ',')) {
      const auto colon = item.find(':');
      MethodEngines me{parse_method(item.substr(0, colon)), {}};
      if (colon == std::string::npos) {
        me.engines = {me.method == Method::TROF ? Engine::FISTA : Engine::AcPD};
      } else {
        for (const auto& e : split(item.substr(colon + 1), '+')) me.engines.push_back(parse_engine(e));
      }
      cfg.methods.push_back(std::move(me));
    }
  }
  grid("lambda", cfg.lambdas);
  grid("alpha", cfg.alphas);
  return cfg;
}

std::uint64_t realization_seed(const ExperimentConfig& cfg, int realization) {
  return region_seed(cfg.master_seed, static_cast<std::uint64_t>(realization));
}

std::vector<FractalParams> region_params(const ExperimentConfig& cfg, std::uint64_t seed) {
  FractalParams bg;
  bg.H = cfg.H0;
  bg.sigma = std::sqrt(cfg.sigma2_0);
  bg.N = cfg.N;
  bg.seed = region_seed(seed, 0);
  bg.spectrum = cfg.spectrum;
  FractalParams fg = bg;
  fg.H = cfg.H0 + cfg.dH;
  fg.sigma = std::sqrt(cfg.sigma2_0 + cfg.d_sigma2);
  fg.seed = region_seed(seed, 1);
  return {bg, fg};
}

bool record_less(const ResultRecord& a, const ResultRecord& b) {
  return std::tie(a.config, a.method, a.engine, a.lambda, a.alpha, a.realization) <
         std::tie(b.config, b.method, b.engine, b.lambda, b.alpha, b.realization);
}

namespace {

struct Cell {
  Method method;
  Engine engine;
  double lambda;
  double alpha;
};

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(context + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(context + e.what());
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(context + e.what());
  } catch (const IoError& e) {
    throw IoError(context + e.what());
  } catch (const Error& e) {
    throw Error(context + e.what());
  }
}

// Runs jobs 0..n-1 on at most `workers` threads; the first exception wins.
template <class Job>
void parallel_for(std::size_t n, unsigned workers, Job job) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = std::min<std::size_t>(workers, n);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<ResultRecord> run_config(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) return {};
  validate(cfg);

  std::vector<Cell> cells;
  for (const auto& me : cfg.methods) {
    for (Engine e : me.engines) {
      for (double lam : cfg.lambdas) {
        if (me.method == Method::TROF) {
          cells.push_back({me.method, e, lam, 0.0});
          continue;
        }
        for (double al : cfg.alphas) cells.push_back({me.method, e, lam, al});
      }
    }
  }

  const RegressionSystem sys = build_system(cfg.wavelet.j1, cfg.wavelet.j2);
  const LabelMap truth = ellipse_mask(cfg.N);
  std::vector<ResultRecord> records;

  for (int s = 0; s < cfg.realizations; ++s) {
    const std::uint64_t seed = realization_seed(cfg, s);
    const std::string where = cfg.id + " seed " + std::to_string(seed) + ": ";
    LeaderPyramid pyr;
    RegressionData data;
    EstimatePair lr;
    try {
      const ScalarField x = synth_piecewise({truth, region_params(cfg, seed)}, cfg.variance);
      pyr = analyze(x, cfg.wavelet);
      data = regression_stats(pyr, sys);
      lr = linreg(data, sys);
    } catch (const Error&) {
      rethrow_with_context(where);
    }

    std::vector<ResultRecord> local(cells.size());
    parallel_for(cells.size(), cfg.workers, [&](std::size_t i) {
      const Cell& cell = cells[i];
      SolverParams params;
      params.lambda = cell.lambda;
      params.alpha = cell.method == Method::TROF ? 1.0 : cell.alpha;
      params.max_iter = cfg.max_iter;
      params.gap_tol = cfg.gap_tol;
      params.checkpoint_every = cfg.checkpoint_every;
      ResultRecord rec;
      rec.config = cfg.id;
      rec.method = cell.method;
      rec.engine = cell.engine;
      rec.lambda = cell.lambda;
      rec.alpha = cell.alpha;
      rec.realization = s;
      rec.seed = seed;
      rec.max_iter = cfg.max_iter;
      try {
        ScalarField h;
        SolverTrace trace;
        if (cell.method == Method::TROF) {
          auto r = solve_rof(lr.h, params, cell.engine);
          h = std::move(r.h);
          trace = std::move(r.trace);
        } else {
          auto r = cell.method == Method::TJoint ? solve_joint(data, sys, params, cell.engine)
                                                 : solve_coupled(data, sys, params, cell.engine);
          h = std::move(r.estimate.h);
          trace = std::move(r.trace);
        }
        rec.iterations = trace.iterations;
        rec.seconds = trace.seconds;
        rec.reason = trace.reason;
        try {
          const SegmentationMask seg = trof_threshold(h);
          rec.score = classification_score(seg.map, truth);
          const auto [h0, h1] = global_h(pyr, seg.map, sys);
          rec.delta_h = h1 - h0;
        } catch (const DegenerateInputError&) {
          // A constant map cannot be split: everything is one region.
          rec.score = classification_score(LabelMap(cfg.N, cfg.N), truth);
          rec.delta_h = 0.0;
        }
      } catch (const Error&) {
        std::ostringstream ctx;
        ctx << where << to_string(cell.method) << '/' << to_string(cell.engine)
            << " lambda=" << cell.lambda << " alpha=" << cell.alpha << ": ";
        rethrow_with_context(ctx.str());
      }
      local[i] = std::move(rec);
    });
    records.insert(records.end(), std::make_move_iterator(local.begin()),
                   std::make_move_iterator(local.end()));
  }
  std::sort(records.begin(), records.end(), record_less);
  return records;
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::vector<BestCell> best_over_grid(const std::vector<ResultRecord>& records) {
  if (records.empty()) throw ConfigError("best_over_grid: no records");
  using Key = std::tuple<std::string, Method, Engine, double, double>;
  std::map<Key, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) groups[{r.config, r.method, r.engine, r.lambda, r.alpha}].push_back(&r);

  std::map<std::pair<std::string, Method>, BestCell> best;
  for (const auto& [key, members] : groups) {
    std::vector<double> scores, dh;
    for (const auto* r : members) {
      scores.push_back(r->score);
      dh.push_back(r->delta_h);
    }
    BestCell cell;
    std::tie(cell.config, cell.method, cell.engine, cell.lambda, cell.alpha) = key;
    cell.seeds = static_cast<int>(members.size());
    std::tie(cell.mean_score, cell.sd_score) = mean_sd(scores);
    std::tie(cell.mean_delta_h, cell.sd_delta_h) = mean_sd(dh);
    auto [it, inserted] = best.try_emplace({cell.config, cell.method}, cell);
    if (inserted) continue;
    const BestCell& cur = it->second;
    // Ties go to the smaller (lambda, alpha) whatever the engine.
    const bool better =
        cell.mean_score > cur.mean_score ||
        (cell.mean_score == cur.mean_score &&
         std::tie(cell.lambda, cell.alpha) < std::tie(cur.lambda, cur.alpha));
    if (better) it->second = cell;
  }
  std::vector<BestCell> out;
  for (auto& [k, v] : best) out.push_back(v);
  return out;
}

std::string CostRow::iterations_cell() const {
  std::ostringstream os;
  if (capped > 0) {
    os << "> " << max_iter;
  } else {
    os.setf(std::ios::fixed);
    os.precision(1);
    os << mean_iterations << " +- " << sd_iterations;
  }
  return os.str();
}

std::vector<CostRow> cost_table(const std::vector<ResultRecord>& records) {
  using Key = std::tuple<std::string, Method, Engine>;
  std::map<Key, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) groups[{r.config, r.method, r.engine}].push_back(&r);
  std::vector<CostRow> rows;
  for (const auto& [key, members] : groups) {
    CostRow row;
    std::tie(row.config, row.method, row.engine) = key;
    std::vector<double> it, sec;
    for (const auto* r : members) {
      it.push_back(static_cast<double>(r->iterations));
      sec.push_back(r->seconds);
      row.capped += r->reason == Termination::IterCap ? 1 : 0;
      row.max_iter = std::max(row.max_iter, r->max_iter);
    }
    row.runs = static_cast<int>(members.size());
    std::tie(row.mean_iterations, row.sd_iterations) = mean_sd(it);
    std::tie(row.mean_seconds, row.sd_seconds) = mean_sd(sec);
    rows.push_back(row);
  }
  return rows;
}

ScalarField composite(const ScalarField& a, const ScalarField& b, const LabelMap& mask) {
  if (!a.same_shape(b)) throw ConfigError("composite: images differ in size");
  if (mask.rows != a.rows() || mask.cols != a.cols()) {
    throw ConfigError("composite: mask does not match the image size");
  }
  auto normalized = [](const ScalarField& x) {
    double m = 0.0;
    for (double v : x.values()) m += v;
    m /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x.values()) var += (v - m) * (v - m);
    var /= static_cast<double>(x.size());
    if (!(var > 0.0)) throw DegenerateInputError("composite: constant image cannot be normalized");
    const double s = 1.0 / std::sqrt(var);
    ScalarField out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) * s;
    return out;
  };
  const ScalarField na = normalized(a);
  const ScalarField nb = normalized(b);
  ScalarField out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask.labels[i] ? nb[i] : na[i];
  return out;
}

ScalarField ingest_real_texture(const std::filesystem::path& pathA,
                                const std::filesystem::path& pathB, const LabelMap& mask) {
  return composite(io::read_image(pathA), io::read_image(pathB), mask);
}

std::vector<MuRow> mu_table(int jmax) {
  if (jmax < 2) throw ConfigError("mu_table: jmax must be >= 2");
  std::vector<MuRow> rows;
  for (int j1 = 1; j1 < jmax; ++j1) {
    for (int j2 = j1 + 1; j2 <= jmax; ++j2) {
      const RegressionSystem sys = build_system(j1, j2);
      rows.push_back({j1, j2, sys.mu, sys.J_inv_norm});
    }
  }
  return rows;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(10);
  return out;
}

}  // namespace

void write_records_csv(const std::filesystem::path& path, const std::vector<ResultRecord>& records) {
  auto out = open_csv(path);
  out << "config,method,engine,lambda,alpha,realization,seed,score,delta_h,iterations,seconds,reason\n";
  for (const auto& r : records) {
    out << r.config << ',' << to_string(r.method) << ',' << to_string(r.engine) << ',' << r.lambda
        << ',' << r.alpha << ',' << r.realization << ',' << r.seed << ',' << r.score << ','
        << r.delta_h << ',' << r.iterations << ',' << r.seconds << ',' << to_string(r.reason)
        << '\n';
  }
}

void write_best_csv(const std::filesystem::path& path, const std::vector<BestCell>& cells) {
  auto out = open_csv(path);
  out << "config,method,engine,lambda,alpha,seeds,mean_score,sd_score,mean_delta_h,sd_delta_h\n";
  for (const auto& c : cells) {
    out << c.config << ',' << to_string(c.method) << ',' << to_string(c.engine) << ',' << c.lambda
        << ',' << c.alpha << ',' << c.seeds << ',' << c.mean_score << ',' << c.sd_score << ','
        << c.mean_delta_h << ',' << c.sd_delta_h << '\n';
  }
}

void write_cost_csv(const std::filesystem::path& path, const std::vector<CostRow>& rows) {
  auto out = open_csv(path);
  out << "config,method,engine,runs,capped,iterations,mean_iterations,sd_iterations,mean_seconds,"
         "sd_seconds\n";
  for (const auto& r : rows) {
    out << r.config << ',' << to_string(r.method) << ',' << to_string(r.engine) << ',' << r.runs
        << ',' << r.capped << ",\"" << r.iterations_cell() << "\"," << r.mean_iterations << ','
        << r.sd_iterations << ',' << r.mean_seconds << ',' << r.sd_seconds << '\n';
  }
}

void write_mu_csv(const std::filesystem::path& path, const std::vector<MuRow>& rows) {
  auto out = open_csv(path);
  out << "j1,j2,mu,J_inv_norm\n";
  for (const auto& r : rows) out << r.j1 << ',' << r.j2 << ',' << r.mu << ',' << r.J_inv_norm << '\n';
}

}  // namespace fracseg
