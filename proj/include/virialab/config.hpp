#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "virialab/analysis.hpp"
#include "virialab/dynamics.hpp"
#include "virialab/errors.hpp"
#include "virialab/potentials.hpp"

namespace virialab {

using Json = nlohmann::ordered_json;

enum class ExperimentKind { Sweep, ClaimCompare, ExponentTable, Cv, Relax, Pde };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::ClaimCompare: return "claim-compare";
    case ExperimentKind::ExponentTable: return "exponent-table";
    case ExperimentKind::Cv: return "cv";
    case ExperimentKind::Relax: return "relax";
    case ExperimentKind::Pde: return "pde";
  }
  return "unknown";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "sweep") return ExperimentKind::Sweep;
  if (s == "claim-compare") return ExperimentKind::ClaimCompare;
  if (s == "exponent-table") return ExperimentKind::ExponentTable;
  if (s == "cv") return ExperimentKind::Cv;
  if (s == "relax") return ExperimentKind::Relax;
  if (s == "pde") return ExperimentKind::Pde;
  throw ConfigError("unknown experiment kind '" + s +
                    "' (expected sweep, claim-compare, exponent-table, cv, relax or pde)");
}

struct RelaxSettings {
  /// 1.5 keeps second neighbours outside a unit cutoff.
  double rho = 1.5;
  /// Displacement of the perturbed particle, as a fraction of the spacing.
  double displacement = 0.1;
  std::uint64_t particle = 0;
  /// Gradient step; 0 means 0.5 / lattice stiffness.
  double step = 0.0;
  double tol = 1e-8;
  std::uint64_t max_steps = 1000000;
  friend bool operator==(const RelaxSettings&, const RelaxSettings&) = default;
};

struct PdeLawSettings {
  /// claim1, claim2, meanfield or tabulated
  std::string type = "meanfield";
  double alpha = 2.0;
  double beta = 1.5;
  double r0 = 1.0;
  double r1 = 1.0;
  double c_v = 0.0;
  double noise_sigma = 1.0;
  /// tabulated: a curve.csv produced by a sweep, or explicit nodes.
  std::string curve_csv;
  std::vector<double> rho;
  std::vector<double> p;
  friend bool operator==(const PdeLawSettings&, const PdeLawSettings&) = default;
};

struct PdeInitialSettings {
  /// cosine: mean + amplitude cos(2 pi x); bump: mean + amplitude exp(-(x-center)^2/(2 width^2));
  /// values: explicit cell values
  std::string shape = "cosine";
  double mean = 1.0;
  double amplitude = 0.1;
  double center = 0.5;
  double width = 0.05;
  std::vector<double> values;
  friend bool operator==(const PdeInitialSettings&, const PdeInitialSettings&) = default;
};

struct PdeSettings {
  PdeLawSettings law;
  PdeInitialSettings initial;
  std::size_t grid_size = 200;
  double t_end = 0.01;
  /// 0 means half the explicit stability bound.
  double dt = 0.0;
  std::size_t snapshot_stride = 100;
  friend bool operator==(const PdeSettings&, const PdeSettings&) = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Sweep;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";
  /// rho_nominal and seed inside are per-point and ignored here.
  SimulationConfig simulation;
  std::vector<double> rho_grid;
  std::vector<std::pair<double, double>> fit_windows;
  PredictionKind prediction = PredictionKind::Claim1;
  std::optional<std::pair<double, double>> compare_window;
  bool weighted_fit = false;
  RelaxSettings relax;
  PdeSettings pde;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

/// Strict view over a JSON object: every key must be consumed, so typos in
/// config files are reported instead of silently ignored.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path_ + "." + key + ": required field missing");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const Json& v = at(key);
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return get<T>(key);
  }

  double number_or_inf(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const Json& v = j_.at(key);
    if (v.is_null()) return kInfinity;
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) return kInfinity;
    if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number, \"inf\" or null");
    return v.get<double>();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(path_ + "." + item.key() + ": unknown field");
    }
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json("inf"); }

}  // namespace detail

inline PotentialSpec potential_from_json(const Json& j, const std::string& path = "potential") {
  detail::StrictObject o(j, path);
  const auto family = o.get<std::string>("family");
  PotentialSpec spec;
  if (family == "power_law_repulsive") {
    spec = PowerLawRepulsive{o.get<double>("alpha"), o.number_or_inf("r1", 1.0)};
  } else if (family == "power_law_attractive_repulsive") {
    spec = PowerLawAttractiveRepulsive{o.get<double>("alpha"), o.get<double>("beta"), o.get<double>("r0"),
                                       o.get<double>("r1")};
  } else if (family == "gaussian_repulsive") {
    spec = GaussianRepulsive{o.get_or<double>("width", 1.0)};
  } else if (family == "gaussian_cubic") {
    spec = GaussianCubic{o.get_or<double>("width", 1.0)};
  } else if (family == "none") {
    spec = NoInteraction{};
  } else {
    throw ConfigError(path + ".family: unknown potential family '" + family + "'");
  }
  o.finish();
  validate(spec);
  return spec;
}

inline Json potential_to_json(const PotentialSpec& spec) {
  Json j;
  j["family"] = family_name(spec);
  std::visit(detail::Overloaded{
                 [&](const PowerLawRepulsive& p) {
                   j["alpha"] = p.alpha;
                   j["r1"] = detail::number_json(p.r1);
                 },
                 [&](const PowerLawAttractiveRepulsive& p) {
                   j["alpha"] = p.alpha;
                   j["beta"] = p.beta;
                   j["r0"] = p.r0;
                   j["r1"] = p.r1;
                 },
                 [&](const GaussianRepulsive& p) { j["width"] = p.width; },
                 [&](const GaussianCubic& p) { j["width"] = p.width; },
                 [](const NoInteraction&) {},
             },
             spec);
  return j;
}

namespace detail {

inline std::vector<double> rho_grid_from_json(const Json& j, const std::string& path) {
  if (j.is_array()) {
    try {
      return j.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  StrictObject o(j, path);
  const double lo = o.get<double>("min");
  const double hi = o.get<double>("max");
  const auto n = o.get<std::size_t>("points");
  const auto spacing = o.get_or<std::string>("spacing", "log");
  o.finish();
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ConfigError(path + ": need 0 < min < max and points >= 2");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    if (spacing == "log")
      grid[i] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    else if (spacing == "linear")
      grid[i] = lo + t * (hi - lo);
    else
      throw ConfigError(path + ".spacing: expected log or linear");
  }
  return grid;
}

inline std::pair<double, double> window_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(path + ": expected [rho_min, rho_max]");
  std::pair<double, double> w{j[0].get<double>(), j[1].get<double>()};
  if (!(w.first < w.second)) throw ConfigError(path + ": rho_min must be below rho_max");
  return w;
}

inline void simulation_from_json(const Json& j, SimulationConfig& sim, const std::string& path) {
  StrictObject o(j, path);
  sim.box = TorusBox(o.get_or<int>("dimension", 1), o.get<double>("side"));
  sim.noise_sigma = o.get_or<double>("noise_sigma", 1.0);
  sim.dt = o.get_or<double>("dt", 1e-4);
  sim.auto_dt = o.get_or<bool>("auto_dt", true);
  if (o.has("burn_in_steps")) sim.burn_in_steps = o.get<std::uint64_t>("burn_in_steps");
  o.get_or<Json>("burn_in_steps", nullptr);
  sim.n_samples = o.get_or<std::uint64_t>("n_samples", 1000);
  if (o.has("sample_stride")) sim.sample_stride = o.get<std::uint64_t>("sample_stride");
  o.get_or<Json>("sample_stride", nullptr);
  if (o.has("min_separation")) sim.min_separation = o.get<double>("min_separation");
  o.get_or<Json>("min_separation", nullptr);
  const std::string default_mode = sim.box.dimension >= 2 ? "grid" : "repulsive_lattice";
  sim.init_mode = init_mode_from_string(o.get_or<std::string>("init_mode", default_mode));
  if (o.has("trajectory_csv")) sim.trajectory_csv = o.get<std::string>("trajectory_csv");
  o.get_or<Json>("trajectory_csv", nullptr);
  o.finish();
  if (sim.noise_sigma < 0.0) throw ConfigError(path + ".noise_sigma: must be nonnegative");
  if (!(sim.dt > 0.0)) throw ConfigError(path + ".dt: must be positive");
  if (sim.n_samples == 0) throw ConfigError(path + ".n_samples: must be positive");
  if (sim.sample_stride && *sim.sample_stride == 0) throw ConfigError(path + ".sample_stride: must be positive");
  if (sim.min_separation && !(*sim.min_separation > 0.0))
    throw ConfigError(path + ".min_separation: must be positive");
}

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace detail

/// Parses and validates an experiment config; every default is filled in.
inline ExperimentConfig config_from_json(const Json& j) {
  detail::StrictObject o(j, "config");
  ExperimentConfig cfg;
  cfg.kind = experiment_kind_from_string(o.get<std::string>("kind"));
  if (o.has("seed")) cfg.seed = o.get<std::uint64_t>("seed");
  o.get_or<Json>("seed", nullptr);
  cfg.output_dir = o.get_or<std::string>("output_dir", "out");

  const bool needs_potential = cfg.kind != ExperimentKind::Pde;
  const bool needs_simulation = cfg.kind == ExperimentKind::Sweep || cfg.kind == ExperimentKind::ClaimCompare ||
                                cfg.kind == ExperimentKind::ExponentTable || cfg.kind == ExperimentKind::Relax;

  if (needs_potential || o.has("potential")) cfg.simulation.spec = potential_from_json(o.at("potential"));
  if (needs_simulation || o.has("simulation"))
    detail::simulation_from_json(o.at("simulation"), cfg.simulation, "config.simulation");
  else
    cfg.simulation.box = TorusBox(o.get_or<int>("dimension", 1), 1.0);
  if (!needs_simulation && !o.has("simulation")) {
    // cv only needs a dimension
  }

  if (o.has("rho_grid")) cfg.rho_grid = detail::rho_grid_from_json(o.at("rho_grid"), "config.rho_grid");
  o.get_or<Json>("rho_grid", nullptr);
  if (o.has("fit_windows")) {
    const Json& w = o.at("fit_windows");
    if (!w.is_array()) throw ConfigError("config.fit_windows: expected an array of [rho_min, rho_max]");
    for (std::size_t i = 0; i < w.size(); ++i)
      cfg.fit_windows.push_back(detail::window_from_json(w[i], "config.fit_windows[" + std::to_string(i) + "]"));
  }
  o.get_or<Json>("fit_windows", nullptr);
  cfg.prediction = prediction_kind_from_string(o.get_or<std::string>("prediction", "claim1"));
  if (o.has("compare_window")) cfg.compare_window = detail::window_from_json(o.at("compare_window"), "config.compare_window");
  o.get_or<Json>("compare_window", nullptr);
  cfg.weighted_fit = o.get_or<bool>("weighted_fit", false);

  if (o.has("relax")) {
    detail::StrictObject r(o.at("relax"), "config.relax");
    cfg.relax.rho = r.get_or<double>("rho", cfg.relax.rho);
    cfg.relax.displacement = r.get_or<double>("displacement", cfg.relax.displacement);
    cfg.relax.particle = r.get_or<std::uint64_t>("particle", cfg.relax.particle);
    cfg.relax.step = r.get_or<double>("step", cfg.relax.step);
    cfg.relax.tol = r.get_or<double>("tol", cfg.relax.tol);
    cfg.relax.max_steps = r.get_or<std::uint64_t>("max_steps", cfg.relax.max_steps);
    r.finish();
  }
  o.get_or<Json>("relax", nullptr);

  if (o.has("pde")) {
    detail::StrictObject p(o.at("pde"), "config.pde");
    cfg.pde.grid_size = p.get_or<std::size_t>("grid_size", cfg.pde.grid_size);
    cfg.pde.t_end = p.get_or<double>("t_end", cfg.pde.t_end);
    cfg.pde.dt = p.get_or<double>("dt", cfg.pde.dt);
    cfg.pde.snapshot_stride = p.get_or<std::size_t>("snapshot_stride", cfg.pde.snapshot_stride);
    if (p.has("law")) {
      detail::StrictObject l(p.at("law"), "config.pde.law");
      auto& law = cfg.pde.law;
      law.type = l.get_or<std::string>("type", law.type);
      law.alpha = l.get_or<double>("alpha", law.alpha);
      law.beta = l.get_or<double>("beta", law.beta);
      law.r0 = l.get_or<double>("r0", law.r0);
      law.r1 = l.get_or<double>("r1", law.r1);
      law.c_v = l.get_or<double>("c_v", law.c_v);
      law.noise_sigma = l.get_or<double>("noise_sigma", law.noise_sigma);
      law.curve_csv = l.get_or<std::string>("curve_csv", law.curve_csv);
      law.rho = l.get_or<std::vector<double>>("rho", law.rho);
      law.p = l.get_or<std::vector<double>>("p", law.p);
      l.finish();
      if (law.type != "claim1" && law.type != "claim2" && law.type != "meanfield" && law.type != "tabulated")
        throw ConfigError("config.pde.law.type: expected claim1, claim2, meanfield or tabulated");
      if (law.type == "tabulated" && law.curve_csv.empty() && law.rho.empty())
        throw ConfigError("config.pde.law: tabulated law needs curve_csv or rho/p nodes");
    }
    p.get_or<Json>("law", nullptr);
    if (p.has("initial")) {
      detail::StrictObject i(p.at("initial"), "config.pde.initial");
      auto& ini = cfg.pde.initial;
      ini.shape = i.get_or<std::string>("shape", ini.shape);
      ini.mean = i.get_or<double>("mean", ini.mean);
      ini.amplitude = i.get_or<double>("amplitude", ini.amplitude);
      ini.center = i.get_or<double>("center", ini.center);
      ini.width = i.get_or<double>("width", ini.width);
      ini.values = i.get_or<std::vector<double>>("values", ini.values);
      i.finish();
      if (ini.shape != "cosine" && ini.shape != "bump" && ini.shape != "values")
        throw ConfigError("config.pde.initial.shape: expected cosine, bump or values");
    }
    p.get_or<Json>("initial", nullptr);
    p.finish();
    if (cfg.pde.grid_size < 3) throw ConfigError("config.pde.grid_size: need at least 3 cells");
    if (cfg.pde.snapshot_stride == 0) throw ConfigError("config.pde.snapshot_stride: must be positive");
  }
  o.get_or<Json>("pde", nullptr);
  o.finish();

  // cross-field invariants
  const double cutoff = interaction_cutoff(cfg.simulation.spec, cfg.simulation.box);
  if (needs_simulation && cutoff > 0.5 * cfg.simulation.box.side * (1.0 + 1e-12)) {
    throw ConfigError("interaction cutoff " + std::to_string(cutoff) + " exceeds L/2 = " +
                      std::to_string(0.5 * cfg.simulation.box.side) + " (minimal-image constraint)");
  }
  const bool needs_grid = cfg.kind == ExperimentKind::Sweep || cfg.kind == ExperimentKind::ClaimCompare ||
                          cfg.kind == ExperimentKind::ExponentTable;
  if (needs_grid && cfg.rho_grid.empty()) throw ConfigError("config.rho_grid: required for " + to_string(cfg.kind));
  for (std::size_t i = 0; i < cfg.rho_grid.size(); ++i) {
    if (!(cfg.rho_grid[i] > 0.0)) throw ConfigError("config.rho_grid: densities must be positive");
    if (i > 0 && !(cfg.rho_grid[i] > cfg.rho_grid[i - 1]))
      throw ConfigError("config.rho_grid: densities must be strictly increasing");
  }
  if (cfg.kind == ExperimentKind::ExponentTable && cfg.fit_windows.empty())
    throw ConfigError("config.fit_windows: required for exponent-table");
  if (cfg.kind == ExperimentKind::ClaimCompare) {
    (void)Prediction::for_potential(cfg.prediction, cfg.simulation.spec, cfg.simulation.noise_sigma,
                                    cfg.simulation.box.dimension);
  }
  if (cfg.kind == ExperimentKind::Relax && cfg.simulation.box.dimension != 1)
    throw ConfigError("relax experiments are one-dimensional");
  return cfg;
}

/// Line number (1-based) of a byte offset in `text`.
inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error at line " + std::to_string(line_of_offset(text, e.byte)) + ": " +
                      e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Fully resolved config as JSON; config_from_json(to_json(c)) == c.
inline Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["kind"] = to_string(cfg.kind);
  j["seed"] = detail::optional_json(cfg.seed);
  j["output_dir"] = cfg.output_dir;
  const auto& sim = cfg.simulation;
  j["potential"] = potential_to_json(sim.spec);
  Json s;
  s["dimension"] = sim.box.dimension;
  s["side"] = sim.box.side;
  s["noise_sigma"] = sim.noise_sigma;
  s["dt"] = sim.dt;
  s["auto_dt"] = sim.auto_dt;
  s["burn_in_steps"] = detail::optional_json(sim.burn_in_steps);
  s["n_samples"] = sim.n_samples;
  s["sample_stride"] = detail::optional_json(sim.sample_stride);
  s["min_separation"] = detail::optional_json(sim.min_separation);
  s["init_mode"] = to_string(sim.init_mode);
  s["trajectory_csv"] = detail::optional_json(sim.trajectory_csv);
  j["simulation"] = s;
  j["rho_grid"] = cfg.rho_grid;
  Json windows = Json::array();
  for (const auto& w : cfg.fit_windows) windows.push_back({w.first, w.second});
  j["fit_windows"] = windows;
  j["prediction"] = to_string(cfg.prediction);
  j["compare_window"] =
      cfg.compare_window ? Json::array({cfg.compare_window->first, cfg.compare_window->second}) : Json(nullptr);
  j["weighted_fit"] = cfg.weighted_fit;
  j["relax"] = {{"rho", cfg.relax.rho},   {"displacement", cfg.relax.displacement}, {"particle", cfg.relax.particle},
                {"step", cfg.relax.step}, {"tol", cfg.relax.tol},                   {"max_steps", cfg.relax.max_steps}};
  const auto& law = cfg.pde.law;
  const auto& ini = cfg.pde.initial;
  j["pde"] = {{"law",
               {{"type", law.type},
                {"alpha", law.alpha},
                {"beta", law.beta},
                {"r0", law.r0},
                {"r1", law.r1},
                {"c_v", law.c_v},
                {"noise_sigma", law.noise_sigma},
                {"curve_csv", law.curve_csv},
                {"rho", law.rho},
                {"p", law.p}}},
              {"initial",
               {{"shape", ini.shape},
                {"mean", ini.mean},
                {"amplitude", ini.amplitude},
                {"center", ini.center},
                {"width", ini.width},
                {"values", ini.values}}},
              {"grid_size", cfg.pde.grid_size},
              {"t_end", cfg.pde.t_end},
              {"dt", cfg.pde.dt},
              {"snapshot_stride", cfg.pde.snapshot_stride}};
  return j;
}

/// Seed precedence: explicit override, then the config, then VIRIALAB_SEED,
/// then 0. Returns the seed and where it came from.
inline std::pair<std::uint64_t, std::string> resolve_seed(const ExperimentConfig& cfg,
                                                          std::optional<std::uint64_t> override_seed) {
  if (override_seed) return {*override_seed, "command line"};
  if (cfg.seed) return {*cfg.seed, "config"};
  if (const char* env = std::getenv("VIRIALAB_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') throw ConfigError("VIRIALAB_SEED is not an unsigned integer");
    return {static_cast<std::uint64_t>(v), "VIRIALAB_SEED"};
  }
  return {0, "default"};
}

}  // namespace virialab
