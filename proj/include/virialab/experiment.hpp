#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "virialab/analysis.hpp"
#include "virialab/config.hpp"
#include "virialab/dynamics.hpp"
#include "virialab/errors.hpp"
#include "virialab/io.hpp"
#include "virialab/pde.hpp"
#include "virialab/version.hpp"
#include "virialab/virial.hpp"

namespace virialab {

struct RunOptions {
  /// Highest-precedence seed (the --seed flag).
  std::optional<std::uint64_t> seed;
  /// Worker threads over grid points; 0 and 1 both mean a single thread.
  unsigned threads = 0;
  /// Replaces config.output_dir when set.
  std::optional<std::string> out_dir;
};

struct RunOutcome {
  int exit_code = 0;
  std::string message;
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> artifacts;
};

/// Exclusive lock on an output directory, released on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir) : path_(dir / ".virialab.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw IoError("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    (void)!::write(fd_, pid.data(), pid.size());
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;
  ~OutputLock() {
    ::close(fd_);
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  out.close();
  if (out.fail()) throw IoError("error writing " + path.string());
}

namespace detail {

inline Json strings_json(const std::vector<std::string>& v) {
  Json a = Json::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

inline Json point_json(double rho_nominal, const VirialEstimate& e) {
  return Json{{"rho_nominal", rho_nominal},
              {"rho_eff", e.rho_eff},
              {"particles", e.particles},
              {"seed", e.seed},
              {"dt", e.dt},
              {"burn_in_steps", e.burn_in_steps},
              {"sample_stride", e.sample_stride},
              {"n_samples", e.n_samples},
              {"clamp_rate", e.clamp_rate},
              {"warnings", strings_json(e.warnings)}};
}

inline Json fit_json(const SlopeFit& f) {
  return Json{{"window", {f.rho_min, f.rho_max}},
              {"exponent", f.exponent},
              {"exponent_std_error", f.exponent_std_error},
              {"log_prefactor", f.log_prefactor},
              {"r_squared", f.r_squared},
              {"n_points", f.n_points},
              {"warnings", strings_json(f.warnings)}};
}

inline Json prediction_json(const Prediction& p) {
  return Json{{"kind", to_string(p.kind)}, {"alpha", p.alpha}, {"beta", p.beta},
              {"r0", p.r0},               {"r1", number_json(p.r1)}, {"c_v", p.c_v},
              {"noise_sigma", p.noise_sigma}};
}

inline PressureLaw pde_law(const PdeLawSettings& s) {
  if (s.type == "tabulated") {
    if (!s.curve_csv.empty()) return read_curve_csv(s.curve_csv);
    return TabulatedLaw(s.rho, s.p);
  }
  Prediction p;
  p.kind = prediction_kind_from_string(s.type);
  p.alpha = s.alpha;
  p.beta = s.beta;
  p.r0 = s.r0;
  p.r1 = s.r1;
  p.c_v = s.c_v;
  p.noise_sigma = s.noise_sigma;
  return p;
}

inline std::vector<double> pde_initial(const PdeInitialSettings& s, std::size_t m) {
  if (s.shape == "values") {
    if (s.values.size() != m)
      throw ConfigError("config.pde.initial.values has " + std::to_string(s.values.size()) + " entries, grid_size is " +
                        std::to_string(m));
    return s.values;
  }
  std::vector<double> rho(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    if (s.shape == "cosine") {
      rho[i] = s.mean + s.amplitude * std::cos(2.0 * std::numbers::pi * x);
    } else {
      double dx = std::abs(x - s.center);
      dx = std::min(dx, 1.0 - dx);
      rho[i] = s.mean + s.amplitude * std::exp(-dx * dx / (2.0 * s.width * s.width));
    }
  }
  return rho;
}

/// Spacing statistics of a 1d configuration in particle-label order.
inline std::pair<double, double> spacing_mean_variance(const ParticleState& st) {
  const std::size_t k = st.size();
  std::vector<double> x(st.positions.begin(), st.positions.end());
  std::sort(x.begin(), x.end());
  std::vector<double> gaps(k);
  for (std::size_t i = 0; i < k; ++i) gaps[i] = i + 1 < k ? x[i + 1] - x[i] : x[0] + st.box.side - x[k - 1];
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  return {mean, var / static_cast<double>(k)};
}

struct RunContext {
  RunContext(const ExperimentConfig& c, std::filesystem::path o) : cfg(c), out(std::move(o)) {}

  const ExperimentConfig& cfg;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  Json manifest;
  Json report = Json::object();
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> artifacts;
  int exit_code = 0;
  std::string message;

  void add(const std::filesystem::path& p) { artifacts.push_back(p); }
};

inline CurveResult run_curve(RunContext& ctx) {
  SimulationConfig base = ctx.cfg.simulation;
  base.seed = ctx.seed;
  CurveResult res = pressure_curve(base, ctx.cfg.rho_grid, ctx.threads);

  Json points = Json::array();
  Json rho_eff = Json::array();
  std::size_t next = 0;
  for (std::size_t i = 0; i < ctx.cfg.rho_grid.size(); ++i) {
    const bool failed = std::any_of(res.failures.begin(), res.failures.end(),
                                    [i](const PointFailure& f) { return f.index == i; });
    if (failed) continue;
    const auto& e = res.curve.points.at(next++);
    points.push_back(point_json(ctx.cfg.rho_grid[i], e));
    rho_eff.push_back(e.rho_eff);
    for (const auto& w : e.warnings) ctx.warnings.push_back("rho=" + format_double(e.rho_eff) + ": " + w);
  }
  Json failures = Json::array();
  for (const auto& f : res.failures) {
    failures.push_back(
        {{"index", f.index}, {"rho_nominal", f.rho_nominal}, {"message", f.message}, {"exit_code", f.exit_code}});
  }
  ctx.manifest["points"] = points;
  ctx.manifest["rho_eff"] = rho_eff;
  ctx.manifest["failures"] = failures;

  // persisted even when some points failed
  write_curve_csv(res.curve, (ctx.out / "curve.csv").string());
  ctx.add(ctx.out / "curve.csv");
  if (!res.complete()) {
    ctx.exit_code = res.failures.front().exit_code;
    ctx.message = std::to_string(res.failures.size()) + " grid point(s) failed; first: " + res.failures.front().message;
  }
  return res;
}

inline void run_sweep(RunContext& ctx) {
  const CurveResult res = run_curve(ctx);
  const auto w = emit_plot_data(res.curve, (ctx.out / "plot.csv").string());
  ctx.add(ctx.out / "plot.csv");
  ctx.warnings.insert(ctx.warnings.end(), w.begin(), w.end());
  ctx.report["points"] = res.curve.points.size();
  ctx.report["failed_points"] = res.failures.size();
}

inline void run_claim_compare(RunContext& ctx) {
  const CurveResult res = run_curve(ctx);
  if (!res.complete()) return;
  const auto& sim = ctx.cfg.simulation;
  const Prediction pred = Prediction::for_potential(ctx.cfg.prediction, sim.spec, sim.noise_sigma, sim.box.dimension);
  const auto window = ctx.cfg.compare_window.value_or(std::pair<double, double>{0.0, kInfinity});
  const ComparisonReport rep = compare_report(res.curve, pred, window);
  const auto w = emit_plot_data(rep, (ctx.out / "plot.csv").string());
  ctx.add(ctx.out / "plot.csv");
  ctx.warnings.insert(ctx.warnings.end(), w.begin(), w.end());
  ctx.warnings.insert(ctx.warnings.end(), rep.warnings.begin(), rep.warnings.end());
  Json rows = Json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"rho", r.rho}, {"p_hat", r.p_hat}, {"prediction", r.prediction},
                    {"rescaled_prediction", r.rescaled_prediction}});
  ctx.report["prediction"] = prediction_json(rep.prediction);
  ctx.report["window"] = {rep.window.first, number_json(rep.window.second)};
  ctx.report["fitted_constant"] = rep.fitted_constant;
  ctx.report["max_relative_deviation"] = rep.max_relative_deviation;
  ctx.report["max_relative_deviation_unscaled"] = rep.max_relative_deviation_unscaled;
  ctx.report["rows"] = rows;
}

inline void run_exponent_table(RunContext& ctx) {
  const CurveResult res = run_curve(ctx);
  const auto w = emit_plot_data(res.curve, (ctx.out / "plot.csv").string());
  ctx.add(ctx.out / "plot.csv");
  ctx.warnings.insert(ctx.warnings.end(), w.begin(), w.end());
  if (!res.complete()) return;
  const auto& spec = ctx.cfg.simulation.spec;
  const int d = ctx.cfg.simulation.box.dimension;
  Json fits = Json::array();
  for (const auto& win : ctx.cfg.fit_windows) {
    const SlopeFit f = fit_loglog_slope(res.curve, win, ctx.cfg.weighted_fit);
    Json j = fit_json(f);
    if (const auto* p = std::get_if<PowerLawRepulsive>(&spec)) {
      const auto pe = predicted_exponent(p->alpha, d, std::isfinite(p->r1));
      j["predicted_high_density_exponent"] = pe.exponent;
      j["predicted_log_correction"] = pe.log_correction;
    } else if (const auto* q = std::get_if<PowerLawAttractiveRepulsive>(&spec)) {
      const auto pe = predicted_exponent(q->alpha, d, true);
      j["predicted_high_density_exponent"] = pe.exponent;
      j["predicted_log_correction"] = pe.log_correction;
    }
    fits.push_back(j);
    for (const auto& fw : f.warnings) ctx.warnings.push_back(fw);
  }
  ctx.report["fits"] = fits;
}

inline void run_cv(RunContext& ctx) {
  const auto& spec = ctx.cfg.simulation.spec;
  const int d = ctx.cfg.simulation.box.dimension;
  ctx.report["family"] = family_name(spec);
  ctx.report["dimension"] = d;
  ctx.report["c_v"] = c_v(spec, d);
}

inline void run_relax(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& rs = cfg.relax;
  const auto& spec = cfg.simulation.spec;
  ParticleState st = equilibrium_lattice(spec, rs.rho, cfg.simulation.box, &ctx.warnings);
  if (rs.particle >= st.size()) throw ConfigError("config.relax.particle is out of range");
  const double spacing = cfg.simulation.box.side / static_cast<double>(st.size());
  Vec p = st.position(rs.particle);
  p[0] += rs.displacement * spacing;
  st.set_position(rs.particle, wrap(p, st.box));

  double step = rs.step;
  if (!(step > 0.0)) {
    const double lambda = lattice_stiffness(spec, cfg.simulation.box, st.density());
    if (!(lambda > 0.0)) throw NotApplicableError("relax needs an interacting potential");
    step = 0.5 / lambda;
  }
  const RelaxResult r = relax_deterministic(st, spec, step, rs.tol, rs.max_steps,
                                            cfg.simulation.min_separation.value_or(0.0));
  const auto [mean, var] = spacing_mean_variance(r.state);
  ctx.report["converged"] = r.converged;
  ctx.report["steps"] = r.steps;
  ctx.report["max_force"] = r.max_force;
  ctx.report["step"] = step;
  ctx.report["particles"] = r.state.size();
  ctx.report["spacing_mean"] = mean;
  ctx.report["spacing_variance"] = var;
  ctx.manifest["converged"] = r.converged;
  ctx.manifest["spacing_variance"] = var;
  if (!r.converged) {
    ctx.exit_code = DivergenceError("").exit_code();
    ctx.message = "relaxation did not reach tol " + format_double(rs.tol) + " in " + std::to_string(rs.max_steps) +
                  " steps (max force " + format_double(r.max_force) + ")";
  }
}

inline void run_pde(RunContext& ctx) {
  const auto& ps = ctx.cfg.pde;
  const PressureLaw law = pde_law(ps.law);
  const std::vector<double> rho0 = pde_initial(ps.initial, ps.grid_size);
  const double dx = 1.0 / static_cast<double>(ps.grid_size);
  double dt = ps.dt;
  if (!(dt > 0.0)) {
    const auto [lo, hi] = std::minmax_element(rho0.begin(), rho0.end());
    const double slope = 2.0 * max_pressure_slope(law, *lo, *hi);
    dt = slope > 0.0 ? 0.5 * 0.9 * dx * dx / slope : ps.t_end;
    if (!(dt > 0.0)) dt = 1.0;
  }
  const PdeSolution sol = solve_pde(law, rho0, ps.t_end, dx, dt, ps.snapshot_stride);
  write_snapshots_csv(sol, (ctx.out / "snapshots.csv").string());
  ctx.add(ctx.out / "snapshots.csv");
  ctx.warnings.insert(ctx.warnings.end(), sol.warnings.begin(), sol.warnings.end());
  const double m0 = sol.mass(0);
  const double m1 = sol.mass(sol.snapshots.size() - 1);
  const auto& last = sol.snapshots.back().rho;
  const auto [lo, hi] = std::minmax_element(last.begin(), last.end());
  ctx.report["grid_size"] = sol.grid_size;
  ctx.report["dx"] = sol.dx;
  ctx.report["dt"] = sol.dt;
  ctx.report["snapshots"] = sol.snapshots.size();
  ctx.report["t_end"] = sol.snapshots.back().t;
  ctx.report["mass_initial"] = m0;
  ctx.report["mass_final"] = m1;
  ctx.report["mass_drift"] = std::abs(m1 - m0);
  ctx.report["final_min"] = *lo;
  ctx.report["final_max"] = *hi;
  ctx.report["non_monotone"] = sol.non_monotone;
  ctx.manifest["resolved_dt"] = sol.dt;
}

inline bool artifact_ok(const std::filesystem::path& p) {
  std::error_code ec;
  return std::filesystem::is_regular_file(p, ec) && std::filesystem::file_size(p, ec) > 0 && !ec;
}

}  // namespace detail

/// Runs one experiment and writes its artifacts under the output directory:
/// curve.csv (grid experiments), plot.csv, snapshots.csv (pde), report.json and
/// manifest.json. Exit code 0 iff every artifact was written and is non-empty;
/// module errors map to their own codes and whatever was computed is kept.
inline RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome outcome;
  outcome.out_dir = options.out_dir.value_or(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(outcome.out_dir, ec);
  if (ec) {
    outcome.exit_code = IoError("").exit_code();
    outcome.message = "cannot create output directory " + outcome.out_dir.string() + ": " + ec.message();
    return outcome;
  }

  std::optional<OutputLock> lock;
  try {
    lock.emplace(outcome.out_dir);
  } catch (const Error& e) {
    outcome.exit_code = e.exit_code();
    outcome.message = e.what();
    return outcome;
  }

  detail::RunContext ctx(cfg, outcome.out_dir);
  ctx.threads = std::max(1u, options.threads);
  std::string seed_source;
  try {
    std::tie(ctx.seed, seed_source) = resolve_seed(cfg, options.seed);
  } catch (const Error& e) {
    outcome.exit_code = e.exit_code();
    outcome.message = e.what();
    return outcome;
  }

  ctx.manifest["version"] = kVersion;
  ctx.manifest["kind"] = to_string(cfg.kind);
  ctx.manifest["config"] = to_json(cfg);
  ctx.manifest["seed"] = ctx.seed;
  ctx.manifest["seed_source"] = seed_source;
  ctx.manifest["point_seed_rule"] = "point i uses derive_seed(seed, i)";
  ctx.manifest["threads"] = ctx.threads;
  ctx.manifest["virial_convention"] = "Psi sums ordered pairs (i != j) divided by L^d; p_hat = sigma^2 rho_eff - Psi";

  try {
    switch (cfg.kind) {
      case ExperimentKind::Sweep: detail::run_sweep(ctx); break;
      case ExperimentKind::ClaimCompare: detail::run_claim_compare(ctx); break;
      case ExperimentKind::ExponentTable: detail::run_exponent_table(ctx); break;
      case ExperimentKind::Cv: detail::run_cv(ctx); break;
      case ExperimentKind::Relax: detail::run_relax(ctx); break;
      case ExperimentKind::Pde: detail::run_pde(ctx); break;
    }
  } catch (const Error& e) {
    ctx.exit_code = e.exit_code();
    ctx.message = e.what();
  } catch (const std::exception& e) {
    ctx.exit_code = 1;
    ctx.message = e.what();
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ctx.manifest["wall_time_seconds"] = wall;
  ctx.manifest["warnings"] = detail::strings_json(ctx.warnings);
  ctx.manifest["status"] = ctx.exit_code == 0 ? "ok" : "failed";
  ctx.manifest["exit_code"] = ctx.exit_code;
  if (!ctx.message.empty()) ctx.manifest["error"] = ctx.message;
  ctx.report["kind"] = to_string(cfg.kind);
  ctx.report["status"] = ctx.manifest["status"];

  try {
    write_json(ctx.out / "report.json", ctx.report);
    ctx.add(ctx.out / "report.json");
    Json names = Json::array();
    for (const auto& a : ctx.artifacts) names.push_back(a.filename().string());
    names.push_back("manifest.json");
    ctx.manifest["artifacts"] = names;
    write_json(ctx.out / "manifest.json", ctx.manifest);
    ctx.add(ctx.out / "manifest.json");
  } catch (const Error& e) {
    if (ctx.exit_code == 0) {
      ctx.exit_code = e.exit_code();
      ctx.message = e.what();
    }
  }

  if (ctx.exit_code == 0) {
    for (const auto& a : ctx.artifacts) {
      if (!detail::artifact_ok(a)) {
        ctx.exit_code = IoError("").exit_code();
        ctx.message = "artifact " + a.string() + " is missing or empty";
        break;
      }
    }
  }
  outcome.exit_code = ctx.exit_code;
  outcome.message = ctx.message;
  outcome.artifacts = ctx.artifacts;
  return outcome;
}

}  // namespace virialab
