#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "virialab/dynamics.hpp"
#include "virialab/errors.hpp"
#include "virialab/potentials.hpp"

namespace virialab {

/// Psi = (1/L^d) sum_{i != j} psi_iso(x_i - x_j), ordered pairs (each unordered
/// pair contributes twice). With min_separation > 0 close pairs are evaluated
/// at min_separation, matching the force clamp.
inline double virial_sum(const ParticleState& state, const RadialPotential& pot, const NeighborList& neighbors,
                         double min_separation = 0.0, PairDiagnostics* diag = nullptr) {
  const int d = state.box.dimension;
  double sum = 0.0;
  PairDiagnostics local;
  neighbors.for_each_pair(state, [&](std::size_t, std::size_t, const double*, double r2) {
    ++local.pair_evaluations;
    double r = std::sqrt(r2);
    if (r < min_separation) {
      r = min_separation;
      ++local.clamped;
    }
    if (!(r > 0.0)) throw DomainError("virial kernel evaluated at zero displacement");
    sum += r * pot.derivative_unchecked(r);
  });
  if (diag != nullptr) *diag += local;
  return 2.0 * sum / (d * state.box.volume());
}

inline double virial_sum(const ParticleState& state, const PotentialSpec& spec, const NeighborList& neighbors) {
  return virial_sum(state, RadialPotential(spec), neighbors);
}

/// Convenience overload that builds its own neighbour list.
inline double virial_sum(const ParticleState& state, const PotentialSpec& spec) {
  const double cutoff = interaction_cutoff(spec, state.box);
  if (cutoff <= 0.0) return 0.0;
  return virial_sum(state, RadialPotential(spec), NeighborList(state, cutoff));
}

struct VirialEstimate {
  double rho_eff = 0.0;
  double psi_hat = 0.0;
  /// noise_sigma^2 rho_eff - psi_hat
  double p_hat = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  double clamp_rate = 0.0;

  double noise_sigma = 0.0;
  std::size_t particles = 0;
  double dt = 0.0;
  std::uint64_t burn_in_steps = 0;
  std::uint64_t sample_stride = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Standard error of the mean from `batches` contiguous batch means.
inline double batch_means_error(const std::vector<double>& samples, std::size_t batches = 10) {
  const std::size_t n = samples.size();
  batches = std::min(batches, n);
  if (batches < 2) return 0.0;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * n / batches;
    const std::size_t hi = (b + 1) * n / batches;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += samples[i];
    means[b] = s / static_cast<double>(hi - lo);
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

inline constexpr double kClampRateWarning = 1e-4;

/// Time average of virial_sum over the post-burn-in snapshots of one run.
inline VirialEstimate estimate_pressure(const SimulationConfig& config) {
  if (config.n_samples == 0) throw ConfigError("n_samples must be positive");
  const RadialPotential pot(config.spec);
  const double cutoff_probe = interaction_cutoff(config.spec, config.box);
  const double min_sep = resolved_min_separation(config);
  std::vector<double> samples;
  samples.reserve(config.n_samples);
  PairDiagnostics virial_diag;

  const SimulationResult run = simulate(config, [&](const ParticleState& st, std::uint64_t) {
    if (cutoff_probe <= 0.0) {
      samples.push_back(0.0);
      return;
    }
    const NeighborList nl(st, cutoff_probe);
    samples.push_back(virial_sum(st, pot, nl, min_sep, &virial_diag));
  });

  VirialEstimate est;
  est.rho_eff = run.final_state.density();
  est.n_samples = samples.size();
  est.psi_hat = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  est.noise_sigma = config.noise_sigma;
  est.p_hat = config.noise_sigma * config.noise_sigma * est.rho_eff - est.psi_hat;
  est.std_error = batch_means_error(samples, 10);
  PairDiagnostics all = run.diagnostics;
  all += virial_diag;
  est.clamp_rate = all.clamp_rate();
  est.particles = run.final_state.size();
  est.dt = run.dt;
  est.burn_in_steps = run.burn_in_steps;
  est.sample_stride = run.sample_stride;
  est.seed = config.seed;
  est.warnings = run.warnings;
  if (est.clamp_rate > kClampRateWarning) {
    est.warnings.push_back("clamp rate " + std::to_string(est.clamp_rate) + " exceeds " +
                           std::to_string(kClampRateWarning) + "; virial may be biased");
  }
  return est;
}

struct PressureCurve {
  PotentialSpec spec;
  double noise_sigma = 0.0;
  std::vector<VirialEstimate> points;
  std::uint64_t seed = 0;
};

struct PointFailure {
  std::size_t index = 0;
  double rho_nominal = 0.0;
  std::string message;
  int exit_code = 1;
};

struct CurveResult {
  PressureCurve curve;
  std::vector<PointFailure> failures;
  bool complete() const noexcept { return failures.empty(); }
};

/// Seed of grid point `index`: independent substreams of the base seed.
inline std::uint64_t point_seed(std::uint64_t base_seed, std::size_t index) { return derive_seed(base_seed, index); }

/// One estimate_pressure per grid density with L fixed and K varying. Points
/// run on up to `threads` workers; results do not depend on the thread count.
inline CurveResult pressure_curve(const SimulationConfig& base, const std::vector<double>& rho_grid,
                                  unsigned threads = 1) {
  for (std::size_t i = 1; i < rho_grid.size(); ++i)
    if (!(rho_grid[i] > rho_grid[i - 1])) throw ConfigError("rho grid must be strictly increasing");
  for (std::size_t i = 1; i < rho_grid.size(); ++i) {
    if (particle_count(rho_grid[i], base.box) == particle_count(rho_grid[i - 1], base.box)) {
      throw ConfigError("rho grid points " + std::to_string(rho_grid[i - 1]) + " and " +
                        std::to_string(rho_grid[i]) + " give the same particle count in this box");
    }
  }

  CurveResult result;
  result.curve.spec = base.spec;
  result.curve.noise_sigma = base.noise_sigma;
  result.curve.seed = base.seed;

  std::vector<std::optional<VirialEstimate>> slots(rho_grid.size());
  std::vector<std::optional<PointFailure>> failed(rho_grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < rho_grid.size(); i = next++) {
      SimulationConfig cfg = base;
      cfg.rho_nominal = rho_grid[i];
      cfg.seed = point_seed(base.seed, i);
      try {
        slots[i] = estimate_pressure(cfg);
      } catch (const Error& e) {
        failed[i] = PointFailure{i, rho_grid[i], e.what(), e.exit_code()};
      } catch (const std::exception& e) {
        failed[i] = PointFailure{i, rho_grid[i], e.what(), 1};
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rho_grid.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    if (slots[i]) result.curve.points.push_back(std::move(*slots[i]));
    if (failed[i]) result.failures.push_back(std::move(*failed[i]));
  }
  return result;
}

/// Initial configuration the claims are derived on: equal spacing in d = 1
/// (R0-spaced cluster for attractive-repulsive potentials), cubic grid above.
inline ParticleState equilibrium_lattice(const PotentialSpec& spec, double rho, const TorusBox& box,
                                         std::vector<std::string>* warnings = nullptr) {
  SimulationConfig cfg;
  cfg.spec = spec;
  cfg.box = box;
  cfg.rho_nominal = rho;
  if (box.dimension >= 2)
    cfg.init_mode = InitMode::Grid;
  else if (std::holds_alternative<PowerLawAttractiveRepulsive>(spec))
    cfg.init_mode = InitMode::AdhesionCluster;
  else
    cfg.init_mode = InitMode::RepulsiveLattice;
  return build_initial_lattice(cfg, warnings);
}

/// Interaction part of the pressure on the equilibrium lattice, -Psi, from the
/// exact double sum (no dynamics). Positive for repulsive potentials.
inline double lattice_virial(const PotentialSpec& spec, double rho, const TorusBox& box) {
  const ParticleState lattice = equilibrium_lattice(spec, rho, box);
  return -virial_sum(lattice, spec);
}

}  // namespace virialab
