#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "virialab/errors.hpp"
#include "virialab/potentials.hpp"
#include "virialab/rng.hpp"
#include "virialab/torus.hpp"

namespace virialab {

enum class InitMode { RepulsiveLattice, AdhesionCluster, UniformRandom, Grid };

inline std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::RepulsiveLattice: return "repulsive_lattice";
    case InitMode::AdhesionCluster: return "adhesion_cluster";
    case InitMode::UniformRandom: return "uniform_random";
    case InitMode::Grid: return "grid";
  }
  return "unknown";
}

inline InitMode init_mode_from_string(const std::string& s) {
  if (s == "repulsive_lattice") return InitMode::RepulsiveLattice;
  if (s == "adhesion_cluster") return InitMode::AdhesionCluster;
  if (s == "uniform_random") return InitMode::UniformRandom;
  if (s == "grid") return InitMode::Grid;
  throw ConfigError("unknown init_mode '" + s + "'");
}

/// Positions of K particles, stored wrapped and row-major (K x d).
struct ParticleState {
  TorusBox box;
  std::vector<double> positions;
  double time = 0.0;
  std::uint64_t step = 0;

  std::size_t size() const noexcept { return positions.size() / static_cast<std::size_t>(box.dimension); }
  double density() const noexcept { return static_cast<double>(size()) / box.volume(); }

  Vec position(std::size_t i) const noexcept {
    const int d = box.dimension;
    return Vec(std::span<const double>(positions.data() + i * d, static_cast<std::size_t>(d)));
  }
  void set_position(std::size_t i, const Vec& p) noexcept {
    for (int k = 0; k < box.dimension; ++k) positions[i * box.dimension + k] = p[k];
  }
};

inline constexpr double kStiffnessSafety = 0.2;

struct SimulationConfig {
  PotentialSpec spec = NoInteraction{};
  TorusBox box;
  double rho_nominal = 1.0;
  double noise_sigma = 1.0;
  /// Upper bound on the time step; lowered to the stiffness limit when auto_dt.
  double dt = 1e-4;
  bool auto_dt = true;
  /// Defaults to 10 L^2 / sigma^2 time units.
  std::optional<std::uint64_t> burn_in_steps;
  std::uint64_t n_samples = 1000;
  /// Defaults to L^2 / (10 sigma^2) time units.
  std::optional<std::uint64_t> sample_stride;
  std::uint64_t seed = 0;
  /// Defaults to 1e-3 times the potential length scale.
  std::optional<double> min_separation;
  InitMode init_mode = InitMode::RepulsiveLattice;
  /// Optional CSV dump of every sampled snapshot.
  std::optional<std::string> trajectory_csv;
};

/// K = floor(rho L^d); a small tolerance keeps e.g. 0.2 * 50 from rounding to 9.
inline std::size_t particle_count(double rho, const TorusBox& box) {
  const double n = rho * box.volume();
  return static_cast<std::size_t>(std::floor(n * (1.0 + 1e-12) + 1e-9));
}

struct PairDiagnostics {
  std::uint64_t pair_evaluations = 0;
  std::uint64_t clamped = 0;
  std::uint64_t coincident = 0;

  double clamp_rate() const noexcept {
    return pair_evaluations == 0 ? 0.0 : static_cast<double>(clamped) / static_cast<double>(pair_evaluations);
  }
  PairDiagnostics& operator+=(const PairDiagnostics& o) noexcept {
    pair_evaluations += o.pair_evaluations;
    clamped += o.clamped;
    coincident += o.coincident;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// Initial configurations

namespace detail {

inline ParticleState regular_lattice_1d(const TorusBox& box, std::size_t k, double spacing) {
  ParticleState s{box, std::vector<double>(k), 0.0, 0};
  for (std::size_t i = 0; i < k; ++i) s.positions[i] = wrap_coordinate(static_cast<double>(i) * spacing, box.side);
  return s;
}

inline ParticleState cubic_grid(const TorusBox& box, std::size_t per_side) {
  const int d = box.dimension;
  std::size_t k = 1;
  for (int a = 0; a < d; ++a) k *= per_side;
  const double spacing = box.side / static_cast<double>(per_side);
  ParticleState s{box, std::vector<double>(k * d), 0.0, 0};
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t rest = i;
    for (int a = 0; a < d; ++a) {
      s.positions[i * d + a] = static_cast<double>(rest % per_side) * spacing;
      rest /= per_side;
    }
  }
  return s;
}

}  // namespace detail

/// Initial configuration for `config.init_mode`. Non-fatal adjustments (grid
/// rounding) are appended to `warnings` when given.
inline ParticleState build_initial_lattice(const SimulationConfig& config,
                                           std::vector<std::string>* warnings = nullptr) {
  config.box.validate();
  if (!(config.rho_nominal > 0.0)) throw ConfigError("rho must be positive");
  const TorusBox& box = config.box;
  const std::size_t k = particle_count(config.rho_nominal, box);
  if (k == 0) throw ConfigError("rho * L^d < 1: no particles in the box");
  const double rho_eff = static_cast<double>(k) / box.volume();

  switch (config.init_mode) {
    case InitMode::RepulsiveLattice:
      if (box.dimension != 1) throw ConfigError("repulsive_lattice is one-dimensional; use grid for d >= 2");
      return detail::regular_lattice_1d(box, k, box.side / static_cast<double>(k));

    case InitMode::AdhesionCluster: {
      const auto* ar = std::get_if<PowerLawAttractiveRepulsive>(&config.spec);
      if (ar == nullptr) throw ConfigError("adhesion_cluster requires an attractive-repulsive potential");
      if (box.dimension != 1) throw ConfigError("adhesion_cluster is one-dimensional");
      if (rho_eff < 1.0 / ar->r0) return detail::regular_lattice_1d(box, k, ar->r0);
      return detail::regular_lattice_1d(box, k, box.side / static_cast<double>(k));
    }

    case InitMode::Grid: {
      const double root = std::pow(static_cast<double>(k), 1.0 / box.dimension);
      auto per_side = static_cast<std::size_t>(std::llround(root));
      if (per_side == 0) per_side = 1;
      std::size_t feasible = 1;
      for (int a = 0; a < box.dimension; ++a) feasible *= per_side;
      if (feasible != k && warnings != nullptr) {
        warnings->push_back("grid: K = " + std::to_string(k) + " is not a perfect power; using K = " +
                            std::to_string(feasible));
      }
      return detail::cubic_grid(box, per_side);
    }

    case InitMode::UniformRandom: {
      const NoiseStream noise(derive_seed(config.seed, 0xA11CE));
      ParticleState s{box, std::vector<double>(k * box.dimension), 0.0, 0};
      for (std::size_t i = 0; i < k; ++i) {
        const auto u = noise.uniforms(i, 0);
        for (int a = 0; a < box.dimension; ++a) s.positions[i * box.dimension + a] = u[a] * box.side;
      }
      return s;
    }
  }
  throw ConfigError("unknown init mode");
}

// ---------------------------------------------------------------------------
// Cell list

/// Cell decomposition with cell side >= cutoff. Pairs are generated on the fly
/// from the binned positions it was built from; when fewer than three cells fit
/// along an axis it degrades to the all-pairs loop.
class NeighborList {
 public:
  NeighborList(const ParticleState& state, double cutoff) : box_(state.box), cutoff_(cutoff) {
    if (cutoff > 0.5 * box_.side * (1.0 + 1e-12)) {
      throw ConfigError("interaction cutoff " + std::to_string(cutoff) + " exceeds half the box side " +
                        std::to_string(0.5 * box_.side) + " (minimal-image constraint); enlarge the box");
    }
    n_ = state.size();
    if (cutoff <= 0.0 || n_ < 2) {
      empty_ = true;
      return;
    }
    cells_per_side_ = static_cast<int>(std::floor(box_.side / cutoff));
    if (cells_per_side_ < 3) {
      brute_force_ = true;
      return;
    }
    const int d = box_.dimension;
    std::size_t n_cells = 1;
    for (int a = 0; a < d; ++a) n_cells *= static_cast<std::size_t>(cells_per_side_);
    cell_start_.assign(n_cells + 1, 0);
    cell_of_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      cell_of_[i] = cell_index(state.positions.data() + i * d);
      ++cell_start_[cell_of_[i] + 1];
    }
    for (std::size_t c = 0; c < n_cells; ++c) cell_start_[c + 1] += cell_start_[c];
    members_.resize(n_);
    std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < n_; ++i) members_[fill[cell_of_[i]]++] = i;

    // neighbouring cells, including the cell itself
    stencil_.reserve(n_cells * 27);
    for (std::size_t c = 0; c < n_cells; ++c) {
      int coord[kMaxDimension] = {0, 0, 0};
      std::size_t rest = c;
      for (int a = 0; a < d; ++a) {
        coord[a] = static_cast<int>(rest % cells_per_side_);
        rest /= cells_per_side_;
      }
      const int span = d == 1 ? 3 : (d == 2 ? 9 : 27);
      for (int o = 0; o < span; ++o) {
        int code = o;
        std::size_t idx = 0, stride = 1;
        for (int a = 0; a < d; ++a) {
          const int off = code % 3 - 1;
          code /= 3;
          const int m = (coord[a] + off + cells_per_side_) % cells_per_side_;
          idx += static_cast<std::size_t>(m) * stride;
          stride *= static_cast<std::size_t>(cells_per_side_);
        }
        stencil_.push_back(idx);
      }
    }
    stencil_width_ = static_cast<std::size_t>(d == 1 ? 3 : (d == 2 ? 9 : 27));
  }

  double cutoff() const noexcept { return cutoff_; }
  bool uses_cells() const noexcept { return !empty_ && !brute_force_; }

  /// Calls f(i, j, disp, r2) once per unordered pair i < j with torus distance
  /// <= cutoff; disp points from j to i (minimal image of x_i - x_j).
  template <class F>
  void for_each_pair(const ParticleState& state, F&& f) const {
    if (empty_) return;
    switch (box_.dimension) {
      case 1: for_each_pair_impl<1>(state, f); break;
      case 2: for_each_pair_impl<2>(state, f); break;
      default: for_each_pair_impl<3>(state, f); break;
    }
  }

  std::size_t count_pairs(const ParticleState& state) const {
    std::size_t n = 0;
    for_each_pair(state, [&](std::size_t, std::size_t, const double*, double) { ++n; });
    return n;
  }

 private:
  template <int D, class F>
  void for_each_pair_impl(const ParticleState& state, F& f) const {
    const double L = box_.side;
    const double half_L = 0.5 * L;
    const double c2 = cutoff_ * cutoff_;
    const double* x = state.positions.data();
    double disp[D];
    // positions are wrapped into [0, L), so differences lie in (-L, L)
    auto visit = [&](std::size_t i, std::size_t j) {
      double r2 = 0.0;
      for (int a = 0; a < D; ++a) {
        disp[a] = minimal_image_wrapped(x[i * D + a] - x[j * D + a], L, half_L);
        r2 += disp[a] * disp[a];
      }
      if (r2 <= c2) f(i, j, static_cast<const double*>(disp), r2);
    };
    if (brute_force_) {
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j) visit(i, j);
      return;
    }
    const std::size_t n_cells = cell_start_.size() - 1;
    for (std::size_t c = 0; c < n_cells; ++c) {
      for (std::size_t s = 0; s < stencil_width_; ++s) {
        const std::size_t nc = stencil_[c * stencil_width_ + s];
        for (std::size_t a = cell_start_[c]; a < cell_start_[c + 1]; ++a) {
          const std::size_t i = members_[a];
          for (std::size_t b = cell_start_[nc]; b < cell_start_[nc + 1]; ++b) {
            const std::size_t j = members_[b];
            if (j > i) visit(i, j);
          }
        }
      }
    }
  }

  std::size_t cell_index(const double* p) const noexcept {
    std::size_t idx = 0, stride = 1;
    const double inv = cells_per_side_ / box_.side;
    for (int a = 0; a < box_.dimension; ++a) {
      int m = static_cast<int>(p[a] * inv);
      m = std::clamp(m, 0, cells_per_side_ - 1);
      idx += static_cast<std::size_t>(m) * stride;
      stride *= static_cast<std::size_t>(cells_per_side_);
    }
    return idx;
  }

  TorusBox box_;
  double cutoff_;
  std::size_t n_ = 0;
  bool empty_ = false;
  bool brute_force_ = false;
  int cells_per_side_ = 0;
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> cell_of_;
  std::vector<std::size_t> members_;
  std::vector<std::size_t> stencil_;
  std::size_t stencil_width_ = 0;
};

inline NeighborList build_neighbor_list(const ParticleState& state, double cutoff) {
  return NeighborList(state, cutoff);
}

// ---------------------------------------------------------------------------
// Forces

namespace detail {

/// Displacement used for a pair closer than min_separation: rescaled to
/// min_separation along its own direction, or along a seeded random direction
/// when the particles coincide. Returns the distance to evaluate at.
inline double clamp_pair(double* disp, double r2, double min_separation, int d, std::size_t i, std::size_t j,
                         std::uint64_t step, std::uint64_t seed, PairDiagnostics& diag) {
  double r = std::sqrt(r2);
  if (r >= min_separation) return r;
  ++diag.clamped;
  if (r == 0.0) {
    ++diag.coincident;
    const NoiseStream noise(derive_seed(seed, 0xC01DE));
    const auto g = noise.gaussians(i * 0x9E3779B1u + j, step, 7);
    double n2 = 0.0;
    for (int a = 0; a < d; ++a) {
      disp[a] = g[a];
      n2 += g[a] * g[a];
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (int a = 0; a < d; ++a) disp[a] *= inv * min_separation;
    return min_separation;
  }
  const double scale = min_separation / r;
  for (int a = 0; a < d; ++a) disp[a] *= scale;
  return min_separation;
}

}  // namespace detail

/// F_i = sum_j -grad V(x_i - x_j) over the neighbour list, written into
/// `forces` (K x d). Pairs closer than min_separation are evaluated at
/// min_separation along the same direction.
inline void compute_forces(const ParticleState& state, const RadialPotential& pot, const NeighborList& neighbors,
                           double min_separation, std::span<double> forces, PairDiagnostics& diag,
                           std::uint64_t seed = 0) {
  std::fill(forces.begin(), forces.end(), 0.0);
  const int d = state.box.dimension;
  const double min_sep2 = min_separation * min_separation;
  std::uint64_t evaluations = 0;
  neighbors.for_each_pair(state, [&](std::size_t i, std::size_t j, const double* disp_in, double r2) {
    ++evaluations;
    double* fi = forces.data() + i * d;
    double* fj = forces.data() + j * d;
    if (r2 >= min_sep2 && r2 > 0.0) {
      const double s = pot.force_over_r(r2);
      for (int a = 0; a < d; ++a) {
        const double f = s * disp_in[a];
        fi[a] += f;
        fj[a] -= f;
      }
      return;
    }
    double disp[kMaxDimension];
    for (int a = 0; a < d; ++a) disp[a] = disp_in[a];
    const double r = detail::clamp_pair(disp, r2, min_separation, d, i, j, state.step, seed, diag);
    const double s = -pot.derivative_unchecked(r) / r;
    for (int a = 0; a < d; ++a) {
      const double f = s * disp[a];
      fi[a] += f;
      fj[a] -= f;
    }
  });
  diag.pair_evaluations += evaluations;
}

inline std::vector<double> compute_forces(const ParticleState& state, const PotentialSpec& spec,
                                          const NeighborList& neighbors, double min_separation) {
  std::vector<double> forces(state.positions.size());
  PairDiagnostics diag;
  compute_forces(state, RadialPotential(spec), neighbors, min_separation, forces, diag);
  return forces;
}

/// Total pair energy sum_{i<j} V(x_i - x_j) within the cutoff.
inline double total_energy(const ParticleState& state, const RadialPotential& pot, const NeighborList& neighbors) {
  double e = 0.0;
  neighbors.for_each_pair(state,
                          [&](std::size_t, std::size_t, const double*, double r2) { e += pot.value(std::sqrt(r2)); });
  return e;
}

// ---------------------------------------------------------------------------
// Time step selection

inline double resolved_min_separation(const SimulationConfig& config) {
  return config.min_separation.value_or(1e-3 * length_scale(config.spec));
}

/// Gershgorin bound on the Hessian of the pair energy for a cubic lattice of
/// density rho: 2 sum_n max(|U''|, |U'|/r) over lattice vectors in range.
inline double lattice_stiffness(const PotentialSpec& spec, const TorusBox& box, double rho) {
  const RadialPotential pot(spec);
  const double cutoff = interaction_cutoff(spec, box);
  if (cutoff <= 0.0) return 0.0;
  const int d = box.dimension;
  const double a = std::pow(rho, -1.0 / d);
  const int m = static_cast<int>(std::ceil(cutoff / a));
  double bound = 0.0;
  auto curvature = [&](double r) {
    const double h = 1e-6 * r;
    // U' jumps to zero past a finite cutoff; difference from the inside there
    const double hi = r + h > cutoff ? r : r + h;
    const double second = (pot.derivative_unchecked(hi) - pot.derivative_unchecked(hi - 2.0 * h)) / (2.0 * h);
    return std::max(std::abs(second), std::abs(pot.derivative_unchecked(r)) / r);
  };
  int idx[kMaxDimension] = {0, 0, 0};
  const int side = 2 * m + 1;
  long total = 1;
  for (int k = 0; k < d; ++k) total *= side;
  for (long c = 0; c < total; ++c) {
    long rest = c;
    double n2 = 0.0;
    for (int k = 0; k < d; ++k) {
      idx[k] = static_cast<int>(rest % side) - m;
      rest /= side;
      n2 += static_cast<double>(idx[k]) * idx[k];
    }
    if (n2 == 0.0) continue;
    const double r = a * std::sqrt(n2);
    // left-continuous: a neighbour exactly at the cutoff still interacts
    if (r > cutoff * (1.0 + 1e-12)) continue;
    bound += 2.0 * curvature(std::min(r, cutoff));
  }
  return bound;
}

/// Time step actually used: config.dt, lowered to kStiffnessSafety / stiffness
/// when auto_dt is set.
inline double effective_time_step(const SimulationConfig& config, double rho_eff) {
  if (!(config.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!config.auto_dt) return config.dt;
  const double lambda = lattice_stiffness(config.spec, config.box, rho_eff);
  if (lambda <= 0.0) return config.dt;
  return std::min(config.dt, kStiffnessSafety / lambda);
}

// ---------------------------------------------------------------------------
// Integration

/// Owns the particle state and advances it with Euler-Maruyama steps
///   x_i <- wrap(x_i + F_i dt + sigma sqrt(dt) xi_i).
/// The Gaussian xi_i at step n is drawn from substream (i, n), so the
/// trajectory does not depend on the order of the force loop.
class Integrator {
 public:
  Integrator(ParticleState state, const PotentialSpec& spec, double noise_sigma, double dt, double min_separation,
             std::uint64_t seed)
      : state_(std::move(state)),
        pot_(spec),
        cutoff_(interaction_cutoff(spec, state_.box)),
        sigma_(noise_sigma),
        dt_(dt),
        min_sep_(min_separation),
        seed_(seed),
        noise_(seed),
        forces_(state_.positions.size(), 0.0) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be nonnegative");
    if (cutoff_ > 0.5 * state_.box.side * (1.0 + 1e-12)) {
      throw ConfigError("interaction cutoff " + std::to_string(cutoff_) + " exceeds half the box side " +
                        std::to_string(0.5 * state_.box.side) + " (minimal-image constraint)");
    }
  }

  const ParticleState& state() const noexcept { return state_; }
  ParticleState& state() noexcept { return state_; }
  const RadialPotential& potential() const noexcept { return pot_; }
  const PairDiagnostics& diagnostics() const noexcept { return diag_; }
  const std::vector<double>& forces() const noexcept { return forces_; }
  double dt() const noexcept { return dt_; }
  double cutoff() const noexcept { return cutoff_; }
  double min_separation() const noexcept { return min_sep_; }

  void update_forces() {
    if (cutoff_ <= 0.0) {
      std::fill(forces_.begin(), forces_.end(), 0.0);
      return;
    }
    const NeighborList nl(state_, cutoff_);
    compute_forces(state_, pot_, nl, min_sep_, forces_, diag_, seed_);
  }

  double max_force() const noexcept {
    const int d = state_.box.dimension;
    double m = 0.0;
    for (std::size_t i = 0; i < state_.size(); ++i) {
      double f2 = 0.0;
      for (int a = 0; a < d; ++a) f2 += forces_[i * d + a] * forces_[i * d + a];
      m = std::max(m, std::sqrt(f2));
    }
    return m;
  }

  /// One Euler-Maruyama step. Throws BlowUpError on a non-finite position.
  void step() {
    update_forces();
    advance();
  }

  /// Moves particles using the forces currently stored.
  void advance() {
    const int d = state_.box.dimension;
    const double L = state_.box.side;
    const double amp = sigma_ * std::sqrt(dt_);
    const std::size_t k = state_.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::array<double, 4> xi{};
      if (amp > 0.0) xi = noise_.gaussians(i, state_.step, 0, d);
      for (int a = 0; a < d; ++a) {
        double& x = state_.positions[i * d + a];
        const double moved = x + forces_[i * d + a] * dt_ + amp * xi[a];
        if (!std::isfinite(moved)) {
          throw BlowUpError("non-finite position of particle " + std::to_string(i) + " at step " +
                                std::to_string(state_.step) + "; reduce dt",
                            state_.step);
        }
        x = wrap_coordinate(moved, L);
      }
    }
    ++state_.step;
    state_.time += dt_;
  }

 private:
  ParticleState state_;
  RadialPotential pot_;
  double cutoff_;
  double sigma_;
  double dt_;
  double min_sep_;
  std::uint64_t seed_;
  NoiseStream noise_;
  std::vector<double> forces_;
  PairDiagnostics diag_;
};

/// One Euler-Maruyama step of `state` under `config` (dt as given, no
/// stiffness cap). The noise substream is (particle, state.step).
inline ParticleState em_step(const ParticleState& state, const SimulationConfig& config) {
  Integrator integ(state, config.spec, config.noise_sigma, config.dt, resolved_min_separation(config), config.seed);
  integ.step();
  return integ.state();
}

struct RelaxResult {
  ParticleState state;
  bool converged = false;
  std::uint64_t steps = 0;
  double max_force = 0.0;
};

/// Gradient flow dx/dt = F(x) by explicit steps of size `step` until the
/// largest force drops below `tol` or `max_steps` is reached.
inline RelaxResult relax_deterministic(const ParticleState& state, const PotentialSpec& spec, double step,
                                       double tol, std::uint64_t max_steps, double min_separation = 0.0) {
  if (min_separation <= 0.0) min_separation = 1e-3 * length_scale(spec);
  Integrator integ(state, spec, 0.0, step, min_separation, 0);
  std::uint64_t n = 0;
  integ.update_forces();
  while (integ.max_force() >= tol && n < max_steps) {
    integ.advance();
    integ.update_forces();
    ++n;
  }
  const double fmax = integ.max_force();
  return RelaxResult{integ.state(), fmax < tol, n, fmax};
}

struct SimulationResult {
  ParticleState final_state;
  PairDiagnostics diagnostics;
  double dt = 0.0;
  std::uint64_t burn_in_steps = 0;
  std::uint64_t sample_stride = 0;
  std::vector<std::string> warnings;
};

/// Burn-in default: 10 L^2 / sigma^2 time units (diffusive box crossing).
inline std::uint64_t resolved_burn_in_steps(const SimulationConfig& config, double dt) {
  if (config.burn_in_steps) return *config.burn_in_steps;
  if (config.noise_sigma <= 0.0) return 0;
  const double t = 10.0 * config.box.side * config.box.side / (config.noise_sigma * config.noise_sigma);
  return static_cast<std::uint64_t>(std::ceil(t / dt));
}

/// Stride default: L^2 / (10 sigma^2) time units.
inline std::uint64_t resolved_sample_stride(const SimulationConfig& config, double dt) {
  if (config.sample_stride) {
    if (*config.sample_stride == 0) throw ConfigError("sample_stride must be positive");
    return *config.sample_stride;
  }
  if (config.noise_sigma <= 0.0) return 1;
  const double t = config.box.side * config.box.side / (10.0 * config.noise_sigma * config.noise_sigma);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(t / dt)));
}

using SampleObserver = std::function<void(const ParticleState&, std::uint64_t sample_index)>;

/// Builds the initial state, runs the burn-in, then calls `observer` every
/// sample_stride steps, n_samples times. Deterministic for a fixed seed.
inline SimulationResult simulate(const SimulationConfig& config, const SampleObserver& observer) {
  validate(config.spec);
  if (config.noise_sigma < 0.0) throw ConfigError("noise_sigma must be nonnegative");
  SimulationResult result;
  ParticleState init = build_initial_lattice(config, &result.warnings);
  const double rho_eff = init.density();
  result.dt = effective_time_step(config, rho_eff);
  result.burn_in_steps = resolved_burn_in_steps(config, result.dt);
  result.sample_stride = resolved_sample_stride(config, result.dt);

  if (!config.auto_dt) {
    const double spacing = std::pow(rho_eff, -1.0 / config.box.dimension);
    const RadialPotential pot(config.spec);
    if (result.dt * std::abs(pot.derivative_unchecked(spacing)) >= spacing) {
      throw ConfigError("dt too large: one step moves a particle farther than the lattice spacing");
    }
  }

  Integrator integ(std::move(init), config.spec, config.noise_sigma, result.dt, resolved_min_separation(config),
                   config.seed);

  std::ofstream dump;
  if (config.trajectory_csv) {
    dump.open(*config.trajectory_csv);
    if (!dump) throw IoError("cannot open trajectory file " + *config.trajectory_csv);
    dump << "step,particle";
    for (int a = 0; a < config.box.dimension; ++a) dump << ",x" << a;
    dump << '\n';
    dump.precision(17);
  }

  for (std::uint64_t n = 0; n < result.burn_in_steps; ++n) integ.step();
  for (std::uint64_t s = 0; s < config.n_samples; ++s) {
    for (std::uint64_t n = 0; n < result.sample_stride; ++n) integ.step();
    const ParticleState& st = integ.state();
    if (dump) {
      for (std::size_t i = 0; i < st.size(); ++i) {
        dump << st.step << ',' << i;
        for (int a = 0; a < st.box.dimension; ++a) dump << ',' << st.positions[i * st.box.dimension + a];
        dump << '\n';
      }
    }
    if (observer) observer(st, s);
  }
  result.final_state = integ.state();
  result.diagnostics = integ.diagnostics();
  return result;
}

}  // namespace virialab
