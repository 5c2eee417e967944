#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "virialab/analysis.hpp"
#include "virialab/errors.hpp"

namespace virialab {

/// Pressure law given as a table of (rho, P) nodes; linear in between and
/// linearly extrapolated from the end slopes.
class TabulatedLaw {
 public:
  TabulatedLaw(std::vector<double> rho, std::vector<double> p) : rho_(std::move(rho)), p_(std::move(p)) {
    if (rho_.size() != p_.size()) throw ConfigError("tabulated law: rho and P columns differ in length");
    if (rho_.size() < 2) throw ConfigError("tabulated law needs at least two nodes");
    for (std::size_t i = 0; i < rho_.size(); ++i) {
      if (!std::isfinite(rho_[i]) || !std::isfinite(p_[i])) throw ConfigError("tabulated law has a non-finite node");
      if (i > 0 && !(rho_[i] > rho_[i - 1])) throw ConfigError("tabulated law rho nodes must be strictly increasing");
    }
  }

  double operator()(double rho) const noexcept {
    std::size_t hi = static_cast<std::size_t>(std::upper_bound(rho_.begin(), rho_.end(), rho) - rho_.begin());
    hi = std::clamp<std::size_t>(hi, 1, rho_.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (rho - rho_[lo]) / (rho_[hi] - rho_[lo]);
    return p_[lo] + t * (p_[hi] - p_[lo]);
  }

  const std::vector<double>& rho() const noexcept { return rho_; }
  const std::vector<double>& p() const noexcept { return p_; }

 private:
  std::vector<double> rho_;
  std::vector<double> p_;
};

/// P(rho) for the macroscopic equation: a closed-form law or a table.
using PressureLaw = std::variant<Prediction, TabulatedLaw>;

inline double evaluate(const PressureLaw& law, double rho) {
  return std::visit([rho](const auto& l) { return l(rho); }, law);
}

struct PdeSnapshot {
  double t = 0.0;
  std::vector<double> rho;
};

struct PdeSolution {
  std::size_t grid_size = 0;
  double dx = 0.0;
  double dt = 0.0;
  std::vector<PdeSnapshot> snapshots;
  /// P decreasing somewhere on the initial range (equation possibly ill-posed).
  bool non_monotone = false;
  std::vector<std::string> warnings;

  double mass(std::size_t snapshot) const {
    double m = 0.0;
    for (double v : snapshots.at(snapshot).rho) m += v * dx;
    return m;
  }
};

/// Largest |P'| on [lo, hi] by centred differences at 65 nodes; also reports
/// whether P' < 0 anywhere.
inline double max_pressure_slope(const PressureLaw& law, double lo, double hi, bool* decreasing = nullptr) {
  constexpr int kNodes = 65;
  double m = 0.0;
  bool dec = false;
  for (int k = 0; k < kNodes; ++k) {
    const double rho = hi > lo ? lo + (hi - lo) * k / (kNodes - 1) : lo;
    const double h = 1e-6 * std::max(1.0, std::abs(rho));
    const double slope = (evaluate(law, rho + h) - evaluate(law, std::max(0.0, rho - h))) / (rho + h - std::max(0.0, rho - h));
    m = std::max(m, std::abs(slope));
    if (slope < 0.0) dec = true;
    if (!(hi > lo)) break;
  }
  if (decreasing != nullptr) *decreasing = dec;
  return m;
}

/// Explicit conservative scheme for d_t rho = 1/2 d_xx P(rho) on the unit
/// torus:
///   rho_i <- rho_i + dt/(2 dx^2) (P(rho_{i+1}) - 2 P(rho_i) + P(rho_{i-1})).
/// Snapshots at t = 0, every snapshot_stride steps, and at t_end.
inline PdeSolution solve_pde(const PressureLaw& law, const std::vector<double>& rho0, double t_end, double dx,
                             double dt, std::size_t snapshot_stride) {
  if (rho0.empty()) throw ConfigError("initial density is empty");
  if (!(dx > 0.0) || !(dt > 0.0) || !(t_end >= 0.0)) throw ConfigError("dx, dt must be positive and t_end >= 0");
  if (snapshot_stride == 0) throw ConfigError("snapshot_stride must be positive");
  const std::size_t m = rho0.size();
  if (std::abs(static_cast<double>(m) * dx - 1.0) > 1e-9)
    throw ConfigError("grid of " + std::to_string(m) + " cells does not match dx = " + std::to_string(dx));
  for (double v : rho0)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("initial density must be finite and nonnegative");

  PdeSolution sol;
  sol.grid_size = m;
  sol.dx = dx;
  sol.dt = dt;

  const auto [lo_it, hi_it] = std::minmax_element(rho0.begin(), rho0.end());
  bool decreasing = false;
  const double slope = 2.0 * max_pressure_slope(law, *lo_it, *hi_it, &decreasing);
  if (slope > 0.0) {
    const double limit = 0.9 * dx * dx / slope;
    if (dt > limit) {
      throw ConfigError("dt = " + std::to_string(dt) + " violates the explicit stability bound " +
                        std::to_string(limit));
    }
  }
  if (decreasing) {
    sol.non_monotone = true;
    sol.warnings.push_back("pressure law is decreasing on part of the initial density range");
  }

  std::vector<double> rho = rho0, next(m), pres(m);
  sol.snapshots.push_back({0.0, rho});
  const auto n_steps = static_cast<std::uint64_t>(std::ceil(t_end / dt - 1e-9));
  double t = 0.0;
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    const double h = std::min(dt, t_end - t);
    for (std::size_t i = 0; i < m; ++i) pres[i] = evaluate(law, rho[i]);
    const double c = h / (2.0 * dx * dx);
    for (std::size_t i = 0; i < m; ++i) {
      const double left = pres[i == 0 ? m - 1 : i - 1];
      const double right = pres[i + 1 == m ? 0 : i + 1];
      next[i] = rho[i] + c * (right - 2.0 * pres[i] + left);
      if (next[i] < -1e-12 || !std::isfinite(next[i])) {
        throw InstabilityError("negative density " + std::to_string(next[i]) + " at cell " + std::to_string(i) +
                                   ", step " + std::to_string(n),
                               n);
      }
    }
    rho.swap(next);
    t = (n + 1 == n_steps) ? t_end : t + h;
    if ((n + 1) % snapshot_stride == 0 || n + 1 == n_steps) sol.snapshots.push_back({t, rho});
  }
  return sol;
}

}  // namespace virialab
