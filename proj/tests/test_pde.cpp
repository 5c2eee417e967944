#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "virialab/pde.hpp"

using namespace virialab;

namespace {

constexpr double kPi = std::numbers::pi;

/// P(rho) = sigma^2 rho, the heat law.
Prediction heat_law(double sigma = 1.0) { return Prediction{PredictionKind::MeanField, 2.0, 1.5, 1.0, 1.0, 0.0, sigma}; }

std::vector<double> cosine(std::size_t m, double mean, double amp) {
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = mean + amp * std::cos(2.0 * kPi * (i + 0.5) / m);
  return v;
}

std::vector<double> bump(std::size_t m, double width) {
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = (i + 0.5) / m - 0.5;
    v[i] = 0.05 + std::exp(-x * x / (2.0 * width * width));
  }
  return v;
}

/// First Fourier cosine coefficient of a cell-centred profile.
double cos_mode(const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * std::cos(2.0 * kPi * (i + 0.5) / v.size());
  return 2.0 * s / v.size();
}

/// Width between the 10% and 90% quantiles of the mass above the floor.
double interquantile_width(const std::vector<double>& v, double floor) {
  std::vector<double> cum(v.size() + 1, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) cum[i + 1] = cum[i] + (v[i] - floor);
  auto q = [&](double f) {
    const double target = f * cum.back();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (cum[i + 1] >= target) return (i + (target - cum[i]) / (cum[i + 1] - cum[i])) / v.size();
    return 1.0;
  };
  return q(0.9) - q(0.1);
}

}  // namespace

TEST(Pde, ConstantStaysConstant) {
  const std::size_t m = 50;
  const PressureLaw law = Prediction{PredictionKind::MeanField, 2.0, 1.5, 1.0, 1.0, 3.0, 1.0};
  const PdeSolution sol = solve_pde(law, std::vector<double>(m, 1.7), 0.01, 1.0 / m, 1e-5, 100);
  for (const auto& snap : sol.snapshots)
    for (double v : snap.rho) EXPECT_NEAR(v, 1.7, 1e-14);
}

TEST(Pde, HeatEigenmodeDecay) {
  // amplitude halves at t = ln 2 / (sigma^2 (2 pi)^2 / 2); the semi-discrete
  // scheme decays with the discrete Laplacian eigenvalue, which converges as dx^2
  const std::size_t m = 200;
  const double dx = 1.0 / m, sigma = 1.0;
  const double t_half = std::log(2.0) / (0.5 * sigma * sigma * 4.0 * kPi * kPi);
  const double dt = 0.01 * dx * dx;
  const PdeSolution sol = solve_pde(heat_law(sigma), cosine(m, 1.0, 0.1), t_half, dx, dt, 1000000000);
  const double amp = cos_mode(sol.snapshots.back().rho);
  EXPECT_NEAR(sol.snapshots.back().t, t_half, 1e-15);
  EXPECT_NEAR(amp / 0.05, 1.0, 1e-4);
}

TEST(Pde, MassConservation) {
  const std::size_t m = 128;
  const PressureLaw law = Prediction{PredictionKind::MeanField, 2.0, 1.5, 1.0, 1.0, 2.5, 1.0};
  const auto rho0 = bump(m, 0.05);
  const double dx = 1.0 / m;
  const double limit = 0.9 * dx * dx / (2.0 * max_pressure_slope(law, 0.0, 1.1));
  const PdeSolution sol = solve_pde(law, rho0, 0.01, dx, 0.5 * limit, 10);
  const double m0 = sol.mass(0);
  for (std::size_t k = 0; k < sol.snapshots.size(); ++k) EXPECT_NEAR(sol.mass(k), m0, 1e-10);
}

TEST(Pde, TranslationEquivariance) {
  const std::size_t m = 64, shift = 13;
  const PressureLaw law = Prediction{PredictionKind::Claim1, 2.0, 1.5, 1.0, 1.0, 0.0, 1.0};
  const auto rho0 = bump(m, 0.1);
  std::vector<double> shifted(m);
  for (std::size_t i = 0; i < m; ++i) shifted[(i + shift) % m] = rho0[i];
  const double dx = 1.0 / m, dt = 1e-6;
  const PdeSolution a = solve_pde(law, rho0, 1e-3, dx, dt, 100);
  const PdeSolution b = solve_pde(law, shifted, 1e-3, dx, dt, 100);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k)
    for (std::size_t i = 0; i < m; ++i) EXPECT_EQ(b.snapshots[k].rho[(i + shift) % m], a.snapshots[k].rho[i]);
}

TEST(Pde, GridRefinementOrder) {
  // error of the t_end profile against the exact heat solution at M, 2M
  const double t_end = 0.01, sigma = 1.0;
  auto error_at = [&](std::size_t m) {
    const double dx = 1.0 / m;
    const PdeSolution sol = solve_pde(heat_law(sigma), cosine(m, 1.0, 0.1), t_end, dx, 0.05 * dx * dx, 1000000000);
    const double decay = std::exp(-0.5 * sigma * sigma * 4.0 * kPi * kPi * t_end);
    double err = 0.0;
    const auto exact = cosine(m, 1.0, 0.1 * decay);
    for (std::size_t i = 0; i < m; ++i) err = std::max(err, std::abs(sol.snapshots.back().rho[i] - exact[i]));
    return err;
  };
  const double e1 = error_at(32), e2 = error_at(64);
  EXPECT_GE(std::log2(e1 / e2), 1.8) << e1 << " " << e2;
}

TEST(Pde, ComparisonPrinciple) {
  const std::size_t m = 100;
  const PressureLaw law = Prediction{PredictionKind::MeanField, 2.0, 1.5, 1.0, 1.0, 2.0, 1.0};
  auto lo = bump(m, 0.08);
  auto hi = lo;
  for (std::size_t i = 0; i < m; ++i) hi[i] += 0.1 + 0.05 * std::sin(2.0 * kPi * i / m);
  const double dx = 1.0 / m;
  const double limit = 0.9 * dx * dx / (2.0 * max_pressure_slope(law, 0.0, 1.3));
  const PdeSolution a = solve_pde(law, lo, 2e-3, dx, 0.5 * limit, 50);
  const PdeSolution b = solve_pde(law, hi, 2e-3, dx, 0.5 * limit, 50);
  for (std::size_t k = 0; k < a.snapshots.size(); ++k)
    for (std::size_t i = 0; i < m; ++i) EXPECT_LE(a.snapshots[k].rho[i], b.snapshots[k].rho[i] + 1e-10);
}

TEST(Pde, MeanFieldSpreadsFasterThanHeat) {
  const std::size_t m = 200;
  const double dx = 1.0 / m;
  const auto rho0 = bump(m, 0.03);
  const PressureLaw mf = Prediction{PredictionKind::MeanField, 2.0, 1.5, 1.0, 1.0, 2.0, 1.0};
  const double dt = 0.5 * 0.9 * dx * dx / (2.0 * max_pressure_slope(mf, 0.0, 1.1));
  const PdeSolution a = solve_pde(mf, rho0, 2e-3, dx, dt, 100000);
  const PdeSolution b = solve_pde(heat_law(), rho0, 2e-3, dx, dt, 100000);
  EXPECT_GT(interquantile_width(a.snapshots.back().rho, 0.05), interquantile_width(b.snapshots.back().rho, 0.05));
}

TEST(Pde, StabilityBoundEnforced) {
  const std::size_t m = 100;
  const double dx = 1.0 / m;
  EXPECT_THROW(solve_pde(heat_law(), cosine(m, 1.0, 0.1), 0.01, dx, dx * dx, 10), ConfigError);
  EXPECT_THROW(solve_pde(heat_law(), cosine(m, 1.0, 0.1), 0.01, 0.5, 1e-6, 10), ConfigError);
}

TEST(Pde, NegativeDensityIsInstability) {
  // a decreasing pressure law is anti-diffusive; the step bound does not save it
  const PressureLaw law = TabulatedLaw({0.0, 10.0}, {0.0, -10.0});
  const std::size_t m = 50;
  const double dx = 1.0 / m;
  try {
    solve_pde(law, bump(m, 0.05), 1.0, dx, 0.2 * dx * dx, 10);
    FAIL() << "expected an instability";
  } catch (const InstabilityError& e) {
    EXPECT_GT(e.step(), 0u);
  }
}

TEST(Pde, TabulatedLawInterpolation) {
  const TabulatedLaw law({1.0, 2.0, 4.0}, {1.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(law(1.5), 2.0);
  EXPECT_DOUBLE_EQ(law(3.0), 3.5);
  EXPECT_DOUBLE_EQ(law(0.0), -1.0);
  EXPECT_DOUBLE_EQ(law(6.0), 5.0);
  EXPECT_THROW(TabulatedLaw({1.0, 1.0}, {0.0, 1.0}), ConfigError);
  EXPECT_THROW(TabulatedLaw({1.0}, {0.0}), ConfigError);
}
