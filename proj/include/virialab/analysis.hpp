#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "virialab/errors.hpp"
#include "virialab/virial.hpp"

namespace virialab {

// ---------------------------------------------------------------------------
// Lattice-heuristic pressure laws (d = 1)

/// Repulsive power law on the equal-spacing lattice:
///   sigma^2 rho                                                   rho < 1/r1
///   sigma^2 rho + a/(a-1) rho^(1+a) - rho^2 / (r1^(a-1) (a-1))    a != 1
///   sigma^2 rho + rho^2 (log rho + log r1 + 1)                    a == 1
inline double claim1_pressure(double alpha, double r1, double noise_sigma, double rho) {
  const double ideal = noise_sigma * noise_sigma * rho;
  if (rho < 1.0 / r1) return ideal;
  if (alpha == 1.0) return ideal + rho * rho * (std::log(rho) + std::log(r1) + 1.0);
  return ideal + alpha / (alpha - 1.0) * std::pow(rho, 1.0 + alpha) -
         rho * rho / (std::pow(r1, alpha - 1.0) * (alpha - 1.0));
}

struct Claim2Value {
  double value = 0.0;
  /// Set on the low-density branch, where an O(rho) correction of unknown
  /// form is missing from the heuristic.
  bool unidentified_linear_correction = false;
};

/// Attractive-repulsive power law (alpha > beta > 1) on the R0-spaced cluster.
inline Claim2Value claim2_pressure(double alpha, double beta, double r0, double r1, double noise_sigma, double rho) {
  if (!(beta > 1.0)) throw UnsupportedParameterError("attractive-repulsive pressure law requires beta > 1");
  if (!(alpha > beta)) throw ConfigError("attractive-repulsive pressure law requires α > β (alpha > beta)");
  if (!(r1 > r0) || !(r0 > 0.0)) throw ConfigError("attractive-repulsive pressure law requires r1 > r0 > 0");
  const double ideal = noise_sigma * noise_sigma * rho;
  if (rho < 1.0 / r0) return {ideal, true};
  const double quad = 1.0 / (std::pow(r1, alpha - 1.0) * (alpha - 1.0)) - 1.0 / (std::pow(r1, beta - 1.0) * (beta - 1.0));
  return {ideal + alpha / (alpha - 1.0) * std::pow(rho, 1.0 + alpha) -
              beta / (beta - 1.0) * std::pow(rho, 1.0 + beta) - quad * rho * rho,
          false};
}

/// sigma^2 rho + C_V rho^2.
inline double meanfield_pressure(double c_v, double noise_sigma, double rho) {
  return noise_sigma * noise_sigma * rho + c_v * rho * rho;
}

struct ExponentPrediction {
  double exponent = 0.0;
  /// rho^2 log(rho) growth at the borderline alpha == d.
  bool log_correction = false;
};

/// High-density growth exponent of P_V: 1 + alpha/d for strong repulsion
/// (alpha > d), 2 for integrable potentials (alpha < d), 2 with a log factor at
/// alpha == d. `compact_support` does not change the rule; it is kept so
/// callers can record which column of a comparison they are predicting.
inline ExponentPrediction predicted_exponent(double alpha, int dimension, bool compact_support = true) {
  (void)compact_support;
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (dimension < 1) throw DomainError("dimension must be positive");
  const double d = dimension;
  if (alpha > d) return {1.0 + alpha / d, false};
  if (alpha < d) return {2.0, false};
  return {2.0, true};
}

// ---------------------------------------------------------------------------
// Log-log slope

struct SlopeFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;
  double r_squared = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  std::size_t n_points = 0;
  /// OLS standard error of the exponent (0 with fewer than 3 points).
  double exponent_std_error = 0.0;
  std::vector<std::string> warnings;
};

/// OLS of log p against log rho over points with rho in [rho_min, rho_max].
/// Nonpositive p are dropped with a warning. With `weights`, each point
/// enters with the given weight instead of 1.
inline SlopeFit fit_loglog_slope(std::span<const double> rho, std::span<const double> p,
                                 std::pair<double, double> window, std::span<const double> weights = {}) {
  if (rho.size() != p.size()) throw DomainError("fit_loglog_slope: rho and p differ in length");
  SlopeFit fit;
  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < window.first || rho[i] > window.second) continue;
    if (!(p[i] > 0.0) || !(rho[i] > 0.0)) {
      fit.warnings.push_back("point rho=" + std::to_string(rho[i]) + " excluded: nonpositive value");
      continue;
    }
    xs.push_back(std::log(rho[i]));
    ys.push_back(std::log(p[i]));
    ws.push_back(weights.empty() ? 1.0 : weights[i]);
  }
  if (xs.size() < 3) {
    throw InsufficientDataError("log-log fit needs at least 3 usable points in [" + std::to_string(window.first) +
                                ", " + std::to_string(window.second) + "], got " + std::to_string(xs.size()));
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    sx += ws[i] * xs[i];
    sy += ws[i] * ys[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
    sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
    syy += ws[i] * (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw InsufficientDataError("log-log fit needs at least two distinct densities");
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double res = ys[i] - (fit.log_prefactor + fit.exponent * xs[i]);
    sse += ws[i] * res * res;
  }
  fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
  fit.n_points = xs.size();
  fit.rho_min = std::exp(*std::min_element(xs.begin(), xs.end()));
  fit.rho_max = std::exp(*std::max_element(xs.begin(), xs.end()));
  if (xs.size() > 2) fit.exponent_std_error = std::sqrt(sse / static_cast<double>(xs.size() - 2) / sxx);
  return fit;
}

inline SlopeFit fit_loglog_slope(const PressureCurve& curve, std::pair<double, double> window, bool weighted = false) {
  std::vector<double> rho, p, w;
  for (const auto& pt : curve.points) {
    rho.push_back(pt.rho_eff);
    p.push_back(pt.p_hat);
    // variance of log p is (std_error / p)^2
    const double rel = pt.p_hat != 0.0 ? pt.std_error / std::abs(pt.p_hat) : 0.0;
    w.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
  }
  return fit_loglog_slope(rho, p, window, weighted ? std::span<const double>(w) : std::span<const double>());
}

// ---------------------------------------------------------------------------
// Simulation vs theory

enum class PredictionKind { Claim1, Claim2, MeanField };

inline std::string to_string(PredictionKind k) {
  switch (k) {
    case PredictionKind::Claim1: return "claim1";
    case PredictionKind::Claim2: return "claim2";
    case PredictionKind::MeanField: return "meanfield";
  }
  return "unknown";
}

inline PredictionKind prediction_kind_from_string(const std::string& s) {
  if (s == "claim1") return PredictionKind::Claim1;
  if (s == "claim2") return PredictionKind::Claim2;
  if (s == "meanfield") return PredictionKind::MeanField;
  throw ConfigError("unknown prediction '" + s + "' (expected claim1, claim2 or meanfield)");
}

/// A closed-form pressure law with its parameters.
struct Prediction {
  PredictionKind kind = PredictionKind::Claim1;
  double alpha = 2.0;
  double beta = 1.5;
  double r0 = 1.0;
  double r1 = 1.0;
  double c_v = 0.0;
  double noise_sigma = 1.0;

  double operator()(double rho) const {
    switch (kind) {
      case PredictionKind::Claim1: return claim1_pressure(alpha, r1, noise_sigma, rho);
      case PredictionKind::Claim2: return claim2_pressure(alpha, beta, r0, r1, noise_sigma, rho).value;
      case PredictionKind::MeanField: return meanfield_pressure(c_v, noise_sigma, rho);
    }
    return 0.0;
  }

  /// Parameters read off the curve's potential; c_v is integrated when needed.
  static Prediction for_potential(PredictionKind kind, const PotentialSpec& spec, double noise_sigma, int dimension) {
    Prediction p;
    p.kind = kind;
    p.noise_sigma = noise_sigma;
    if (const auto* a = std::get_if<PowerLawRepulsive>(&spec)) {
      p.alpha = a->alpha;
      p.r1 = a->r1;
    } else if (const auto* b = std::get_if<PowerLawAttractiveRepulsive>(&spec)) {
      p.alpha = b->alpha;
      p.beta = b->beta;
      p.r0 = b->r0;
      p.r1 = b->r1;
    }
    if (kind == PredictionKind::Claim1 && !std::holds_alternative<PowerLawRepulsive>(spec))
      throw ConfigError("claim1 prediction requires a repulsive power-law potential");
    if (kind == PredictionKind::Claim2 && !std::holds_alternative<PowerLawAttractiveRepulsive>(spec))
      throw ConfigError("claim2 prediction requires an attractive-repulsive potential");
    if (kind == PredictionKind::MeanField) p.c_v = virialab::c_v(spec, dimension);
    return p;
  }
};

struct ComparisonRow {
  double rho = 0.0;
  double p_hat = 0.0;
  double prediction = 0.0;
  double rescaled_prediction = 0.0;
};

struct ComparisonReport {
  Prediction prediction;
  /// c minimising sum (log p_hat - log(c prediction))^2: the geometric mean
  /// of the ratios p_hat / prediction.
  double fitted_constant = 1.0;
  /// max |p_hat - c prediction| / (c prediction) over the used points.
  double max_relative_deviation = 0.0;
  /// Same deviation without rescaling (c = 1).
  double max_relative_deviation_unscaled = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  std::vector<ComparisonRow> rows;
  std::vector<std::string> warnings;
};

inline ComparisonReport compare_report(const PressureCurve& curve, const Prediction& prediction,
                                       std::pair<double, double> window = {0.0, kInfinity}) {
  if (curve.points.empty()) throw InsufficientDataError("compare_report: empty curve");
  ComparisonReport rep;
  rep.prediction = prediction;
  rep.window = window;
  double log_sum = 0.0;
  std::size_t used = 0;
  for (const auto& pt : curve.points) {
    if (pt.rho_eff < window.first || pt.rho_eff > window.second) continue;
    const double pred = prediction(pt.rho_eff);
    if (!(pred > 0.0) || !(pt.p_hat > 0.0)) {
      rep.warnings.push_back("point rho=" + std::to_string(pt.rho_eff) + " excluded: nonpositive value");
      continue;
    }
    log_sum += std::log(pt.p_hat / pred);
    ++used;
    rep.rows.push_back({pt.rho_eff, pt.p_hat, pred, 0.0});
  }
  if (used == 0) throw InsufficientDataError("compare_report: no usable points");
  rep.fitted_constant = std::exp(log_sum / static_cast<double>(used));
  for (auto& row : rep.rows) {
    row.rescaled_prediction = rep.fitted_constant * row.prediction;
    rep.max_relative_deviation =
        std::max(rep.max_relative_deviation, std::abs(row.p_hat - row.rescaled_prediction) / row.rescaled_prediction);
    rep.max_relative_deviation_unscaled =
        std::max(rep.max_relative_deviation_unscaled, std::abs(row.p_hat - row.prediction) / row.prediction);
  }
  return rep;
}

}  // namespace virialab
