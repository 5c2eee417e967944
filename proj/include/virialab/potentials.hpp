#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "virialab/errors.hpp"
#include "virialab/torus.hpp"

namespace virialab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// U(r) = 1/(alpha r^alpha) - C on r <= r1, zero beyond. r1 may be infinite,
/// in which case C = 0 and the simulation truncates at half the box side.
struct PowerLawRepulsive {
  double alpha = 2.0;
  double r1 = 1.0;
  friend bool operator==(const PowerLawRepulsive&, const PowerLawRepulsive&) = default;
};

/// U(r) = r0^alpha/(alpha r^alpha) - r0^beta/(beta r^beta) + C on r <= r1.
struct PowerLawAttractiveRepulsive {
  double alpha = 2.0;
  double beta = 1.5;
  double r0 = 1.0;
  double r1 = 1.5;
  friend bool operator==(const PowerLawAttractiveRepulsive&, const PowerLawAttractiveRepulsive&) = default;
};

/// U(r) = exp(-r^2 / (2 width^2)).
struct GaussianRepulsive {
  double width = 1.0;
  friend bool operator==(const GaussianRepulsive&, const GaussianRepulsive&) = default;
};

/// U(r) = (1 - r^3) exp(-r^2 / (2 width^2)), the radial reading of the
/// Gaussian-cubic family so that V(x) = U(|x|) stays even.
struct GaussianCubic {
  double width = 1.0;
  friend bool operator==(const GaussianCubic&, const GaussianCubic&) = default;
};

/// U = 0. Reference system (ideal gas).
struct NoInteraction {
  friend bool operator==(const NoInteraction&, const NoInteraction&) = default;
};

using PotentialSpec =
    std::variant<PowerLawRepulsive, PowerLawAttractiveRepulsive, GaussianRepulsive, GaussianCubic, NoInteraction>;

/// Gaussian families are cut at this many widths in simulations; the force
/// there is below 1e-12 relative to its peak.
inline constexpr double kGaussianRangeInWidths = 8.0;

namespace detail {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// r^(-e) with fast paths for integer and half-integer exponents.
inline double inverse_power(double r, double e) noexcept {
  const double twice = 2.0 * e;
  if (twice == std::floor(twice) && twice >= 0.0 && twice <= 24.0) {
    const int n = static_cast<int>(twice);
    double p = 1.0;
    for (int k = 0; k < n / 2; ++k) p *= r;
    if (n % 2 == 1) p *= std::sqrt(r);
    return 1.0 / p;
  }
  return std::pow(r, -e);
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || std::isnan(v)) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace detail

inline std::string family_name(const PotentialSpec& spec) {
  return std::visit(detail::Overloaded{
                        [](const PowerLawRepulsive&) { return std::string("power_law_repulsive"); },
                        [](const PowerLawAttractiveRepulsive&) {
                          return std::string("power_law_attractive_repulsive");
                        },
                        [](const GaussianRepulsive&) { return std::string("gaussian_repulsive"); },
                        [](const GaussianCubic&) { return std::string("gaussian_cubic"); },
                        [](const NoInteraction&) { return std::string("none"); },
                    },
                    spec);
}

/// Checks the family invariants; throws ConfigError naming the violated one.
inline void validate(const PotentialSpec& spec) {
  std::visit(detail::Overloaded{
                 [](const PowerLawRepulsive& p) {
                   detail::require_positive(p.alpha, "alpha");
                   detail::require_positive(p.r1, "r1");
                 },
                 [](const PowerLawAttractiveRepulsive& p) {
                   detail::require_positive(p.alpha, "alpha");
                   detail::require_positive(p.beta, "beta");
                   detail::require_positive(p.r0, "r0");
                   detail::require_positive(p.r1, "r1");
                   if (!(p.alpha > p.beta))
                     throw ConfigError("attractive-repulsive potential requires α > β (alpha > beta)");
                   if (!(p.r1 > p.r0))
                     throw ConfigError("attractive-repulsive potential requires R₁ > R₀ (r1 > r0)");
                   if (!std::isfinite(p.r1)) throw ConfigError("attractive-repulsive potential requires a finite r1");
                 },
                 [](const GaussianRepulsive& p) { detail::require_positive(p.width, "width"); },
                 [](const GaussianCubic& p) { detail::require_positive(p.width, "width"); },
                 [](const NoInteraction&) {},
             },
             spec);
}

inline bool is_zero_potential(const PotentialSpec& spec) noexcept {
  return std::holds_alternative<NoInteraction>(spec);
}

/// Radius beyond which U vanishes identically; infinite for Gaussians and
/// untruncated power laws.
inline double support_radius(const PotentialSpec& spec) noexcept {
  return std::visit(detail::Overloaded{
                        [](const PowerLawRepulsive& p) { return p.r1; },
                        [](const PowerLawAttractiveRepulsive& p) { return p.r1; },
                        [](const GaussianRepulsive&) { return kInfinity; },
                        [](const GaussianCubic&) { return kInfinity; },
                        [](const NoInteraction&) { return 0.0; },
                    },
                    spec);
}

/// Interaction range actually used by the simulation in `box`.
inline double interaction_cutoff(const PotentialSpec& spec, const TorusBox& box) noexcept {
  return std::visit(detail::Overloaded{
                        [&](const PowerLawRepulsive& p) { return std::isfinite(p.r1) ? p.r1 : 0.5 * box.side; },
                        [](const PowerLawAttractiveRepulsive& p) { return p.r1; },
                        [](const GaussianRepulsive& p) { return kGaussianRangeInWidths * p.width; },
                        [](const GaussianCubic& p) { return kGaussianRangeInWidths * p.width; },
                        [](const NoInteraction&) { return 0.0; },
                    },
                    spec);
}

/// Natural length scale of the potential: r1, r0 or the Gaussian width.
inline double length_scale(const PotentialSpec& spec) noexcept {
  return std::visit(detail::Overloaded{
                        [](const PowerLawRepulsive& p) { return std::isfinite(p.r1) ? p.r1 : 1.0; },
                        [](const PowerLawAttractiveRepulsive& p) { return p.r0; },
                        [](const GaussianRepulsive& p) { return p.width; },
                        [](const GaussianCubic& p) { return p.width; },
                        [](const NoInteraction&) { return 1.0; },
                    },
                    spec);
}

/// Shift C making the truncated power-law families continuous at r1.
inline double continuity_constant(const PotentialSpec& spec) {
  return std::visit(
      detail::Overloaded{
          [](const PowerLawRepulsive& p) -> double {
            if (!std::isfinite(p.r1))
              throw NotApplicableError("continuity constant undefined for an untruncated power law");
            return 1.0 / (p.alpha * std::pow(p.r1, p.alpha));
          },
          [](const PowerLawAttractiveRepulsive& p) -> double {
            return -(std::pow(p.r0, p.alpha) / (p.alpha * std::pow(p.r1, p.alpha)) -
                     std::pow(p.r0, p.beta) / (p.beta * std::pow(p.r1, p.beta)));
          },
          [](const auto&) -> double {
            throw NotApplicableError("continuity constant applies only to truncated power-law potentials");
          },
      },
      spec);
}

/// Pair potential with its shift constant resolved once; this is what the
/// force loops evaluate.
class RadialPotential {
 public:
  explicit RadialPotential(const PotentialSpec& spec) : spec_(spec) {
    validate(spec_);
    if (const auto* p = std::get_if<PowerLawRepulsive>(&spec_)) {
      kind_ = Kind::PowerLaw;
      alpha_ = p->alpha;
      r1_ = p->r1;
      r1_sq_ = p->r1 * p->r1;
      // exponent of r^2 in r^-(alpha+2) is alpha/2 + 1; fast path when it is a multiple of 1/4
      const double quarters = 2.0 * (p->alpha + 2.0);
      if (quarters == std::floor(quarters) && quarters <= 48.0) quarter_plan_ = static_cast<int>(quarters);
      shift_ = std::isfinite(p->r1) ? continuity_constant(spec_) : 0.0;
    } else if (const auto* q = std::get_if<PowerLawAttractiveRepulsive>(&spec_)) {
      kind_ = Kind::AttractiveRepulsive;
      alpha_ = q->alpha;
      beta_ = q->beta;
      r1_ = q->r1;
      shift_ = continuity_constant(spec_);
      r0_alpha_ = std::pow(q->r0, q->alpha);
      r0_beta_ = std::pow(q->r0, q->beta);
    } else if (const auto* g = std::get_if<GaussianRepulsive>(&spec_)) {
      kind_ = Kind::Gaussian;
      w2_ = g->width * g->width;
    } else if (const auto* c = std::get_if<GaussianCubic>(&spec_)) {
      kind_ = Kind::GaussianCubic;
      w2_ = c->width * c->width;
    }
  }

  const PotentialSpec& spec() const noexcept { return spec_; }

  double value(double r) const {
    if (!(r > 0.0)) throw DomainError("potential evaluated at r <= 0");
    return std::visit(detail::Overloaded{
                          [&](const PowerLawRepulsive& p) {
                            if (r > p.r1) return 0.0;
                            return detail::inverse_power(r, p.alpha) / p.alpha - shift_;
                          },
                          [&](const PowerLawAttractiveRepulsive& p) {
                            if (r > p.r1) return 0.0;
                            return r0_alpha_ * detail::inverse_power(r, p.alpha) / p.alpha -
                                   r0_beta_ * detail::inverse_power(r, p.beta) / p.beta + shift_;
                          },
                          [&](const GaussianRepulsive& p) { return std::exp(-r * r / (2.0 * p.width * p.width)); },
                          [&](const GaussianCubic& p) {
                            return (1.0 - r * r * r) * std::exp(-r * r / (2.0 * p.width * p.width));
                          },
                          [](const NoInteraction&) { return 0.0; },
                      },
                      spec_);
  }

  /// U'(r). Unchecked: callers guarantee r > 0. Dispatches on a cached tag
  /// rather than visiting the variant: this sits in the innermost pair loop.
  double derivative_unchecked(double r) const noexcept {
    switch (kind_) {
      case Kind::PowerLaw:
        if (r > r1_) return 0.0;
        return -detail::inverse_power(r, alpha_ + 1.0);
      case Kind::AttractiveRepulsive:
        if (r > r1_) return 0.0;
        return -r0_alpha_ * detail::inverse_power(r, alpha_ + 1.0) + r0_beta_ * detail::inverse_power(r, beta_ + 1.0);
      case Kind::Gaussian:
        return -r / w2_ * std::exp(-r * r / (2.0 * w2_));
      case Kind::GaussianCubic: {
        const double e = std::exp(-r * r / (2.0 * w2_));
        return e * (-3.0 * r * r - (1.0 - r * r * r) * r / w2_);
      }
      case Kind::None:
        return 0.0;
    }
    return 0.0;
  }

  /// -U'(r)/r from r^2 > 0, the pair-force coefficient: F_ij = force_over_r * (x_i - x_j).
  double force_over_r(double r2) const noexcept {
    if (kind_ == Kind::PowerLaw && quarter_plan_ >= 0) {
      // r^-(alpha+2) = (r^2)^-(q/4) with q = 2(alpha+2): whole powers by
      // multiplication, the quarter remainder by square roots
      if (r2 > r1_sq_) return 0.0;
      double p = 1.0;
      for (int k = 0; k < quarter_plan_ / 4; ++k) p *= r2;
      switch (quarter_plan_ % 4) {
        case 1: p *= std::sqrt(std::sqrt(r2)); break;
        case 2: p *= std::sqrt(r2); break;
        case 3: {
          const double h = std::sqrt(r2);
          p *= h * std::sqrt(h);
          break;
        }
        default: break;
      }
      return 1.0 / p;
    }
    const double r = std::sqrt(r2);
    return -derivative_unchecked(r) / r;
  }

  double derivative(double r) const {
    if (!(r > 0.0)) throw DomainError("potential derivative evaluated at r <= 0");
    return derivative_unchecked(r);
  }

 private:
  enum class Kind { PowerLaw, AttractiveRepulsive, Gaussian, GaussianCubic, None };

  PotentialSpec spec_;
  Kind kind_ = Kind::None;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  double r1_ = 0.0;
  double r1_sq_ = 0.0;
  int quarter_plan_ = -1;
  double w2_ = 1.0;
  double shift_ = 0.0;
  double r0_alpha_ = 1.0;
  double r0_beta_ = 1.0;
};

inline double value(const PotentialSpec& spec, double r) { return RadialPotential(spec).value(r); }

inline double radial_derivative(const PotentialSpec& spec, double r) { return RadialPotential(spec).derivative(r); }

/// -grad V(x) = -U'(|x|) x/|x|.
inline Vec force(const RadialPotential& pot, const Vec& displacement) {
  const double r = displacement.norm();
  if (!(r > 0.0)) throw DomainError("force evaluated at zero displacement");
  return displacement * (-pot.derivative_unchecked(r) / r);
}

inline Vec force(const PotentialSpec& spec, const Vec& displacement) {
  return force(RadialPotential(spec), displacement);
}

/// Isotropic virial kernel (1/d)|x| U'(|x|), the trace average of
/// x_a d_a V(x).
inline double virial_kernel(const RadialPotential& pot, const Vec& displacement) {
  const double r = displacement.norm();
  if (!(r > 0.0)) throw DomainError("virial kernel evaluated at zero displacement");
  return r * pot.derivative_unchecked(r) / displacement.size();
}

inline double virial_kernel(const PotentialSpec& spec, const Vec& displacement) {
  return virial_kernel(RadialPotential(spec), displacement);
}

/// Surface area of the unit sphere in R^d.
inline double unit_sphere_area(int dimension) {
  switch (dimension) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw DomainError("unsupported dimension " + std::to_string(dimension));
  }
}

/// C_V, the integral of V over R^d, by adaptive Gauss-Kronrod quadrature in
/// radial coordinates. Power-law singularities at the origin are removed by
/// the substitution r = r1 t^m with m = 1/(d - alpha).
inline double c_v(const PotentialSpec& spec, int dimension) {
  validate(spec);
  const double area = unit_sphere_area(dimension);
  const RadialPotential pot(spec);
  const double d = dimension;
  constexpr unsigned kMaxDepth = 20;
  constexpr double kTol = 1e-11;
  using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;

  auto power_law = [&](double leading_exponent, double r1) {
    if (!std::isfinite(r1)) {
      throw DivergenceError("C_V diverges for an untruncated power law: U(r) r^(d-1) ~ r^" +
                            std::to_string(d - 1.0 - leading_exponent) + " is not integrable on (0, inf)");
    }
    if (leading_exponent >= d) {
      throw DivergenceError("C_V diverges at the origin: alpha = " + std::to_string(leading_exponent) +
                            " >= dimension " + std::to_string(dimension));
    }
    const double m = 1.0 / (d - leading_exponent);
    auto integrand = [&](double t) {
      // Kronrod nodes are interior; t = 0 is never sampled
      if (t <= 0.0) return 0.0;
      const double r = r1 * std::pow(t, m);
      const double jac = r1 * m * std::pow(t, m - 1.0);
      return pot.value(r) * std::pow(r, d - 1.0) * jac;
    };
    return area * Quad::integrate(integrand, 0.0, 1.0, kMaxDepth, kTol);
  };

  return std::visit(detail::Overloaded{
                        [&](const PowerLawRepulsive& p) { return power_law(p.alpha, p.r1); },
                        [&](const PowerLawAttractiveRepulsive& p) { return power_law(p.alpha, p.r1); },
                        [&](const auto& g) -> double {
                          if constexpr (std::is_same_v<std::decay_t<decltype(g)>, NoInteraction>) {
                            return 0.0;
                          } else {
                            auto integrand = [&](double r) {
                              return r > 0.0 ? pot.value(r) * std::pow(r, d - 1.0) : (d == 1.0 ? 1.0 : 0.0);
                            };
                            return area * Quad::integrate(integrand, 0.0, 40.0 * g.width, kMaxDepth, kTol);
                          }
                        },
                    },
                    spec);
}

}  // namespace virialab
