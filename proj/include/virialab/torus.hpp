#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>

#include "virialab/errors.hpp"

namespace virialab {

inline constexpr int kMaxDimension = 3;

/// Small fixed-capacity vector whose length equals the box dimension.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int dim) : dim_(dim) {}
  Vec(std::initializer_list<double> values) : dim_(static_cast<int>(values.size())) {
    int k = 0;
    for (double v : values) c_[k++] = v;
  }
  explicit Vec(std::span<const double> values) : dim_(static_cast<int>(values.size())) {
    for (int k = 0; k < dim_; ++k) c_[k] = values[k];
  }

  int size() const noexcept { return dim_; }
  double& operator[](int k) noexcept { return c_[k]; }
  double operator[](int k) const noexcept { return c_[k]; }
  const double* begin() const noexcept { return c_.data(); }
  const double* end() const noexcept { return c_.data() + dim_; }

  double norm_squared() const noexcept {
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) s += c_[k] * c_[k];
    return s;
  }
  double norm() const noexcept { return std::sqrt(norm_squared()); }

  Vec operator-() const noexcept {
    Vec r(dim_);
    for (int k = 0; k < dim_; ++k) r[k] = -c_[k];
    return r;
  }
  Vec operator*(double s) const noexcept {
    Vec r(dim_);
    for (int k = 0; k < dim_; ++k) r[k] = c_[k] * s;
    return r;
  }
  friend double dot(const Vec& a, const Vec& b) noexcept {
    double s = 0.0;
    for (int k = 0; k < a.dim_; ++k) s += a.c_[k] * b.c_[k];
    return s;
  }
  friend bool operator==(const Vec& a, const Vec& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (int k = 0; k < a.dim_; ++k)
      if (a.c_[k] != b.c_[k]) return false;
    return true;
  }

 private:
  std::array<double, kMaxDimension> c_{};
  int dim_ = 0;
};

/// Periodic cube [0, side)^dimension.
struct TorusBox {
  int dimension = 1;
  double side = 1.0;

  TorusBox() = default;
  TorusBox(int dim, double L) : dimension(dim), side(L) { validate(); }

  void validate() const {
    if (dimension < 1 || dimension > kMaxDimension)
      throw ConfigError("box dimension must be 1, 2 or 3, got " + std::to_string(dimension));
    if (!(side > 0.0) || !std::isfinite(side))
      throw ConfigError("box side must be positive and finite");
  }

  double volume() const noexcept { return std::pow(side, dimension); }

  friend bool operator==(const TorusBox&, const TorusBox&) = default;
};

/// Canonical representative of one coordinate in [0, L).
inline double wrap_coordinate(double x, double L) noexcept {
  double r = x - L * std::floor(x / L);
  // floor can round r up to exactly L for tiny negative x
  if (r >= L) r -= L;
  if (r < 0.0) r = 0.0;
  return r;
}

/// Shortest periodic representative of a coordinate difference, in [-L/2, L/2).
inline double minimal_image_coordinate(double dx, double L) noexcept {
  double r = dx - L * std::floor(dx / L + 0.5);
  if (r >= 0.5 * L) r -= L;
  if (r < -0.5 * L) r += L;
  return r;
}

/// Same as minimal_image_coordinate for the difference of two wrapped
/// coordinates (|dx| < L), without the floor.
inline double minimal_image_wrapped(double dx, double L, double half_L) noexcept {
  if (dx >= half_L) return dx - L;
  if (dx < -half_L) return dx + L;
  return dx;
}

inline Vec wrap(const Vec& position, const TorusBox& box) {
  if (position.size() != box.dimension) throw DomainError("wrap: position has wrong dimension");
  Vec r(box.dimension);
  for (int k = 0; k < box.dimension; ++k) {
    if (!std::isfinite(position[k])) throw DomainError("wrap: non-finite position component");
    r[k] = wrap_coordinate(position[k], box.side);
  }
  return r;
}

inline Vec minimal_image(const Vec& x, const Vec& y, const TorusBox& box) {
  if (x.size() != box.dimension || y.size() != box.dimension)
    throw DomainError("minimal_image: position has wrong dimension");
  Vec r(box.dimension);
  for (int k = 0; k < box.dimension; ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k]))
      throw DomainError("minimal_image: non-finite position component");
    r[k] = minimal_image_coordinate(x[k] - y[k], box.side);
  }
  return r;
}

inline double torus_distance(const Vec& x, const Vec& y, const TorusBox& box) {
  return minimal_image(x, y, box).norm();
}

}  // namespace virialab
