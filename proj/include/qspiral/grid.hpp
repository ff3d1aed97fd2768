#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "qspiral/errors.hpp"

namespace qspiral {

struct PhysConsts {
  double hbar = 1.0;
  double mass = 1.0;

  void validate() const {
    require(hbar > 0.0 && std::isfinite(hbar), "PhysConsts: hbar must be positive");
    require(mass > 0.0 && std::isfinite(mass), "PhysConsts: mass must be positive");
  }
  /// hbar^2 / 2m, the coefficient of the Laplacian.
  double kinetic_coefficient() const { return hbar * hbar / (2.0 * mass); }
  /// 2m / hbar^2, converts energies to inverse squared lengths.
  double kappa() const { return 2.0 * mass / (hbar * hbar); }
};

/// Uniform 1D grid. A periodic grid omits the right endpoint.
class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n_points, bool periodic)
      : x_min_(x_min), x_max_(x_max), n_(n_points), periodic_(periodic) {
    require(n_points >= 8, "Grid1D: n_points must be >= 8");
    require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min,
            "Grid1D: require x_max > x_min");
    h_ = (x_max - x_min) / static_cast<double>(periodic ? n_ : n_ - 1);
    require(h_ > 0.0, "Grid1D: spacing must be positive");
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  bool periodic() const { return periodic_; }
  double spacing() const { return h_; }
  double length() const { return x_max_ - x_min_; }
  double x(std::size_t i) const { return x_min_ + h_ * static_cast<double>(i); }

  /// Quadrature weight: rectangle rule when periodic, trapezoid otherwise.
  double weight(std::size_t i) const {
    if (!periodic_ && (i == 0 || i + 1 == n_)) return 0.5 * h_;
    return h_;
  }

  bool operator==(const Grid1D&) const = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  bool periodic_;
  double h_ = 0.0;
};

/// Tensor-product grid; storage is row-major with x fastest: index = j*nx + i.
class Grid2D {
 public:
  Grid2D(Grid1D x_axis, Grid1D y_axis) : x_(x_axis), y_(y_axis) {}

  const Grid1D& x_axis() const { return x_; }
  const Grid1D& y_axis() const { return y_; }
  std::size_t nx() const { return x_.size(); }
  std::size_t ny() const { return y_.size(); }
  std::size_t size() const { return nx() * ny(); }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx() + i; }
  double weight(std::size_t k) const { return x_.weight(k % nx()) * y_.weight(k / nx()); }

  bool operator==(const Grid2D&) const = default;

 private:
  Grid1D x_;
  Grid1D y_;
};

}  // namespace qspiral
