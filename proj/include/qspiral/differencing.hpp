#pragma once

// Second-order finite differences on uniform grids: central in the interior,
// periodic wraparound on periodic axes, one-sided second order at open ends.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "qspiral/grid.hpp"

namespace qspiral {

enum class Axis { x = 0, y = 1 };

namespace detail {

struct PlainDelta {
  template <class T>
  T operator()(const T& from, const T& to) const { return to - from; }
};

/// Difference of phase-like values reduced into (-period/2, period/2].
struct WrappedDelta {
  double period;
  double operator()(double from, double to) const {
    double d = to - from;
    return d - period * std::round(d / period);
  }
};

template <class T, class Delta>
void first_derivative_line(const T* f, std::size_t stride, std::size_t n, double h,
                           bool periodic, T* out, Delta delta) {
  const double inv2h = 1.0 / (2.0 * h);
  auto at = [&](std::size_t i) -> const T& { return f[i * stride]; };
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i * stride] = delta(at(i - 1), at(i + 1)) * inv2h;
  if (periodic) {
    out[0] = delta(at(n - 1), at(1)) * inv2h;
    out[(n - 1) * stride] = delta(at(n - 2), at(0)) * inv2h;
  } else {
    // f'(0) = (-3 f0 + 4 f1 - f2) / 2h written with differences.
    out[0] = (4.0 * delta(at(0), at(1)) - delta(at(0), at(2))) * inv2h;
    out[(n - 1) * stride] =
        (4.0 * delta(at(n - 2), at(n - 1)) - delta(at(n - 3), at(n - 1))) * inv2h;
  }
}

template <class T>
void second_derivative_line(const T* f, std::size_t stride, std::size_t n, double h,
                            bool periodic, T* out) {
  const double inv_h2 = 1.0 / (h * h);
  auto at = [&](std::size_t i) -> const T& { return f[i * stride]; };
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i * stride] = (at(i - 1) - 2.0 * at(i) + at(i + 1)) * inv_h2;
  if (periodic) {
    out[0] = (at(n - 1) - 2.0 * at(0) + at(1)) * inv_h2;
    out[(n - 1) * stride] = (at(n - 2) - 2.0 * at(n - 1) + at(0)) * inv_h2;
  } else {
    out[0] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * inv_h2;
    out[(n - 1) * stride] =
        (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) * inv_h2;
  }
}

template <class T, class Delta>
std::vector<T> apply_first(std::span<const T> f, const Grid1D& g, Delta delta) {
  std::vector<T> out(f.size());
  first_derivative_line(f.data(), 1, g.size(), g.spacing(), g.periodic(), out.data(), delta);
  return out;
}

template <class T, class Delta>
std::vector<T> apply_first(std::span<const T> f, const Grid2D& g, Axis axis, Delta delta) {
  std::vector<T> out(f.size());
  if (axis == Axis::x) {
    for (std::size_t j = 0; j < g.ny(); ++j)
      first_derivative_line(f.data() + g.index(0, j), 1, g.nx(), g.x_axis().spacing(),
                            g.x_axis().periodic(), out.data() + g.index(0, j), delta);
  } else {
    for (std::size_t i = 0; i < g.nx(); ++i)
      first_derivative_line(f.data() + i, g.nx(), g.ny(), g.y_axis().spacing(),
                            g.y_axis().periodic(), out.data() + i, delta);
  }
  return out;
}

}  // namespace detail

template <class T>
std::vector<T> partial(std::span<const T> f, const Grid1D& g, Axis = Axis::x) {
  return detail::apply_first(f, g, detail::PlainDelta{});
}

template <class T>
std::vector<T> partial(std::span<const T> f, const Grid2D& g, Axis axis) {
  return detail::apply_first(f, g, axis, detail::PlainDelta{});
}

template <class T>
std::vector<T> partial(const std::vector<T>& f, const Grid1D& g, Axis a = Axis::x) {
  return partial(std::span<const T>(f), g, a);
}

template <class T>
std::vector<T> partial(const std::vector<T>& f, const Grid2D& g, Axis a) {
  return partial(std::span<const T>(f), g, a);
}

/// Derivative of a phase field defined modulo `period`; increments are wrapped
/// so windings and periodic seams do not produce spikes.
inline std::vector<double> phase_partial(std::span<const double> f, const Grid1D& g,
                                         double period, Axis = Axis::x) {
  return detail::apply_first(f, g, detail::WrappedDelta{period});
}

inline std::vector<double> phase_partial(std::span<const double> f, const Grid2D& g,
                                         double period, Axis axis) {
  return detail::apply_first(f, g, axis, detail::WrappedDelta{period});
}

template <class T>
std::vector<T> second_partial(std::span<const T> f, const Grid1D& g, Axis = Axis::x) {
  std::vector<T> out(f.size());
  detail::second_derivative_line(f.data(), 1, g.size(), g.spacing(), g.periodic(), out.data());
  return out;
}

template <class T>
std::vector<T> second_partial(std::span<const T> f, const Grid2D& g, Axis axis) {
  std::vector<T> out(f.size());
  if (axis == Axis::x) {
    for (std::size_t j = 0; j < g.ny(); ++j)
      detail::second_derivative_line(f.data() + g.index(0, j), 1, g.nx(), g.x_axis().spacing(),
                                     g.x_axis().periodic(), out.data() + g.index(0, j));
  } else {
    for (std::size_t i = 0; i < g.nx(); ++i)
      detail::second_derivative_line(f.data() + i, g.nx(), g.ny(), g.y_axis().spacing(),
                                     g.y_axis().periodic(), out.data() + i);
  }
  return out;
}

template <class T>
std::vector<T> second_partial(const std::vector<T>& f, const Grid1D& g, Axis a = Axis::x) {
  return second_partial(std::span<const T>(f), g, a);
}

template <class T>
std::vector<T> second_partial(const std::vector<T>& f, const Grid2D& g, Axis a) {
  return second_partial(std::span<const T>(f), g, a);
}

/// Sum over grid points with the grid's quadrature weights.
template <class G>
double integrate(std::span<const double> f, const G& g) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += g.weight(k) * f[k];
  return s;
}

template <class G>
double integrate(const std::vector<double>& f, const G& g) {
  return integrate(std::span<const double>(f), g);
}

}  // namespace qspiral
