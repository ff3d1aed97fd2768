#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qspiral/errors.hpp"
#include "qspiral/grid.hpp"

namespace qspiral {

using Complex = std::complex<double>;
using Mask = std::vector<std::uint8_t>;  // 1 = valid point

template <class G>
struct GridTraits;
template <>
struct GridTraits<Grid1D> {
  static constexpr std::size_t dims = 1;
};
template <>
struct GridTraits<Grid2D> {
  static constexpr std::size_t dims = 2;
};

template <class G>
inline constexpr std::size_t grid_dims = GridTraits<G>::dims;

/// Two-component spinor Psi = (psi1, psi2) sampled on a grid.
template <class G>
struct SpinorField {
  G grid;
  std::vector<Complex> psi1;
  std::vector<Complex> psi2;

  SpinorField(G g, std::vector<Complex> p1, std::vector<Complex> p2)
      : grid(std::move(g)), psi1(std::move(p1)), psi2(std::move(p2)) {
    validate();
  }
  explicit SpinorField(G g)
      : grid(std::move(g)), psi1(grid.size()), psi2(grid.size()) {}

  std::size_t size() const { return psi1.size(); }
  double density(std::size_t k) const { return std::norm(psi1[k]) + std::norm(psi2[k]); }
  double max_density() const {
    double m = 0.0;
    for (std::size_t k = 0; k < size(); ++k) m = std::max(m, density(k));
    return m;
  }

  void validate() const {
    if (psi1.size() != grid.size() || psi2.size() != grid.size())
      throw InvalidField("SpinorField: component length does not match grid");
    for (std::size_t k = 0; k < psi1.size(); ++k) {
      if (!std::isfinite(psi1[k].real()) || !std::isfinite(psi1[k].imag()) ||
          !std::isfinite(psi2[k].real()) || !std::isfinite(psi2[k].imag()))
        throw InvalidField("SpinorField: non-finite value at index " + std::to_string(k));
    }
  }
};

using SpinorField1D = SpinorField<Grid1D>;
using SpinorField2D = SpinorField<Grid2D>;

template <class G>
struct ScalarField {
  G grid;
  std::vector<double> values;
  Mask valid;
};

template <class G>
struct VectorField {
  G grid;
  std::array<std::vector<double>, grid_dims<G>> components;
  Mask valid;
};

/// Default density floor: a fraction of the peak density.
inline constexpr double kRelativeDensityFloor = 1e-14;

template <class G>
double default_floor(const SpinorField<G>& f) {
  const double m = f.max_density();
  return m > 0.0 ? kRelativeDensityFloor * m : kRelativeDensityFloor;
}

}  // namespace qspiral
