#pragma once

// Direct evaluation of the field Hamiltonian
//   H = int [ (hbar^2/2m) (|psi1'|^2 + |psi2'|^2) + rho U(rho, sigma) ] dx.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "qspiral/differencing.hpp"
#include "qspiral/fft.hpp"
#include "qspiral/field.hpp"
#include "qspiral/thermo.hpp"

namespace qspiral {

/// int (hbar^2/2m) |psi'|^2 dx. Periodic grids use Parseval with the same
/// k^2 as the spectral propagator; open grids use central differences.
inline double kinetic_energy(std::span<const Complex> psi, const Grid1D& g, const PhysConsts& consts,
                             const FftPlan1D* plan = nullptr) {
  if (g.periodic()) {
    std::vector<Complex> hat(psi.begin(), psi.end());
    if (plan) {
      plan->forward(hat);
    } else {
      FftPlan1D own(g.size());
      own.forward(hat);
    }
    const auto k = wavenumbers(g);
    double s = 0.0;
    for (std::size_t i = 0; i < hat.size(); ++i) s += k[i] * k[i] * std::norm(hat[i]);
    const double n = static_cast<double>(g.size());
    return consts.kinetic_coefficient() * s * g.spacing() / n;
  }
  const auto d = partial(psi, g);
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += g.weight(i) * std::norm(d[i]);
  return consts.kinetic_coefficient() * s;
}

inline double thermal_energy(std::span<const Complex> psi1, std::span<const Complex> psi2,
                             std::span<const double> sigma, const Grid1D& g, const Closure& closure) {
  double s = 0.0;
  for (std::size_t i = 0; i < psi1.size(); ++i) {
    const double rho = std::norm(psi1[i]) + std::norm(psi2[i]);
    s += g.weight(i) * closure_energy_density(closure, rho, sigma[i]);
  }
  return s;
}

inline double hamiltonian(std::span<const Complex> psi1, std::span<const Complex> psi2,
                          std::span<const double> sigma, const Grid1D& g, const Closure& closure,
                          const PhysConsts& consts, const FftPlan1D* plan = nullptr) {
  return kinetic_energy(psi1, g, consts, plan) + kinetic_energy(psi2, g, consts, plan) +
         thermal_energy(psi1, psi2, sigma, g, closure);
}

inline double particle_number(std::span<const Complex> psi1, std::span<const Complex> psi2,
                              const Grid1D& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < psi1.size(); ++i)
    s += g.weight(i) * (std::norm(psi1[i]) + std::norm(psi2[i]));
  return s;
}

}  // namespace qspiral
