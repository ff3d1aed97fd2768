#pragma once

// Stationary 1D problem: (hbar^2/2m) phi_j'' = (lambda + a rho - i G_j) phi_j,
// rho = |phi_1|^2 + |phi_2|^2, integrated as an initial-value problem in x.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qspiral/errors.hpp"
#include "qspiral/field.hpp"
#include "qspiral/grid.hpp"
#include "qspiral/ode.hpp"

namespace qspiral {

struct Stationary1DParams {
  double lambda = 0.0;
  double a = -2.0;  // H = a rho
  double g = 0.0;   // constant baroclinic term, applied as G_j = (-1)^j g
  // (phi1, phi2, phi1', phi2') at x = 0
  std::array<double, 4> initial{1.0, 0.6, 0.0, 0.0};
  double x_max = 100.0;
  double sample_spacing = 0.01;
  double overflow_guard = 1e8;
  OdeTolerances tol{1e-13, 1e-15};
  PhysConsts consts{};

  void validate() const {
    consts.validate();
    require(x_max > 0.0, "Stationary1DParams: x_max must be positive");
    require(sample_spacing > 0.0, "Stationary1DParams: sample_spacing must be positive");
    require(tol.rtol > 0.0 && tol.atol > 0.0, "Stationary1DParams: tolerances must be positive");
    require(overflow_guard > 0.0, "Stationary1DParams: overflow_guard must be positive");
    for (double v : initial) require(std::isfinite(v), "Stationary1DParams: non-finite initial value");
  }
};

struct StationaryTrajectory {
  std::vector<double> x;
  std::vector<Complex> phi1, phi2, dphi1, dphi2;
  std::vector<double> rho;
  std::vector<double> energy_x;  // conserved when g = 0
  bool truncated = false;
  std::string diagnostic;
  OdeResult<8> ode;
};

namespace detail {

// State layout: Re/Im phi1, Re/Im phi2, Re/Im phi1', Re/Im phi2'.
inline OdeState<8> stationary_rhs(const OdeState<8>& y, const Stationary1DParams& p) {
  const double kappa = p.consts.kappa();
  const Complex f1{y[0], y[1]}, f2{y[2], y[3]};
  const double rho = std::norm(f1) + std::norm(f2);
  const Complex c1 = kappa * Complex(p.lambda + p.a * rho, p.g);   // -i G_1 = +i g
  const Complex c2 = kappa * Complex(p.lambda + p.a * rho, -p.g);  // -i G_2 = -i g
  const Complex d1 = c1 * f1, d2 = c2 * f2;
  return {y[4], y[5], y[6], y[7], d1.real(), d1.imag(), d2.real(), d2.imag()};
}

}  // namespace detail

/// E_x = (|phi1'|^2 + |phi2'|^2)/2 - (m/hbar^2)(lambda rho + a rho^2 / 2).
inline double stationary_energy(const OdeState<8>& y, const Stationary1DParams& p) {
  const double rho = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
  const double kin = 0.5 * (y[4] * y[4] + y[5] * y[5] + y[6] * y[6] + y[7] * y[7]);
  return kin - 0.5 * p.consts.kappa() * (p.lambda * rho + 0.5 * p.a * rho * rho);
}

inline StationaryTrajectory stationary_integrate(const Stationary1DParams& p) {
  p.validate();
  StationaryTrajectory out;
  const OdeState<8> y0{p.initial[0], 0.0, p.initial[1], 0.0, p.initial[2], 0.0, p.initial[3], 0.0};
  const auto n_samples = static_cast<std::size_t>(std::floor(p.x_max / p.sample_spacing + 1e-9)) + 1;

  auto record = [&](double x, const OdeState<8>& y) {
    out.x.push_back(x);
    out.phi1.emplace_back(y[0], y[1]);
    out.phi2.emplace_back(y[2], y[3]);
    out.dphi1.emplace_back(y[4], y[5]);
    out.dphi2.emplace_back(y[6], y[7]);
    out.rho.push_back(y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]);
    out.energy_x.push_back(stationary_energy(y, p));
  };
  record(0.0, y0);
  std::size_t next = 1;
  double guard_x = 0.0;

  auto rhs = [&](double, const OdeState<8>& y) { return detail::stationary_rhs(y, p); };
  auto observer = [&](const DenseStep<8>& step) {
    while (next < n_samples) {
      const double xs = std::min(p.sample_spacing * static_cast<double>(next), p.x_max);
      if (xs > step.t_new) break;
      record(xs, step(xs));
      ++next;
    }
    const auto& y = step.y_new;
    if (std::hypot(y[0], y[1], std::hypot(y[2], y[3])) > p.overflow_guard) {
      guard_x = step.t_new;
      return false;
    }
    return true;
  };
  out.ode = integrate_dopri5<8>(rhs, 0.0, y0, p.x_max, p.tol, observer);
  if (out.ode.status == OdeStatus::stopped_by_observer) {
    out.truncated = true;
    out.diagnostic = "overflow guard exceeded at x = " + std::to_string(guard_x);
  } else if (out.ode.status != OdeStatus::completed) {
    out.truncated = true;
    out.diagnostic = "integrator " + to_string(out.ode.status) + " at x = " + std::to_string(out.ode.t);
  }
  return out;
}

/// Local exponents +-sqrt((2m/hbar^2)(lambda + H - i G)) of one component.
struct ExponentPair {
  Complex plus;
  Complex minus;
};

inline ExponentPair local_exponent_pair(double lambda, double H, double G, const PhysConsts& consts = {}) {
  const Complex r = std::sqrt(consts.kappa() * Complex(lambda + H, -G));
  return {r, -r};
}

struct LocalEigenvalues {
  std::array<Complex, 4> exponents;  // component 1 (+, -), component 2 (+, -)
  double min_abs_real = 0.0;
};

/// Exponents for both components with G_1 = G and G_2 = -G (equal component
/// densities), and the smallest |Re| among them.
inline LocalEigenvalues local_eigenvalues(double lambda, double H, double G, const PhysConsts& consts = {}) {
  consts.validate();
  const auto c1 = local_exponent_pair(lambda, H, G, consts);
  const auto c2 = local_exponent_pair(lambda, H, -G, consts);
  LocalEigenvalues out{{c1.plus, c1.minus, c2.plus, c2.minus}, 0.0};
  out.min_abs_real = std::abs(out.exponents[0].real());
  for (const auto& e : out.exponents) out.min_abs_real = std::min(out.min_abs_real, std::abs(e.real()));
  return out;
}

}  // namespace qspiral
