#pragma once

// Ideal-gas closure U(rho, sigma) and the baroclinic coefficients G_j.
//
// With the affine entropy map S(sigma) = s1*sigma + s0:
//   U   = cv (rho e^{S - sigma0})^{1/cv}
//   T   = dU/dS = (rho e^{S - sigma0})^{1/cv}
//   H   = d(rho U)/d rho = (cv + 1) T
//   tau = dU/d sigma = S'(sigma) T = s1 T
//   P   = rho^2 dU/d rho = rho T
//   G_j = (-1)^j hbar tau rho / (4 rho_j)

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qspiral/errors.hpp"
#include "qspiral/grid.hpp"

namespace qspiral {

struct EosParams {
  double cv = 1.0;
  double sigma0 = 0.0;
  double entropy_slope = 1.0;   // S'(sigma)
  double entropy_offset = 0.0;  // S(0)

  void validate() const {
    require(cv > 0.0 && std::isfinite(cv), "EosParams: cv must be positive");
    require(std::isfinite(sigma0) && std::isfinite(entropy_slope) &&
                std::isfinite(entropy_offset),
            "EosParams: parameters must be finite");
  }
  double entropy(double sigma) const { return entropy_slope * sigma + entropy_offset; }
  bool homentropic() const { return entropy_slope == 0.0; }
};

struct ThermoState {
  double U = 0.0;
  double T = 0.0;
  double H = 0.0;
  double tau = 0.0;
  double P = 0.0;
};

namespace detail {
inline void check_density(double rho, const char* who) {
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw DomainError(std::string(who) + ": density must be finite and non-negative");
}
}  // namespace detail

inline double temperature(double rho, double sigma, const EosParams& p) {
  detail::check_density(rho, "temperature");
  if (rho == 0.0) return 0.0;
  const double t = std::pow(rho * std::exp(p.entropy(sigma) - p.sigma0), 1.0 / p.cv);
  if (std::isfinite(t) && t > 0.0) return t;
  // Log form when the Boltzmann factor alone over- or underflows.
  return std::exp((std::log(rho) + p.entropy(sigma) - p.sigma0) / p.cv);
}

inline double internal_energy(double rho, double sigma, const EosParams& p) {
  p.validate();
  detail::check_density(rho, "internal_energy");
  return p.cv * temperature(rho, sigma, p);
}

inline ThermoState temperature_enthalpy(double rho, double sigma, const EosParams& p) {
  p.validate();
  detail::check_density(rho, "temperature_enthalpy");
  ThermoState s;
  s.T = temperature(rho, sigma, p);
  s.U = p.cv * s.T;
  s.H = (p.cv + 1.0) * s.T;
  s.tau = p.entropy_slope * s.T;
  s.P = rho * s.T;
  return s;
}

struct BaroclinicTerms {
  double G1 = 0.0;
  double G2 = 0.0;
  bool masked = false;  // a component density is at or below the floor
};

inline BaroclinicTerms baroclinic_G(double rho1, double rho2, double sigma, const EosParams& p,
                                    const PhysConsts& consts = {},
                                    double floor = std::numeric_limits<double>::min()) {
  p.validate();
  detail::check_density(rho1, "baroclinic_G");
  detail::check_density(rho2, "baroclinic_G");
  if (rho1 <= floor || rho2 <= floor) return {0.0, 0.0, true};
  const double rho = rho1 + rho2;
  const double tau = p.entropy_slope * temperature(rho, sigma, p);
  const double q = consts.hbar * tau * rho / 4.0;
  return {-q / rho1, q / rho2, false};
}

/// Enthalpy closure used by the time evolvers: either barotropic H = a rho
/// (energy density a rho^2 / 2, no entropy dependence) or the ideal gas.
struct BarotropicClosure {
  double a = 0.0;
};

using Closure = std::variant<BarotropicClosure, EosParams>;

/// Enthalpy H(rho, sigma).
inline double closure_enthalpy(const Closure& c, double rho, double sigma) {
  if (const auto* b = std::get_if<BarotropicClosure>(&c)) return b->a * rho;
  const auto& e = std::get<EosParams>(c);
  return (e.cv + 1.0) * temperature(rho, sigma, e);
}

/// Thermal energy density rho * U(rho, sigma).
inline double closure_energy_density(const Closure& c, double rho, double sigma) {
  if (const auto* b = std::get_if<BarotropicClosure>(&c)) return 0.5 * b->a * rho * rho;
  const auto& e = std::get<EosParams>(c);
  return rho * e.cv * temperature(rho, sigma, e);
}

/// Effective temperature tau = S'(sigma) T; zero for barotropic closures.
inline double closure_tau(const Closure& c, double rho, double sigma) {
  if (std::holds_alternative<BarotropicClosure>(c)) return 0.0;
  const auto& e = std::get<EosParams>(c);
  return e.entropy_slope * temperature(rho, sigma, e);
}

/// Pointwise thermodynamic fields over arrays of (rho1, rho2, sigma).
struct ThermoFields {
  std::vector<double> U, T, H, tau, P, G1, G2;
  std::vector<std::uint8_t> g_valid;
};

inline ThermoFields thermo_fields(std::span<const double> rho1, std::span<const double> rho2,
                                  std::span<const double> sigma, const EosParams& p,
                                  const PhysConsts& consts = {},
                                  double floor = std::numeric_limits<double>::min()) {
  const std::size_t n = rho1.size();
  if (rho2.size() != n || sigma.size() != n)
    throw InvalidField("thermo_fields: array lengths differ");
  ThermoFields f;
  for (auto* v : {&f.U, &f.T, &f.H, &f.tau, &f.P, &f.G1, &f.G2}) v->resize(n);
  f.g_valid.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto s = temperature_enthalpy(rho1[k] + rho2[k], sigma[k], p);
    f.U[k] = s.U;
    f.T[k] = s.T;
    f.H[k] = s.H;
    f.tau[k] = s.tau;
    f.P[k] = s.P;
    const auto g = baroclinic_G(rho1[k], rho2[k], sigma[k], p, consts, floor);
    f.G1[k] = g.G1;
    f.G2[k] = g.G2;
    f.g_valid[k] = !g.masked;
  }
  return f;
}

}  // namespace qspiral
