#pragma once

// Time evolution of the thermally modified Pauli-Schroedinger equation
//   i hbar d_t psi_j = -(hbar^2/2m) psi_j'' + (H - i G_j) psi_j
// on 1D grids.
//
// split_step_spectral (periodic grids): Strang splitting, half kinetic step
// exact in Fourier space, full potential step, half kinetic step. The
// potential step is the exact flow with rho and sigma frozen: a common phase
// rotation exp(-i H dt/hbar) and, for the ideal gas, mu <- mu + tau rho dt
// with rho_j = (rho +- mu)/2 and phases kept.
//
// crank_nicolson (open grids, psi = 0 outside): midpoint rule with the
// nonlinear potential resolved by fixed-point iteration.

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "qspiral/energy.hpp"
#include "qspiral/errors.hpp"
#include "qspiral/fft.hpp"
#include "qspiral/field.hpp"
#include "qspiral/madelung.hpp"
#include "qspiral/thermo.hpp"

namespace qspiral {

enum class Scheme { split_step_spectral, crank_nicolson };

struct Evolve1DParams {
  Grid1D grid;
  double dt = 1e-3;
  std::size_t n_steps = 1000;
  Closure closure = BarotropicClosure{0.0};
  PhysConsts consts{};
  Scheme scheme = Scheme::split_step_spectral;
  std::size_t stride = 1;             // steps between report samples and snapshots
  bool keep_snapshots = true;
  double clamp_margin = 1e-12;        // |mu| <= rho (1 - margin)
  double relative_floor = kRelativeDensityFloor;
  double cn_tolerance = 1e-12;
  std::size_t cn_max_iterations = 50;
};

struct Snapshot {
  double t = 0.0;
  std::vector<Complex> psi1, psi2;
  std::vector<double> sigma;  // continuously tracked in time
};

struct ConservationReport {
  std::vector<double> t, N, E;
  double max_rel_N_drift = 0.0;
  double max_rel_E_drift = 0.0;
};

struct EvolveResult {
  Grid1D grid;
  std::vector<Snapshot> snapshots;
  ConservationReport report;
  std::size_t clamp_activations = 0;
  double first_clamp_t = -1.0;  // a component has depleted; -1 if never
  std::vector<std::string> log;
};

namespace detail {

inline double phase_step(Complex before, Complex after, double floor) {
  if (std::norm(before) < floor || std::norm(after) < floor) return 0.0;
  return std::arg(after * std::conj(before));
}

/// sigma += (hbar/2)(d arg psi1 - d arg psi2), increments reduced to (-pi, pi].
inline void track_sigma(const std::vector<Complex>& old1, const std::vector<Complex>& old2,
                        const std::vector<Complex>& new1, const std::vector<Complex>& new2,
                        std::vector<double>& sigma, double hbar, double floor) {
  for (std::size_t i = 0; i < sigma.size(); ++i)
    sigma[i] += 0.5 * hbar *
                (phase_step(old1[i], new1[i], floor) - phase_step(old2[i], new2[i], floor));
}

}  // namespace detail

/// Exact potential flow over dt with rho and sigma frozen. Returns the number
/// of points where |mu| had to be clamped.
inline std::size_t potential_substep(std::vector<Complex>& psi1, std::vector<Complex>& psi2,
                                     const std::vector<double>& sigma, const Closure& closure,
                                     double dt, const PhysConsts& consts, double clamp_margin = 1e-12) {
  std::size_t clamped = 0;
  const bool thermal = std::holds_alternative<EosParams>(closure);
  for (std::size_t i = 0; i < psi1.size(); ++i) {
    const double r1 = std::norm(psi1[i]), r2 = std::norm(psi2[i]);
    const double rho = r1 + r2;
    if (!(rho > 0.0)) continue;
    const Complex rot = std::polar(1.0, -closure_enthalpy(closure, rho, sigma[i]) * dt / consts.hbar);
    psi1[i] *= rot;
    psi2[i] *= rot;
    if (!thermal) continue;
    const double tau = closure_tau(closure, rho, sigma[i]);
    if (tau == 0.0) continue;
    double mu = (r1 - r2) + tau * rho * dt;
    const double bound = rho * (1.0 - clamp_margin);
    if (std::abs(mu) > bound) {
      mu = std::copysign(bound, mu);
      ++clamped;
    }
    const double n1 = 0.5 * (rho + mu), n2 = 0.5 * (rho - mu);
    // A vanishing component inherits the phase implied by sigma.
    const double rel = 2.0 * sigma[i] / consts.hbar;
    const Complex u1 = r1 > 0.0 ? psi1[i] / std::sqrt(r1) : std::polar(1.0, std::arg(psi2[i]) + rel);
    const Complex u2 = r2 > 0.0 ? psi2[i] / std::sqrt(r2) : std::polar(1.0, std::arg(psi1[i]) - rel);
    psi1[i] = std::sqrt(n1) * u1;
    psi2[i] = std::sqrt(n2) * u2;
  }
  return clamped;
}

namespace detail {

class SplitStepper {
 public:
  SplitStepper(const Evolve1DParams& p) : p_(p), plan_(p.grid.size()) {
    const auto k = wavenumbers(p.grid);
    half_.resize(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
      half_[i] = std::polar(1.0, -p.consts.hbar * k[i] * k[i] / (2.0 * p.consts.mass) * 0.5 * p.dt);
  }

  std::size_t step(std::vector<Complex>& psi1, std::vector<Complex>& psi2, std::vector<double>& sigma,
                   double floor) {
    kinetic(psi1, psi2, sigma, floor);
    const std::size_t c = potential_substep(psi1, psi2, sigma, p_.closure, p_.dt, p_.consts, p_.clamp_margin);
    kinetic(psi1, psi2, sigma, floor);
    return c;
  }

  const FftPlan1D& plan() const { return plan_; }

 private:
  void kinetic(std::vector<Complex>& psi1, std::vector<Complex>& psi2, std::vector<double>& sigma,
               double floor) {
    old1_ = psi1;
    old2_ = psi2;
    for (auto* psi : {&psi1, &psi2}) {
      plan_.forward(*psi);
      for (std::size_t i = 0; i < psi->size(); ++i) (*psi)[i] *= half_[i];
      plan_.inverse(*psi);
    }
    track_sigma(old1_, old2_, psi1, psi2, sigma, p_.consts.hbar, floor);
  }

  const Evolve1DParams& p_;
  FftPlan1D plan_;
  std::vector<Complex> half_;
  std::vector<Complex> old1_, old2_;
};

/// Thomas algorithm for a constant-coefficient tridiagonal system
/// sub x_{i-1} + diag_i x_i + sup x_{i+1} = rhs_i.
inline void solve_tridiagonal(Complex sub, const std::vector<Complex>& diag, Complex sup,
                              std::vector<Complex>& rhs) {
  const std::size_t n = diag.size();
  std::vector<Complex> c(n);
  Complex denom = diag[0];
  c[0] = sup / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - sub * c[i - 1];
    c[i] = sup / denom;
    rhs[i] = (rhs[i] - sub * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

class CrankNicolsonStepper {
 public:
  explicit CrankNicolsonStepper(const Evolve1DParams& p) : p_(p) {}

  std::size_t step(std::vector<Complex>& psi1, std::vector<Complex>& psi2, std::vector<double>& sigma,
                   double floor) {
    const std::size_t n = psi1.size();
    const double h = p_.grid.spacing();
    const double kin = p_.consts.kinetic_coefficient() / (h * h);
    const Complex a = Complex(0.0, 0.5 * p_.dt / p_.consts.hbar);  // i dt / 2 hbar
    std::vector<Complex> next1 = psi1, next2 = psi2;
    std::vector<Complex> mid1(n), mid2(n), v1(n), v2(n);
    std::vector<double> sig_mid(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(psi1[i]) + std::abs(psi2[i]));
    scale = std::max(scale, 1e-300);

    bool converged = false;
    for (std::size_t it = 0; it < p_.cn_max_iterations && !converged; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        mid1[i] = 0.5 * (psi1[i] + next1[i]);
        mid2[i] = 0.5 * (psi2[i] + next2[i]);
      }
      sig_mid = sigma;
      track_sigma(psi1, psi2, mid1, mid2, sig_mid, p_.consts.hbar, floor);
      for (std::size_t i = 0; i < n; ++i) {
        const double r1 = std::norm(mid1[i]), r2 = std::norm(mid2[i]);
        const double rho = r1 + r2;
        const double H = closure_enthalpy(p_.closure, rho, sig_mid[i]);
        double g1 = 0.0, g2 = 0.0;
        const double tau = closure_tau(p_.closure, rho, sig_mid[i]);
        if (tau != 0.0 && r1 > floor && r2 > floor) {
          const double q = p_.consts.hbar * tau * rho / 4.0;
          g1 = -q / r1;
          g2 = q / r2;
        }
        v1[i] = Complex(H + 2.0 * kin, -g1);
        v2[i] = Complex(H + 2.0 * kin, -g2);
      }
      double change = 0.0;
      for (int comp = 0; comp < 2; ++comp) {
        const auto& psi = comp == 0 ? psi1 : psi2;
        const auto& v = comp == 0 ? v1 : v2;
        auto& next = comp == 0 ? next1 : next2;
        std::vector<Complex> rhs(n), diag(n);
        for (std::size_t i = 0; i < n; ++i) {
          const Complex left = i > 0 ? psi[i - 1] : Complex{};
          const Complex right = i + 1 < n ? psi[i + 1] : Complex{};
          // (A psi)_i = -kin (psi_{i-1} + psi_{i+1}) + v_i psi_i
          rhs[i] = psi[i] - a * (v[i] * psi[i] - kin * (left + right));
          diag[i] = 1.0 + a * v[i];
        }
        solve_tridiagonal(-a * kin, diag, -a * kin, rhs);
        for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(rhs[i] - next[i]));
        next = std::move(rhs);
      }
      converged = change <= p_.cn_tolerance * scale;
    }
    if (!converged) ++unconverged_;
    track_sigma(psi1, psi2, next1, next2, sigma, p_.consts.hbar, floor);
    psi1 = std::move(next1);
    psi2 = std::move(next2);
    return 0;
  }

  std::size_t unconverged_steps() const { return unconverged_; }

 private:
  const Evolve1DParams& p_;
  std::size_t unconverged_ = 0;
};

}  // namespace detail

/// Initial sigma for evolution: Clebsch sigma of the spatially unwrapped phases.
inline std::vector<double> initial_sigma(const SpinorField1D& f, const PhysConsts& consts) {
  return clebsch_vars(madelung_decompose(f, consts)).sigma;
}

inline EvolveResult evolve(const SpinorField1D& f0, const Evolve1DParams& p) {
  f0.validate();
  p.consts.validate();
  require(p.dt > 0.0, "evolve: dt must be positive");
  require(p.stride > 0, "evolve: stride must be positive");
  require(f0.grid == p.grid, "evolve: field grid differs from parameter grid");
  if (const auto* e = std::get_if<EosParams>(&p.closure)) e->validate();
  if (p.scheme == Scheme::split_step_spectral)
    require(p.grid.periodic(), "evolve: split-step spectral scheme needs a periodic grid");
  else
    require(!p.grid.periodic(), "evolve: Crank-Nicolson is provided for open grids only");

  EvolveResult out{p.grid, {}, {}, 0, -1.0, {}};
  const double h = p.grid.spacing();
  if (p.dt > h * h * p.consts.mass / p.consts.hbar)
    out.log.push_back("warning: dt exceeds h^2 m / hbar = " + std::to_string(h * h * p.consts.mass / p.consts.hbar));

  std::vector<Complex> psi1 = f0.psi1, psi2 = f0.psi2;
  std::vector<double> sigma = initial_sigma(f0, p.consts);
  if (std::holds_alternative<EosParams>(p.closure) && p.grid.periodic()) {
    // U depends on sigma itself, so sigma must not wind around a periodic domain.
    const double closing = detail::WrappedDelta{std::numbers::pi * p.consts.hbar}(sigma.back(), sigma.front());
    const double winding = sigma.back() - sigma.front() + closing;
    require(std::abs(winding) < 0.5 * std::numbers::pi * p.consts.hbar,
            "evolve: ideal-gas closure on a periodic grid needs equal phase windings in both components");
  }
  const double floor = p.relative_floor * std::max(f0.max_density(), 1e-300);

  std::unique_ptr<detail::SplitStepper> split;
  std::unique_ptr<detail::CrankNicolsonStepper> cn;
  if (p.scheme == Scheme::split_step_spectral)
    split = std::make_unique<detail::SplitStepper>(p);
  else
    cn = std::make_unique<detail::CrankNicolsonStepper>(p);
  const FftPlan1D* plan = split ? &split->plan() : nullptr;

  auto sample = [&](std::size_t step) {
    const double t = p.dt * static_cast<double>(step);
    out.report.t.push_back(t);
    out.report.N.push_back(particle_number(psi1, psi2, p.grid));
    out.report.E.push_back(hamiltonian(psi1, psi2, sigma, p.grid, p.closure, p.consts, plan));
    if (p.keep_snapshots) out.snapshots.push_back({t, psi1, psi2, sigma});
  };
  sample(0);

  std::size_t clamped_steps = 0;
  for (std::size_t step = 1; step <= p.n_steps; ++step) {
    const std::size_t c = split ? split->step(psi1, psi2, sigma, floor) : cn->step(psi1, psi2, sigma, floor);
    if (c > 0) {
      if (out.clamp_activations == 0) {
        out.first_clamp_t = static_cast<double>(step) * p.dt;
        out.log.push_back("clamp: |mu| first limited at " + std::to_string(c) + " points in step " + std::to_string(step));
      }
      out.clamp_activations += c;
      ++clamped_steps;
    }
    for (std::size_t i = 0; i < psi1.size(); ++i) {
      if (!std::isfinite(psi1[i].real()) || !std::isfinite(psi1[i].imag()) ||
          !std::isfinite(psi2[i].real()) || !std::isfinite(psi2[i].imag()))
        throw NumericalFailure("evolve: non-finite field at step " + std::to_string(step));
    }
    if (step % p.stride == 0) sample(step);
  }
  if (clamped_steps > 0)
    out.log.push_back("clamp: " + std::to_string(out.clamp_activations) + " point activations over " +
                      std::to_string(clamped_steps) + " steps; conservation is not expected past the first");
  if (cn && cn->unconverged_steps() > 0)
    out.log.push_back("warning: fixed-point iteration hit the limit in " +
                      std::to_string(cn->unconverged_steps()) + " steps");

  const double n0 = out.report.N.front(), e0 = out.report.E.front();
  for (std::size_t k = 0; k < out.report.t.size(); ++k) {
    if (n0 != 0.0)
      out.report.max_rel_N_drift = std::max(out.report.max_rel_N_drift, std::abs(out.report.N[k] - n0) / n0);
    if (e0 != 0.0)
      out.report.max_rel_E_drift = std::max(out.report.max_rel_E_drift, std::abs(out.report.E[k] - e0) / std::abs(e0));
  }
  return out;
}

}  // namespace qspiral
