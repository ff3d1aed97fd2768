#pragma once

// Fluid picture of the spinor dynamics: the split of the field energy into a
// classical part H_c = int [|p|^2/2m + U] rho and a quantum part
// H_q = (hbar^2/8m) int [|grad rho|^2/rho + rho sum_l |grad S_l|^2],
// residuals of the canonical fluid equations along evolved trajectories, and
// the quantum force
//   F_q = grad(hbar^2 lap sqrt(rho) / 2m sqrt(rho))
//         - sum_l (hbar^2/4m rho) div[rho grad S_l (x) grad S_l].

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qspiral/differencing.hpp"
#include "qspiral/energy.hpp"
#include "qspiral/errors.hpp"
#include "qspiral/evolve.hpp"
#include "qspiral/fft.hpp"
#include "qspiral/field.hpp"
#include "qspiral/madelung.hpp"
#include "qspiral/thermo.hpp"

namespace qspiral {

struct EnergyBreakdown {
  double H_total = 0.0;
  double H_classical = 0.0;
  double H_quantum = 0.0;
  double N = 0.0;
  double masked_measure = 0.0;  // length of the region left out of H_c, H_q
};

namespace detail {

/// Fills masked entries with the nearest preceding valid value (cyclically).
inline void hold_fill(std::vector<double>& v, const Mask& valid) {
  const std::size_t n = v.size();
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i)
    if (valid[i]) {
      first = i;
      break;
    }
  if (first == n) return;
  double last = v[first];
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t i = (first + s) % n;
    if (valid[i])
      last = v[i];
    else
      v[i] = last;
  }
}

/// d/dx of a real field: spectral on periodic grids, central otherwise.
inline std::vector<double> smooth_derivative(const std::vector<double>& f, const Grid1D& g,
                                             const FftPlan1D* plan) {
  if (g.periodic() && plan) return spectral_derivative(f, g, *plan);
  return partial(f, g);
}

/// d/dx of an action-valued phase. On periodic grids the winding is split off
/// so the spectral derivative sees a periodic function.
inline std::vector<double> phase_derivative(const std::vector<double>& s, const Grid1D& g,
                                            double hbar, const FftPlan1D* plan) {
  const double period = 2.0 * std::numbers::pi * hbar;
  if (!(g.periodic() && plan)) return phase_partial(s, g, period);
  const std::size_t n = s.size();
  const double closing = WrappedDelta{period}(s[n - 1], s[0]);
  const double slope = (s[n - 1] - s[0] + closing) / g.length();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - slope * (g.x(i) - g.x(0));
  auto d = spectral_derivative(r, g, *plan);
  for (auto& v : d) v += slope;
  return d;
}

}  // namespace detail

/// H_total from the field Hamiltonian; H_c and H_q from the Madelung and spin
/// variables. sigma defaults to the Clebsch sigma of the field.
inline EnergyBreakdown energy_and_number(const SpinorField1D& f, const Closure& closure,
                                         const PhysConsts& consts = {},
                                         std::optional<std::span<const double>> sigma_in = {}) {
  f.validate();
  consts.validate();
  const auto& g = f.grid;
  const std::size_t n = f.size();
  std::optional<FftPlan1D> plan;
  if (g.periodic()) plan.emplace(n);
  const FftPlan1D* pp = plan ? &*plan : nullptr;

  const double floor = default_floor(f);
  auto md = madelung_decompose(f, floor, consts);
  const auto cv = clebsch_vars(md);
  std::vector<double> sigma = sigma_in ? std::vector<double>(sigma_in->begin(), sigma_in->end()) : cv.sigma;
  require(sigma.size() == n, "energy_and_number: sigma length does not match grid");

  EnergyBreakdown e;
  e.N = particle_number(f.psi1, f.psi2, g);
  e.H_total = hamiltonian(f.psi1, f.psi2, sigma, g, closure, consts, pp);

  detail::hold_fill(md.s1, md.valid1);
  detail::hold_fill(md.s2, md.valid2);
  const auto ds1 = detail::phase_derivative(md.s1, g, consts.hbar, pp);
  const auto ds2 = detail::phase_derivative(md.s2, g, consts.hbar, pp);
  const auto drho = detail::smooth_derivative(cv.rho, g, pp);
  auto spin = spin_density(f, floor);
  std::array<std::vector<double>*, 3> comps{&spin.sx, &spin.sy, &spin.sz};
  std::array<std::vector<double>, 3> dS;
  for (std::size_t l = 0; l < 3; ++l) {
    detail::hold_fill(*comps[l], spin.valid);
    dS[l] = detail::smooth_derivative(*comps[l], g, pp);
  }

  const double m = consts.mass, hb2 = consts.hbar * consts.hbar;
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = cv.rho[i];
    if (!spin.valid[i]) {
      e.masked_measure += g.weight(i);
      continue;
    }
    const double c = cv.mu[i] / rho;
    const double dphi = 0.5 * (ds1[i] + ds2[i]), dsig = 0.5 * (ds1[i] - ds2[i]);
    const double p = dphi + c * dsig;
    const double classical = rho * p * p / (2.0 * m) + closure_energy_density(closure, rho, sigma[i]);
    const double spin_grad = dS[0][i] * dS[0][i] + dS[1][i] * dS[1][i] + dS[2][i] * dS[2][i];
    const double quantum = hb2 / (8.0 * m) * (drho[i] * drho[i] / rho + rho * spin_grad);
    e.H_classical += g.weight(i) * classical;
    e.H_quantum += g.weight(i) * quantum;
  }
  return e;
}

namespace detail {

template <class G>
constexpr std::array<Axis, grid_dims<G>> grid_axes() {
  if constexpr (grid_dims<G> == 1)
    return {Axis::x};
  else
    return {Axis::x, Axis::y};
}

template <class G>
std::size_t axis_stride(const G& g, Axis a) {
  if constexpr (grid_dims<G> == 1)
    return 1;
  else
    return a == Axis::x ? 1 : g.nx();
}

template <class G>
std::size_t axis_len(const G& g, Axis a) {
  if constexpr (grid_dims<G> == 1)
    return g.size();
  else
    return a == Axis::x ? g.nx() : g.ny();
}

template <class G>
bool axis_periodic(const G& g, Axis a) {
  if constexpr (grid_dims<G> == 1)
    return g.periodic();
  else
    return a == Axis::x ? g.x_axis().periodic() : g.y_axis().periodic();
}

/// Invalidates every point whose `radius`-neighbourhood along an axis holds a
/// masked point.
template <class G>
Mask dilate_mask(const Mask& m, const G& g, std::size_t radius) {
  Mask out = m;
  for (Axis a : grid_axes<G>()) {
    const std::size_t stride = axis_stride(g, a), len = axis_len(g, a);
    const bool per = axis_periodic(g, a);
    Mask next = out;
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k]) continue;
      const std::size_t pos = (stride == 1) ? (k % axis_len(g, Axis::x)) : (k / stride);
      for (std::size_t d = 1; d <= radius; ++d) {
        if (pos + d < len)
          next[k + d * stride] = 0;
        else if (per)
          next[k - (len - d) * stride] = 0;
        if (pos >= d)
          next[k - d * stride] = 0;
        else if (per)
          next[k + (len - d) * stride] = 0;
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

/// Quantum force with second-order central differences throughout.
template <class G>
VectorField<G> quantum_force(const SpinorField<G>& f, const PhysConsts& consts = {}) {
  f.validate();
  consts.validate();
  const auto& g = f.grid;
  const std::size_t n = f.size();
  const double floor = default_floor(f);
  const auto spin = spin_density(f, floor);
  const double hb2m = consts.hbar * consts.hbar / consts.mass;

  std::vector<double> rho(n), sqrt_rho(n);
  for (std::size_t k = 0; k < n; ++k) {
    rho[k] = f.density(k);
    sqrt_rho[k] = std::sqrt(rho[k]);
  }
  std::vector<double> bohm(n, 0.0);
  for (Axis a : detail::grid_axes<G>()) {
    const auto d2 = second_partial(sqrt_rho, g, a);
    for (std::size_t k = 0; k < n; ++k)
      if (spin.valid[k]) bohm[k] += hb2m * d2[k] / (2.0 * sqrt_rho[k]);
  }

  constexpr std::size_t D = grid_dims<G>;
  const auto axes = detail::grid_axes<G>();
  std::array<std::array<std::vector<double>, D>, 3> dS;
  const std::array<const std::vector<double>*, 3> comps{&spin.sx, &spin.sy, &spin.sz};
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t a = 0; a < D; ++a) dS[l][a] = partial(*comps[l], g, axes[a]);

  VectorField<G> F{g, {}, detail::dilate_mask(spin.valid, g, 2)};
  for (std::size_t a = 0; a < D; ++a) {
    auto force = partial(bohm, g, axes[a]);
    std::vector<double> div(n, 0.0);
    for (std::size_t b = 0; b < D; ++b) {
      std::vector<double> flux(n, 0.0);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < 3; ++l) flux[k] += rho[k] * dS[l][b][k] * dS[l][a][k];
      const auto d = partial(flux, g, axes[b]);
      for (std::size_t k = 0; k < n; ++k) div[k] += d[k];
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!F.valid[k]) {
        force[k] = 0.0;
        continue;
      }
      force[k] -= hb2m / (4.0 * rho[k]) * div[k];
    }
    F.components[a] = std::move(force);
  }
  return F;
}

struct EquationResidual {
  std::string name;
  double l2 = 0.0;   // sqrt of the time-averaged integral of r^2
  double max = 0.0;
};

struct ResidualReport {
  std::vector<EquationResidual> equations;
  std::size_t n_points = 0;
  std::size_t n_snapshots = 0;
  std::size_t evaluated_snapshots = 0;
  double h = 0.0;
  double dt = 0.0;
  double masked_fraction = 0.0;

  const EquationResidual& at(std::string_view name) const {
    for (const auto& e : equations)
      if (e.name == name) return e;
    throw std::out_of_range("ResidualReport: no equation named " + std::string(name));
  }
};

namespace detail {

struct FluidFrame {
  std::vector<double> rho, mu, rho1, rho2;
  std::vector<double> dphi, dsig, p, Q1, Q2, Fq;
  Mask valid;
};

inline FluidFrame fluid_frame(const Snapshot& s, const Grid1D& g, const PhysConsts& consts,
                              double floor) {
  const SpinorField1D f(g, s.psi1, s.psi2);
  const auto md = madelung_decompose(f, floor, consts);
  const auto cv = clebsch_vars(md);
  const std::size_t n = f.size();
  FluidFrame fr;
  fr.rho = cv.rho;
  fr.mu = cv.mu;
  fr.rho1 = md.rho1;
  fr.rho2 = md.rho2;
  auto [dphi, dsig] = clebsch_phase_partials(cv, Axis::x);
  fr.dphi = std::move(dphi);
  fr.dsig = std::move(dsig);
  fr.p.resize(n);
  Mask both(n);
  for (std::size_t i = 0; i < n; ++i) {
    both[i] = md.valid1[i] && md.valid2[i];
    fr.p[i] = fr.rho[i] > 0.0 ? fr.dphi[i] + fr.mu[i] / fr.rho[i] * fr.dsig[i] : 0.0;
  }
  auto bohm_component = [&](const std::vector<double>& r) {
    std::vector<double> sq(n), Q(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) sq[i] = std::sqrt(r[i]);
    const auto d2 = second_partial(sq, g);
    const double c = consts.hbar * consts.hbar / (2.0 * consts.mass);
    for (std::size_t i = 0; i < n; ++i)
      if (sq[i] > 0.0) Q[i] = -c * d2[i] / sq[i];
    return Q;
  };
  fr.Q1 = bohm_component(md.rho1);
  fr.Q2 = bohm_component(md.rho2);
  const auto F = quantum_force(f, consts);
  fr.Fq = F.components[0];
  fr.valid = dilate_mask(both, g, 2);
  for (std::size_t i = 0; i < n; ++i) fr.valid[i] = fr.valid[i] && F.valid[i];
  return fr;
}

}  // namespace detail

/// Residuals of the fluid equations at interior snapshots, with centered time
/// differences and second-order central space differences. Each equation is
/// the classical Clebsch form plus the explicit quantum terms:
///   continuity  d_t rho + d_x(rho v)
///   phase       d_t phi + v d_x phi - p^2/2m + H + (1+c^2)|d_x sigma|^2/2m + (Q1+Q2)/2
///   mu          d_t mu + d_x(v mu) - rho tau + d_x((rho - mu^2/rho) d_x sigma)/m
///   entropy     d_t sigma + v d_x sigma - c |d_x sigma|^2/m + (Q1-Q2)/2
///   momentum    d_t p + v d_x p + d_x H - tau d_x sigma - F_q
/// with v = p/m, c = mu/rho and Q_j = -(hbar^2/2m) lap sqrt(rho_j)/sqrt(rho_j).
/// Points where either component is below the density floor are skipped.
inline ResidualReport fluid_residuals(const std::vector<Snapshot>& snaps, const Grid1D& g,
                                      const Closure& closure, const PhysConsts& consts = {}) {
  consts.validate();
  if (snaps.size() < 3) throw DomainError("fluid_residuals: need at least 3 snapshots");
  const double dt = snaps[1].t - snaps[0].t;
  require(dt > 0.0, "fluid_residuals: snapshot times must increase");
  for (std::size_t k = 1; k < snaps.size(); ++k)
    require(std::abs((snaps[k].t - snaps[k - 1].t) - dt) <= 1e-9 * dt,
            "fluid_residuals: snapshots must be equally spaced in time");
  const std::size_t n = g.size();
  for (const auto& s : snaps)
    require(s.psi1.size() == n && s.psi2.size() == n && s.sigma.size() == n,
            "fluid_residuals: snapshot size does not match grid");

  double max_rho = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    max_rho = std::max(max_rho, std::norm(snaps[0].psi1[i]) + std::norm(snaps[0].psi2[i]));
  const double floor = kRelativeDensityFloor * std::max(max_rho, 1e-300);
  const double m = consts.mass;

  ResidualReport rep;
  rep.n_points = n;
  rep.n_snapshots = snaps.size();
  rep.h = g.spacing();
  rep.dt = dt;
  const std::array<const char*, 5> names{"continuity", "phase", "mu", "entropy", "momentum"};
  std::array<double, 5> sum_sq{}, mx{};
  std::size_t masked = 0, total = 0;

  auto prev = detail::fluid_frame(snaps[0], g, consts, floor);
  auto cur = detail::fluid_frame(snaps[1], g, consts, floor);
  for (std::size_t k = 1; k + 1 < snaps.size(); ++k) {
    auto next = detail::fluid_frame(snaps[k + 1], g, consts, floor);
    const auto& s = snaps[k];

    std::vector<double> flux_rho(n), flux_mu(n), spin_flux(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = cur.p[i] / m;
      flux_rho[i] = cur.rho[i] * v;
      flux_mu[i] = cur.mu[i] * v;
      spin_flux[i] = cur.rho[i] > 0.0 ? (cur.rho[i] - cur.mu[i] * cur.mu[i] / cur.rho[i]) * cur.dsig[i] / m : 0.0;
    }
    std::vector<double> Hv(n), tau(n);
    for (std::size_t i = 0; i < n; ++i) {
      Hv[i] = closure_enthalpy(closure, cur.rho[i], s.sigma[i]);
      tau[i] = closure_tau(closure, cur.rho[i], s.sigma[i]);
    }
    const auto d_flux_rho = partial(flux_rho, g);
    const auto d_flux_mu = partial(flux_mu, g);
    const auto d_spin_flux = partial(spin_flux, g);
    const auto dp = partial(cur.p, g);
    const auto dH = partial(Hv, g);

    const double inv2dt = 1.0 / (2.0 * dt);
    std::array<double, 5> frame_sq{};
    for (std::size_t i = 0; i < n; ++i) {
      ++total;
      if (!(cur.valid[i] && prev.valid[i] && next.valid[i])) {
        ++masked;
        continue;
      }
      const double ds1 = consts.hbar * std::arg(snaps[k + 1].psi1[i] * std::conj(snaps[k - 1].psi1[i]));
      const double ds2 = consts.hbar * std::arg(snaps[k + 1].psi2[i] * std::conj(snaps[k - 1].psi2[i]));
      const double dt_phi = 0.5 * (ds1 + ds2) * inv2dt;
      const double dt_sigma = (snaps[k + 1].sigma[i] - snaps[k - 1].sigma[i]) * inv2dt;
      const double dt_rho = (next.rho[i] - prev.rho[i]) * inv2dt;
      const double dt_mu = (next.mu[i] - prev.mu[i]) * inv2dt;
      const double dt_p = (next.p[i] - prev.p[i]) * inv2dt;

      const double rho = cur.rho[i];
      const double c = cur.mu[i] / rho;
      const double v = cur.p[i] / m;
      const double dsig = cur.dsig[i];
      const std::array<double, 5> r{
          dt_rho + d_flux_rho[i],
          dt_phi + v * cur.dphi[i] - cur.p[i] * cur.p[i] / (2.0 * m) + Hv[i] +
              (1.0 + c * c) * dsig * dsig / (2.0 * m) + 0.5 * (cur.Q1[i] + cur.Q2[i]),
          dt_mu + d_flux_mu[i] - rho * tau[i] + d_spin_flux[i],
          dt_sigma + v * dsig - c * dsig * dsig / m + 0.5 * (cur.Q1[i] - cur.Q2[i]),
          dt_p + v * dp[i] + dH[i] - tau[i] * dsig - cur.Fq[i]};
      for (std::size_t e = 0; e < 5; ++e) {
        frame_sq[e] += g.weight(i) * r[e] * r[e];
        mx[e] = std::max(mx[e], std::abs(r[e]));
      }
    }
    for (std::size_t e = 0; e < 5; ++e) sum_sq[e] += frame_sq[e];
    ++rep.evaluated_snapshots;
    prev = std::move(cur);
    cur = std::move(next);
  }
  for (std::size_t e = 0; e < 5; ++e)
    rep.equations.push_back({names[e], std::sqrt(sum_sq[e] / static_cast<double>(rep.evaluated_snapshots)), mx[e]});
  rep.masked_fraction = total ? static_cast<double>(masked) / static_cast<double>(total) : 0.0;
  return rep;
}

}  // namespace qspiral
