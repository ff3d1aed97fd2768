#pragma once

// Exact transforms between the spinor, its Madelung form (rho_j, S_j) and the
// Clebsch variables (rho, mu, phi, sigma), plus the derived momentum,
// vorticity and spin-density fields.

#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "qspiral/differencing.hpp"
#include "qspiral/errors.hpp"
#include "qspiral/field.hpp"

namespace qspiral {

template <class G>
struct MadelungVars {
  G grid;
  std::vector<double> rho1, rho2;
  std::vector<double> s1, s2;  // action units: hbar * unwrapped phase
  Mask valid1, valid2;         // density at or above the floor
  double hbar = 1.0;
};

template <class G>
struct ClebschVars {
  G grid;
  std::vector<double> rho, mu;
  std::vector<double> phi, sigma;
  Mask valid;  // at least one component above the floor
  double hbar = 1.0;
};

namespace detail {

inline double wrap_angle(double d) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return d - two_pi * std::round(d / two_pi);
}

/// Unwraps raw principal-value phases along one line, skipping masked points.
/// Returns false when the line has no valid point.
inline bool unwrap_line(const double* raw, const std::uint8_t* valid, std::size_t n,
                        std::size_t stride, double* out, const double* anchor) {
  bool started = false;
  double last_raw = 0.0, last_out = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i * stride;
    if (!valid[k]) {
      out[k] = 0.0;
      continue;
    }
    if (!started) {
      last_out = anchor ? *anchor : raw[k];
      started = true;
    } else {
      last_out += wrap_angle(raw[k] - last_raw);
    }
    last_raw = raw[k];
    out[k] = last_out;
  }
  return started;
}

inline void unwrap(const std::vector<double>& raw, const Mask& valid, const Grid1D&,
                   std::vector<double>& out) {
  unwrap_line(raw.data(), valid.data(), raw.size(), 1, out.data(), nullptr);
}

// Row starts are unwrapped against each other along y first, then each row
// is unwrapped along x from its anchor.
inline void unwrap(const std::vector<double>& raw, const Mask& valid, const Grid2D& g,
                   std::vector<double>& out) {
  bool have_anchor = false;
  double prev_raw = 0.0, prev_anchor = 0.0;
  for (std::size_t j = 0; j < g.ny(); ++j) {
    std::size_t first = g.nx();
    for (std::size_t i = 0; i < g.nx(); ++i)
      if (valid[g.index(i, j)]) {
        first = i;
        break;
      }
    if (first == g.nx()) {
      for (std::size_t i = 0; i < g.nx(); ++i) out[g.index(i, j)] = 0.0;
      continue;
    }
    const double r = raw[g.index(first, j)];
    const double anchor = have_anchor ? prev_anchor + wrap_angle(r - prev_raw) : r;
    have_anchor = true;
    prev_raw = r;
    prev_anchor = anchor;
    unwrap_line(raw.data() + g.index(0, j), valid.data() + g.index(0, j), g.nx(), 1,
                out.data() + g.index(0, j), &anchor);
  }
}

}  // namespace detail

/// rho_j = |psi_j|^2 and S_j = hbar * unwrapped arg psi_j. Points with
/// rho_j < floor get S_j = 0 and are flagged invalid.
template <class G>
MadelungVars<G> madelung_decompose(const SpinorField<G>& f, double floor,
                                   const PhysConsts& consts = {}) {
  f.validate();
  consts.validate();
  require(floor > 0.0 && std::isfinite(floor), "madelung_decompose: floor must be positive");
  const std::size_t n = f.size();
  MadelungVars<G> m{f.grid, std::vector<double>(n), std::vector<double>(n),
                    std::vector<double>(n), std::vector<double>(n), Mask(n), Mask(n),
                    consts.hbar};
  std::vector<double> raw1(n), raw2(n);
  for (std::size_t k = 0; k < n; ++k) {
    m.rho1[k] = std::norm(f.psi1[k]);
    m.rho2[k] = std::norm(f.psi2[k]);
    m.valid1[k] = m.rho1[k] >= floor;
    m.valid2[k] = m.rho2[k] >= floor;
    raw1[k] = std::arg(f.psi1[k]);
    raw2[k] = std::arg(f.psi2[k]);
  }
  detail::unwrap(raw1, m.valid1, f.grid, m.s1);
  detail::unwrap(raw2, m.valid2, f.grid, m.s2);
  for (std::size_t k = 0; k < n; ++k) {
    m.s1[k] *= consts.hbar;
    m.s2[k] *= consts.hbar;
  }
  return m;
}

template <class G>
MadelungVars<G> madelung_decompose(const SpinorField<G>& f, const PhysConsts& consts = {}) {
  return madelung_decompose(f, default_floor(f), consts);
}

/// psi_j = sqrt(rho_j) exp(i S_j / hbar).
template <class G>
SpinorField<G> madelung_compose(const MadelungVars<G>& m) {
  const std::size_t n = m.rho1.size();
  std::vector<Complex> p1(n), p2(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(m.rho1[k] >= 0.0) || !(m.rho2[k] >= 0.0))
      throw DomainError("madelung_compose: negative density at index " + std::to_string(k));
    p1[k] = std::polar(std::sqrt(m.rho1[k]), m.s1[k] / m.hbar);
    p2[k] = std::polar(std::sqrt(m.rho2[k]), m.s2[k] / m.hbar);
  }
  return SpinorField<G>(m.grid, std::move(p1), std::move(p2));
}

template <class G>
ClebschVars<G> clebsch_vars(const MadelungVars<G>& m) {
  const std::size_t n = m.rho1.size();
  if (m.rho2.size() != n || m.s1.size() != n || m.s2.size() != n || m.grid.size() != n)
    throw InvalidField("clebsch_vars: inconsistent MadelungVars sizes");
  ClebschVars<G> c{m.grid, std::vector<double>(n), std::vector<double>(n),
                   std::vector<double>(n), std::vector<double>(n), Mask(n), m.hbar};
  for (std::size_t k = 0; k < n; ++k) {
    c.rho[k] = m.rho1[k] + m.rho2[k];
    c.mu[k] = m.rho1[k] - m.rho2[k];
    c.phi[k] = 0.5 * (m.s1[k] + m.s2[k]);
    c.sigma[k] = 0.5 * (m.s1[k] - m.s2[k]);
    c.valid[k] = m.valid1[k] || m.valid2[k];
  }
  return c;
}

namespace detail {

/// Gradients of phi and sigma built from wrapped increments of S_1 = phi + sigma
/// and S_2 = phi - sigma (each defined modulo 2 pi hbar).
template <class G>
std::pair<std::vector<double>, std::vector<double>> clebsch_phase_partials(
    const ClebschVars<G>& c, Axis axis) {
  const std::size_t n = c.rho.size();
  std::vector<double> s1(n), s2(n);
  for (std::size_t k = 0; k < n; ++k) {
    s1[k] = c.phi[k] + c.sigma[k];
    s2[k] = c.phi[k] - c.sigma[k];
  }
  const double period = 2.0 * std::numbers::pi * c.hbar;
  auto d1 = phase_partial(s1, c.grid, period, axis);
  auto d2 = phase_partial(s2, c.grid, period, axis);
  std::vector<double> dphi(n), dsigma(n);
  for (std::size_t k = 0; k < n; ++k) {
    dphi[k] = 0.5 * (d1[k] + d2[k]);
    dsigma[k] = 0.5 * (d1[k] - d2[k]);
  }
  return {std::move(dphi), std::move(dsigma)};
}

template <class G>
std::vector<double> spin_fraction(const ClebschVars<G>& c) {
  std::vector<double> frac(c.rho.size(), 0.0);
  for (std::size_t k = 0; k < frac.size(); ++k)
    if (c.valid[k] && c.rho[k] > 0.0) frac[k] = c.mu[k] / c.rho[k];
  return frac;
}

}  // namespace detail

/// Clebsch momentum p = grad phi + (mu/rho) grad sigma on a 1D grid.
inline VectorField<Grid1D> momentum(const ClebschVars<Grid1D>& c) {
  auto [dphi, dsigma] = detail::clebsch_phase_partials(c, Axis::x);
  const auto frac = detail::spin_fraction(c);
  VectorField<Grid1D> p{c.grid, {std::vector<double>(c.rho.size())}, c.valid};
  for (std::size_t k = 0; k < c.rho.size(); ++k)
    p.components[0][k] = c.valid[k] ? dphi[k] + frac[k] * dsigma[k] : 0.0;
  return p;
}

struct MomentumVorticity2D {
  VectorField<Grid2D> p;
  ScalarField<Grid2D> w;  // out-of-plane vorticity
};

/// p = grad phi + (mu/rho) grad sigma and
/// w = d_x(mu/rho) d_y sigma - d_y(mu/rho) d_x sigma.
inline MomentumVorticity2D momentum_and_vorticity(const ClebschVars<Grid2D>& c,
                                                  const PhysConsts& consts = {}) {
  consts.validate();
  const std::size_t n = c.rho.size();
  auto [dphi_x, dsig_x] = detail::clebsch_phase_partials(c, Axis::x);
  auto [dphi_y, dsig_y] = detail::clebsch_phase_partials(c, Axis::y);
  const auto frac = detail::spin_fraction(c);
  const auto dfrac_x = partial(frac, c.grid, Axis::x);
  const auto dfrac_y = partial(frac, c.grid, Axis::y);

  MomentumVorticity2D out{
      VectorField<Grid2D>{c.grid, {std::vector<double>(n), std::vector<double>(n)}, c.valid},
      ScalarField<Grid2D>{c.grid, std::vector<double>(n), c.valid}};
  for (std::size_t k = 0; k < n; ++k) {
    if (!c.valid[k]) continue;
    out.p.components[0][k] = dphi_x[k] + frac[k] * dsig_x[k];
    out.p.components[1][k] = dphi_y[k] + frac[k] * dsig_y[k];
    out.w.values[k] = dfrac_x[k] * dsig_y[k] - dfrac_y[k] * dsig_x[k];
  }
  return out;
}

/// Discrete curl d_x p_y - d_y p_x with the same stencils.
inline ScalarField<Grid2D> curl(const VectorField<Grid2D>& p) {
  const auto dpy_dx = partial(p.components[1], p.grid, Axis::x);
  const auto dpx_dy = partial(p.components[0], p.grid, Axis::y);
  ScalarField<Grid2D> w{p.grid, std::vector<double>(dpy_dx.size()), p.valid};
  for (std::size_t k = 0; k < w.values.size(); ++k) w.values[k] = dpy_dx[k] - dpx_dy[k];
  return w;
}

template <class G>
struct SpinDensity {
  G grid;
  std::vector<double> sx, sy, sz;
  Mask valid;
};

/// S_l = Psi^dagger sigma_l Psi / rho with the standard Pauli matrices, so
/// S_x = 2 Re(conj(psi1) psi2)/rho, S_y = 2 Im(conj(psi1) psi2)/rho,
/// S_z = (|psi1|^2 - |psi2|^2)/rho. Masked points are zero.
template <class G>
SpinDensity<G> spin_density(const SpinorField<G>& f, double floor) {
  f.validate();
  require(floor > 0.0, "spin_density: floor must be positive");
  const std::size_t n = f.size();
  SpinDensity<G> s{f.grid, std::vector<double>(n), std::vector<double>(n),
                   std::vector<double>(n), Mask(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double rho = f.density(k);
    if (rho < floor) continue;
    const Complex c = std::conj(f.psi1[k]) * f.psi2[k];
    s.sx[k] = 2.0 * c.real() / rho;
    s.sy[k] = 2.0 * c.imag() / rho;
    s.sz[k] = (std::norm(f.psi1[k]) - std::norm(f.psi2[k])) / rho;
    s.valid[k] = 1;
  }
  return s;
}

template <class G>
SpinDensity<G> spin_density(const SpinorField<G>& f) {
  return spin_density(f, default_floor(f));
}

}  // namespace qspiral
