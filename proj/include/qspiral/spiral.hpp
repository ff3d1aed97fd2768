#pragma once

// Quantum-spiral eigenproblem under the dual-spiral reduction
//   psi_1 = exp(i(n theta + beta_1(r) - omega t/hbar)) phi_1(r),
//   psi_2 = exp(i(n theta - beta_1(r) - omega t/hbar)) conj(phi_1(r)),
// so rho_1 = rho_2, G_2 = -G_1 and the radial system closes on phi_1, beta_1:
//   phi'' + (1/r + i beta') phi' = (n^2/r^2 + beta'^2 + kappa (H - omega)) phi
//   beta'' = kappa G_1 - beta'/r
// with kappa = 2m/hbar^2, rho = 2|phi|^2, sigma = hbar (beta + arg phi).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qspiral/errors.hpp"
#include "qspiral/field.hpp"
#include "qspiral/grid.hpp"
#include "qspiral/ode.hpp"
#include "qspiral/thermo.hpp"

namespace qspiral {

struct SpiralParams {
  int n = 2;
  double omega = 4.5;
  EosParams eos{};
  PhysConsts consts{};
  bool thermal = true;  // false: linear limit with H = G = 0
  double r_eps = 1e-3;
  double r_max = 20.0;
  double c_lo = 1.0;  // shooting bracket on the amplitude scale
  double c_hi = 3.0;
  double beta10 = 0.0;  // entropy gauge offset beta_1(0)
  double overflow_guard = 1e3;
  std::size_t n_samples = 2001;
  double shoot_rtol = 1e-12;
  double density_floor = 1e-300;
  OdeTolerances tol{1e-11, 1e-13};

  void validate() const {
    consts.validate();
    eos.validate();
    require(std::abs(n) <= 16, "SpiralParams: |n| must be <= 16");
    require(std::isfinite(omega), "SpiralParams: omega must be finite");
    require(r_eps > 0.0 && r_max > 10.0 * r_eps, "SpiralParams: need 0 < r_eps << r_max");
    require(n_samples >= 2, "SpiralParams: need at least two samples");
    require(overflow_guard > 0.0, "SpiralParams: overflow_guard must be positive");
    require(c_lo >= 0.0 && c_hi >= 0.0 && c_lo != c_hi, "SpiralParams: bracket must be two distinct non-negative amplitudes");
  }
};

/// (Re phi, Im phi, Re phi', Im phi', beta, beta', arg phi); arg phi is
/// integrated as Im(phi'/phi) so sigma never sees a 2 pi jump.
using SpiralState = OdeState<7>;

struct SpiralCoefficients {
  double rho = 0.0;
  double sigma = 0.0;
  double H = 0.0;
  double G1 = 0.0;
  bool masked = false;
};

inline SpiralCoefficients spiral_coefficients(const SpiralState& y, const SpiralParams& p) {
  SpiralCoefficients c;
  const double a2 = y[0] * y[0] + y[1] * y[1];
  c.rho = 2.0 * a2;
  c.sigma = p.consts.hbar * (y[4] + y[6]);
  if (!p.thermal) return c;
  const auto th = temperature_enthalpy(c.rho, c.sigma, p.eos);
  c.H = th.H;
  const auto g = baroclinic_G(0.5 * c.rho, 0.5 * c.rho, c.sigma, p.eos, p.consts, p.density_floor);
  c.G1 = g.G1;
  c.masked = g.masked;
  return c;
}

/// phi_j'' from the amplitude equation of component j (phase slope dbeta_j).
inline Complex amplitude_rhs(double r, Complex phi, Complex dphi, double dbeta, double H,
                             const SpiralParams& p) {
  const double nn = static_cast<double>(p.n) * static_cast<double>(p.n);
  const double coeff = nn / (r * r) + dbeta * dbeta + p.consts.kappa() * (H - p.omega);
  return coeff * phi - Complex(1.0 / r, dbeta) * dphi;
}

/// beta_j'' from the phase equation of component j.
inline double phase_rhs(double r, double dbeta, double G, const SpiralParams& p) {
  return p.consts.kappa() * G - dbeta / r;
}

inline SpiralState spiral_rhs(double r, const SpiralState& y, const SpiralParams& p) {
  const auto c = spiral_coefficients(y, p);
  const Complex phi{y[0], y[1]}, dphi{y[2], y[3]};
  const Complex d2 = amplitude_rhs(r, phi, dphi, y[5], c.H, p);
  const double a2 = std::norm(phi);
  const double darg = a2 > p.density_floor ? (y[0] * y[3] - y[1] * y[2]) / a2 : 0.0;
  return {y[2], y[3], d2.real(), d2.imag(), y[5], phase_rhs(r, y[5], c.G1, p), darg};
}

struct SpiralSolution {
  SpiralParams params;
  double c0 = 0.0;
  std::vector<double> r;
  std::vector<Complex> phi1, dphi1;
  std::vector<double> beta1, dbeta1, beta2, arg_phi1;
  std::vector<double> rho, sigma;
  bool bounded = true;
  double r_end = 0.0;
  std::string diagnostic;
};

/// Frobenius-style start at r_eps: phi ~ c0 r^|n| (1 + q r^2 / 4(|n|+1)),
/// beta ~ beta10 + kappa G_1 r^2 / (k+2)^2 with G_1 ~ r^k; k = 0 for n = 0.
inline SpiralState spiral_initial_state(const SpiralParams& p, double c0, double beta10) {
  const double r = p.r_eps;
  const double n = std::abs(static_cast<double>(p.n));
  SpiralState y{c0 * std::pow(r, n), 0.0, 0.0, 0.0, beta10, 0.0, 0.0};
  const auto c = spiral_coefficients(y, p);
  const double q = p.consts.kappa() * (c.H - p.omega);
  const double corr = q * r * r / (4.0 * (n + 1.0));
  y[0] = c0 * std::pow(r, n) * (1.0 + corr);
  y[2] = c0 * (n * std::pow(r, n - 1.0) + (n + 2.0) * q * std::pow(r, n + 1.0) / (4.0 * (n + 1.0)));
  if (n == 0.0) y[2] = c0 * q * r / 2.0;
  // G ~ T ~ rho^(1/cv) ~ r^k near the axis, and (r beta')' = kappa r G.
  const auto c1 = spiral_coefficients(y, p);
  const double kg = p.consts.kappa() * c1.G1;
  const double k = 2.0 * n / p.eos.cv;
  y[4] = beta10 + kg * r * r / ((k + 2.0) * (k + 2.0));
  y[5] = kg * r / (k + 2.0);
  return y;
}

inline SpiralSolution integrate_radial(const SpiralParams& p, double c0, double beta10) {
  p.validate();
  require(c0 >= 0.0 && std::isfinite(c0), "integrate_radial: c0 must be non-negative (gauge arg c0 = 0)");
  SpiralSolution s;
  s.params = p;
  s.params.beta10 = beta10;
  s.c0 = c0;
  const auto y0 = spiral_initial_state(p, c0, beta10);
  const double dr = (p.r_max - p.r_eps) / static_cast<double>(p.n_samples - 1);

  auto record = [&](double r, const SpiralState& y) {
    const auto c = spiral_coefficients(y, p);
    s.r.push_back(r);
    s.phi1.emplace_back(y[0], y[1]);
    s.dphi1.emplace_back(y[2], y[3]);
    s.beta1.push_back(y[4]);
    s.dbeta1.push_back(y[5]);
    s.beta2.push_back(-y[4]);
    s.arg_phi1.push_back(y[6]);
    s.rho.push_back(c.rho);
    s.sigma.push_back(c.sigma);
  };
  record(p.r_eps, y0);
  std::size_t next = 1;
  auto observer = [&](const DenseStep<7>& step) {
    while (next < p.n_samples) {
      const double rs = next + 1 == p.n_samples ? p.r_max : p.r_eps + dr * static_cast<double>(next);
      if (rs > step.t_new) break;
      record(rs, step(rs));
      ++next;
    }
    return std::hypot(step.y_new[0], step.y_new[1]) <= p.overflow_guard;
  };
  auto rhs = [&](double r, const SpiralState& y) { return spiral_rhs(r, y, p); };
  const auto res = integrate_dopri5<7>(rhs, p.r_eps, y0, p.r_max, p.tol, observer);
  s.r_end = res.t;
  if (res.status == OdeStatus::stopped_by_observer) {
    s.bounded = false;
    s.diagnostic = "overflow guard exceeded at r = " + std::to_string(res.t);
  } else if (res.status != OdeStatus::completed) {
    s.bounded = false;
    s.diagnostic = "integrator " + to_string(res.status) + "; last good r = " + std::to_string(res.t);
  }
  return s;
}

struct ShootResult {
  double c0 = 0.0;
  SpiralSolution solution;
  bool scale_invariant = false;
  double bounded_end = 0.0;    // final bracket endpoint classified bounded
  double unbounded_end = 0.0;  // final bracket endpoint classified blow-up
  bool bounded_verified = false;
  bool unbounded_verified = false;
  std::size_t iterations = 0;
};

namespace detail {
/// True when two solutions differ only by their amplitude scale.
inline bool scale_invariant(const SpiralSolution& a, const SpiralSolution& b) {
  if (a.c0 == 0.0 || b.c0 == 0.0 || a.r.size() != b.r.size()) return false;
  double peak = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.r.size(); ++i) {
    const Complex ua = a.phi1[i] / a.c0, ub = b.phi1[i] / b.c0;
    peak = std::max(peak, std::abs(ua));
    diff = std::max(diff, std::abs(ua - ub));
  }
  return peak > 0.0 && diff <= 1e-6 * peak;
}
}  // namespace detail

/// Bisection on c0 between a bounded and a blow-up endpoint; returns the
/// bounded solution adjacent to the separatrix.
inline ShootResult shoot(const SpiralParams& p) {
  p.validate();
  const auto lo = integrate_radial(p, p.c_lo, p.beta10);
  const auto hi = integrate_radial(p, p.c_hi, p.beta10);
  auto verdict = [](const SpiralSolution& s) {
    return s.bounded ? std::string("bounded") : "blow-up (" + s.diagnostic + ")";
  };
  ShootResult out;
  if (lo.bounded && hi.bounded) {
    if (detail::scale_invariant(lo, hi)) {
      out.c0 = p.c_lo;
      out.solution = lo;
      out.scale_invariant = true;
      out.bounded_end = p.c_lo;
      out.bounded_verified = true;
      return out;
    }
  }
  if (lo.bounded == hi.bounded)
    throw BracketError("shoot: no classifier change in bracket: c_lo = " + std::to_string(p.c_lo) +
                       " is " + verdict(lo) + ", c_hi = " + std::to_string(p.c_hi) + " is " + verdict(hi));

  double good = lo.bounded ? p.c_lo : p.c_hi;
  double bad = lo.bounded ? p.c_hi : p.c_lo;
  while (std::abs(bad - good) > p.shoot_rtol * std::max(std::abs(good), std::abs(bad))) {
    const double mid = 0.5 * (good + bad);
    if (mid == good || mid == bad) break;
    if (integrate_radial(p, mid, p.beta10).bounded)
      good = mid;
    else
      bad = mid;
    ++out.iterations;
  }
  out.c0 = good;
  out.solution = integrate_radial(p, good, p.beta10);
  out.bounded_end = good;
  out.unbounded_end = bad;
  out.bounded_verified = out.solution.bounded;
  out.unbounded_verified = !integrate_radial(p, bad, p.beta10).bounded;
  return out;
}

namespace detail {
inline std::size_t bracket_index(const std::vector<double>& r, double x) {
  auto it = std::upper_bound(r.begin(), r.end(), x);
  std::size_t i = it == r.begin() ? 0 : static_cast<std::size_t>(it - r.begin()) - 1;
  return std::min(i, r.size() - 2);
}
}  // namespace detail

struct Reconstruction2D {
  SpinorField2D field;
  Mask valid;  // inside [r_eps, r_end]
};

/// Evaluates the ansatz on a 2D grid with profiles interpolated linearly in r.
inline Reconstruction2D reconstruct_2d(const SpiralSolution& s, double t, const Grid2D& g) {
  require(s.r.size() >= 2, "reconstruct_2d: solution has fewer than two samples");
  Reconstruction2D out{SpinorField2D(g), Mask(g.size())};
  const double r_lo = s.r.front(), r_hi = s.r.back();
  const double n = static_cast<double>(s.params.n);
  const double wt = s.params.omega * t / s.params.consts.hbar;
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double x = g.x_axis().x(i), y = g.y_axis().x(j);
      const double r = std::hypot(x, y);
      const std::size_t k = g.index(i, j);
      if (r < r_lo || r > r_hi) continue;
      const std::size_t a = detail::bracket_index(s.r, r);
      const double w = (r - s.r[a]) / (s.r[a + 1] - s.r[a]);
      const Complex phi = (1.0 - w) * s.phi1[a] + w * s.phi1[a + 1];
      const double beta = (1.0 - w) * s.beta1[a] + w * s.beta1[a + 1];
      const double theta = std::atan2(y, x);
      out.field.psi1[k] = std::polar(1.0, n * theta + beta - wt) * phi;
      out.field.psi2[k] = std::polar(1.0, n * theta - beta - wt) * std::conj(phi);
      out.valid[k] = 1;
    }
  }
  return out;
}

struct ArmFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_abs_deviation = 0.0;  // normalised by the range of beta_1 in the window
  double fit_r2 = 1.0;
  std::size_t samples = 0;
};

/// Least-squares line through beta_1(r) on [r_min, r_end].
inline ArmFit arm_linearity(const SpiralSolution& s, double r_min) {
  require(r_min < s.params.r_max, "arm_linearity: r_min must be below r_max");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < s.r.size(); ++i)
    if (s.r[i] >= r_min) {
      xs.push_back(s.r[i]);
      ys.push_back(s.beta1[i]);
    }
  if (xs.size() < 8) throw DomainError("arm_linearity: fewer than 8 samples in window");
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  ArmFit f;
  f.samples = xs.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0, dev = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.slope * xs[i] + f.intercept);
    ss_res += e * e;
    dev = std::max(dev, std::abs(e));
  }
  const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  const double range = *hi - *lo;
  f.max_abs_deviation = range > 0.0 ? dev / range : 0.0;
  f.fit_r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

struct SpiralResidual {
  double amplitude = 0.0;  // max relative residual of the amplitude equation
  double phase = 0.0;      // max relative residual of the phase equation
  std::size_t points = 0;
};

/// Re-integrates the same trajectory on a `refine`-times denser sample grid,
/// forms phi'' and beta'' by sixth-order differences of the sampled first
/// derivatives, and substitutes into both radial equations. Residuals are
/// relative to the sum of the magnitudes of each equation's terms.
inline SpiralResidual spiral_residual(const SpiralSolution& s, std::size_t refine = 20) {
  SpiralParams p = s.params;
  p.n_samples = (s.params.n_samples - 1) * refine + 1;
  const auto fine = integrate_radial(p, s.c0, s.params.beta10);
  SpiralResidual out;
  const std::size_t m = fine.r.size();
  if (m < 13) return out;
  const double h = fine.r[1] - fine.r[0];
  const double kappa = p.consts.kappa();
  const double nn = static_cast<double>(p.n) * static_cast<double>(p.n);
  for (std::size_t i = 3; i + 3 < m; ++i) {
    if (fine.r[i + 3] > fine.r_end) break;
    auto d6 = [&](auto&& v) {
      return (-v[i - 3] + 9.0 * v[i - 2] - 45.0 * v[i - 1] + 45.0 * v[i + 1] - 9.0 * v[i + 2] + v[i + 3]) /
             (60.0 * h);
    };
    const Complex phi_dd = d6(fine.dphi1);
    const double beta_dd = d6(fine.dbeta1);
    const double r = fine.r[i];
    const Complex phi = fine.phi1[i], dphi = fine.dphi1[i];
    const double db = fine.dbeta1[i];
    double H = 0.0, G1 = 0.0;
    if (p.thermal) {
      const double rho = 2.0 * std::norm(phi);
      const double sigma = p.consts.hbar * (fine.beta1[i] + fine.arg_phi1[i]);
      const double T = temperature(rho, sigma, p.eos);
      H = (p.eos.cv + 1.0) * T;
      G1 = -p.consts.hbar * p.eos.entropy_slope * T / 2.0;
    }
    const Complex drift = Complex(1.0 / r, db) * dphi;
    const Complex source = (nn / (r * r) + db * db + kappa * (H - p.omega)) * phi;
    const double amp_scale = std::abs(phi_dd) + std::abs(drift) + std::abs(source);
    const double amp_res = std::abs(phi_dd + drift - source);
    if (amp_scale > 0.0) out.amplitude = std::max(out.amplitude, amp_res / amp_scale);
    const double ph_scale = std::abs(beta_dd) + std::abs(db / r) + std::abs(kappa * G1);
    const double ph_res = std::abs(beta_dd + db / r - kappa * G1);
    if (ph_scale > 0.0) out.phase = std::max(out.phase, ph_res / ph_scale);
    ++out.points;
  }
  return out;
}

}  // namespace qspiral
