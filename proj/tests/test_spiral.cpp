#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qspiral/madelung.hpp"
#include "qspiral/spiral.hpp"

using namespace qspiral;
constexpr double pi = std::numbers::pi;

namespace {

SpiralParams fig2() { return SpiralParams{}; }

SpiralParams barotropic() {
  SpiralParams p;
  p.eos.entropy_slope = 0.0;
  return p;
}

SpiralParams linear_limit() {
  SpiralParams p;
  p.thermal = false;
  return p;
}

SpiralSolution synthetic_profile(int n, double k, double r_max) {
  SpiralSolution s;
  s.params.n = n;
  s.params.r_max = r_max;
  s.params.omega = 0.0;
  for (std::size_t i = 0; i <= 2000; ++i) {
    const double r = 1e-3 + (r_max - 1e-3) * static_cast<double>(i) / 2000.0;
    s.r.push_back(r);
    s.phi1.emplace_back(1.0, 0.0);
    s.beta1.push_back(k * r);
    s.beta2.push_back(-k * r);
  }
  s.r_end = r_max;
  return s;
}

}  // namespace

TEST(SpiralRhs, BarotropicKeepsPhaseSlopeZero) {
  const auto p = barotropic();
  const SpiralState y{0.3, 0.1, 0.2, -0.4, 0.7, 0.0, 0.0};
  const auto d = spiral_rhs(2.0, y, p);
  EXPECT_EQ(d[4], 0.0);
  EXPECT_EQ(d[5], 0.0);
}

TEST(SpiralRhs, BesselProfileInLinearLimit) {
  const auto p = linear_limit();
  const int n = p.n;
  const double k = std::sqrt(p.consts.kappa() * p.omega);
  double worst = 0.0;
  for (double r = 0.05; r < 20; r += 0.05) {
    const double J = std::cyl_bessel_j(n, k * r);
    const double dJ = 0.5 * k * (std::cyl_bessel_j(n - 1, k * r) - std::cyl_bessel_j(n + 1, k * r));
    const double d2J = 0.25 * k * k *
                       (std::cyl_bessel_j(n - 2, k * r) - 2 * J + std::cyl_bessel_j(n + 2, k * r));
    const auto d = spiral_rhs(r, SpiralState{J, 0, dJ, 0, 0, 0, 0}, p);
    worst = std::max(worst, std::abs(d[2] - d2J));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(SpiralRhs, SecondComponentIsConjugateMirror) {
  const auto p = fig2();
  const Complex phi(0.4, -0.3), dphi(1.2, 0.5);
  const double db = 0.37, H = 1.9, G = -0.8, r = 1.7;
  const Complex a1 = amplitude_rhs(r, phi, dphi, db, H, p);
  const Complex a2 = amplitude_rhs(r, std::conj(phi), std::conj(dphi), -db, H, p);
  EXPECT_EQ(a2, std::conj(a1));
  EXPECT_EQ(phase_rhs(r, -db, -G, p), -phase_rhs(r, db, G, p));
}

TEST(IntegrateRadial, ZeroAmplitudeIsZero) {
  const auto s = integrate_radial(fig2(), 0.0, 0.0);
  EXPECT_TRUE(s.bounded);
  for (const auto& v : s.phi1) EXPECT_EQ(v, Complex(0.0, 0.0));
  EXPECT_THROW(integrate_radial(fig2(), -1.0, 0.0), DomainError);
}

TEST(IntegrateRadial, BarotropicPhaseIsConstant) {
  auto p = barotropic();
  p.beta10 = 0.25;
  const auto s = shoot(p).solution;
  ASSERT_TRUE(s.bounded);
  for (double b : s.beta1) EXPECT_NEAR(b, 0.25, 1e-10);
  EXPECT_EQ(arm_linearity(s, 3.0).slope, 0.0);
}

TEST(IntegrateRadial, GaugeCovariance) {
  auto p = fig2();
  const auto a = integrate_radial(p, 1.2, 0.0);
  const double delta = 0.3;
  p.eos.sigma0 = p.consts.hbar * delta * p.eos.entropy_slope;
  const auto b = integrate_radial(p, 1.2, delta);
  ASSERT_EQ(a.r.size(), b.r.size());
  for (std::size_t i = 0; i < a.r.size(); ++i) {
    EXPECT_NEAR(std::abs(a.phi1[i]), std::abs(b.phi1[i]), 1e-8 * (1 + std::abs(a.phi1[i])));
    EXPECT_NEAR(a.dbeta1[i], b.dbeta1[i], 1e-8 * (1 + std::abs(a.dbeta1[i])));
  }
}

TEST(Shoot, BoundedOnlyBracketIsAnError) {
  auto p = fig2();
  p.c_lo = 0.5;
  p.c_hi = 1.0;
  try {
    shoot(p);
    FAIL() << "expected BracketError";
  } catch (const BracketError& e) {
    EXPECT_NE(std::string(e.what()).find("bounded"), std::string::npos);
  }
}

TEST(Shoot, LinearLimitIsScaleInvariantBessel) {
  const auto p = linear_limit();
  const auto r = shoot(p);
  EXPECT_TRUE(r.scale_invariant);
  EXPECT_EQ(r.c0, p.c_lo);
  const double k = std::sqrt(p.consts.kappa() * p.omega);
  const double scale = r.c0 * 2.0 * std::pow(2.0 / k, 2);  // c0 r^2 ~ c0 n! (2/k)^n J_n(kr)
  for (std::size_t i = 0; i < r.solution.r.size(); i += 50)
    EXPECT_NEAR(r.solution.phi1[i].real(), scale * std::cyl_bessel_j(2, k * r.solution.r[i]), 1e-7);
}

TEST(Shoot, DualSpiralRegime) {
  const auto r = shoot(fig2());
  ASSERT_FALSE(r.scale_invariant);
  EXPECT_TRUE(r.bounded_verified);
  EXPECT_TRUE(r.unbounded_verified);
  EXPECT_NEAR(r.c0, 1.54212835947419, 1e-11);
  EXPECT_LE(std::abs(r.unbounded_end - r.bounded_end), 1e-12 * r.c0);
  const auto& s = r.solution;
  ASSERT_TRUE(s.bounded);
  for (std::size_t i = 0; i < s.r.size(); ++i) {
    EXPECT_EQ(s.beta2[i], -s.beta1[i]);
    EXPECT_GE(s.rho[i], 0.0);
    if (i > 0) {
      EXPECT_LT(s.beta1[i], s.beta1[i - 1]);
    }
  }
  const auto fit = arm_linearity(s, 3.0);
  EXPECT_GE(fit.fit_r2, 0.99);
  EXPECT_NEAR(fit.slope, -2.85927, 1e-4);
  const auto res = spiral_residual(s);
  EXPECT_LE(res.amplitude, 1e-6);
  EXPECT_LE(res.phase, 1e-6);
}

TEST(Shoot, IsDeterministic) {
  const auto a = shoot(fig2()), b = shoot(fig2());
  EXPECT_EQ(a.c0, b.c0);
  EXPECT_EQ(a.solution.beta1, b.solution.beta1);
}

TEST(ArmLinearity, ExactLine) {
  const auto s = synthetic_profile(2, 0.7, 20.0);
  const auto f = arm_linearity(s, 3.0);
  EXPECT_NEAR(f.slope, 0.7, 1e-12);
  EXPECT_NEAR(f.max_abs_deviation, 0.0, 1e-12);
  EXPECT_NEAR(f.fit_r2, 1.0, 1e-12);
}

TEST(ArmLinearity, QuadraticAnalyticResidual) {
  SpiralSolution s;
  s.params.r_max = 2.0;
  const std::size_t N = 101;
  for (std::size_t i = 0; i < N; ++i) {
    const double r = 1.0 + static_cast<double>(i) / (N - 1);
    s.r.push_back(r);
    s.beta1.push_back(r * r);
  }
  // Residual of r^2 against its best line on uniform samples is
  // (r - 3/2)^2 - m2 with m2 = (N+1)/(12(N-1)); extreme at the ends.
  const double m2 = (N + 1.0) / (12.0 * (N - 1.0));
  const auto f = arm_linearity(s, 1.0);
  EXPECT_NEAR(f.max_abs_deviation, (0.25 - m2) / 3.0, 1e-12);
  EXPECT_NEAR(f.slope, 3.0, 1e-12);
}

TEST(ArmLinearity, TooFewSamples) {
  auto s = synthetic_profile(2, 1.0, 20.0);
  EXPECT_THROW(arm_linearity(s, 19.95), DomainError);
}

TEST(Reconstruct, AxisymmetricModeHasNoAngularDependence) {
  auto p = fig2();
  p.n = 0;
  const auto s = integrate_radial(p, 0.3, 0.0);
  Grid2D g(Grid1D(-10, 10, 101, false), Grid1D(-10, 10, 101, false));
  const auto rec = reconstruct_2d(s, 0.0, g);
  // points on the same circle: (x, y), (-x, y), (y, x), (-y, -x)
  for (std::size_t j = 0; j < 101; j += 7)
    for (std::size_t i = 0; i < 101; i += 5) {
      const std::size_t k = g.index(i, j), m = g.index(100 - i, j), t = g.index(j, i);
      if (!rec.valid[k]) continue;
      EXPECT_NEAR(std::abs(rec.field.psi1[k] - rec.field.psi1[m]), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(rec.field.psi1[k] - rec.field.psi1[t]), 0.0, 1e-12);
    }
}

TEST(Reconstruct, TwoArmModeHasPeriodPi) {
  const auto s = integrate_radial(fig2(), 1.2, 0.0);
  Grid2D g(Grid1D(-10, 10, 81, false), Grid1D(-10, 10, 81, false));
  const auto rec = reconstruct_2d(s, 0.4, g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const std::size_t i = k % 81, j = k / 81;
    const std::size_t opp = g.index(80 - i, 80 - j);  // theta + pi
    EXPECT_NEAR(rec.field.psi1[k].real(), rec.field.psi1[opp].real(), 1e-12);
  }
}

TEST(Reconstruct, DensityIsRadialAndArmsMirror) {
  const auto s = shoot(fig2()).solution;
  Grid2D g(Grid1D(-15, 15, 121, false), Grid1D(-15, 15, 121, false));
  const auto rec = reconstruct_2d(s, 0.0, g);
  for (std::size_t j = 0; j < 121; ++j)
    for (std::size_t i = 0; i < 121; ++i) {
      const std::size_t k = g.index(i, j), mirror = g.index(i, 120 - j);  // theta -> -theta
      if (!rec.valid[k]) continue;
      EXPECT_NEAR(rec.field.density(k), rec.field.density(g.index(j, i)), 1e-9 * (1 + rec.field.density(k)));
      EXPECT_NEAR(std::abs(rec.field.psi2[k] - std::conj(rec.field.psi1[mirror])), 0.0,
                  1e-9 * (1 + std::abs(rec.field.psi1[k])));
    }
}

TEST(Reconstruct, LinearPhaseGivesArchimedeanArms) {
  const int n = 2;
  const double k = 0.8;
  const auto s = synthetic_profile(n, k, 20.0);
  Grid2D g(Grid1D(-12, 12, 481, false), Grid1D(-12, 12, 481, false));
  const auto rec = reconstruct_2d(s, 0.0, g);
  const double h = g.x_axis().spacing();
  std::size_t crossings = 0;
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
      const std::size_t a = g.index(i, j), b = g.index(i + 1, j);
      if (!rec.valid[a] || !rec.valid[b]) continue;
      const double fa = rec.field.psi1[a].real(), fb = rec.field.psi1[b].real();
      if (fa == 0.0 || fa * fb > 0.0) continue;
      const double x = g.x_axis().x(i) + h * fa / (fa - fb), y = g.y_axis().x(j);
      const double r = std::hypot(x, y);
      if (r < 1.0) continue;
      const double arg = n * std::atan2(y, x) + k * r - pi / 2;
      const double off = std::abs(arg - pi * std::round(arg / pi));
      // linear interpolation of cos along x: error ~ h^2 |d2/dx2| / 8
      EXPECT_LE(off, h * h * std::pow(k + n / r, 2) / 4 + 1e-9) << "r = " << r;
      ++crossings;
    }
  EXPECT_GT(crossings, 100u);
}

TEST(Reconstruct, OutsideSolutionRangeIsMasked) {
  const auto s = integrate_radial(fig2(), 1.0, 0.0);
  Grid2D g(Grid1D(-30, 30, 61, false), Grid1D(-30, 30, 61, false));
  const auto rec = reconstruct_2d(s, 0.0, g);
  EXPECT_FALSE(rec.valid[g.index(0, 0)]);
  EXPECT_FALSE(rec.valid[g.index(30, 30)]);  // r = 0 < r_eps
  EXPECT_TRUE(rec.valid[g.index(35, 30)]);
}
