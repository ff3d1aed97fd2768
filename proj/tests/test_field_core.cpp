#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qspiral/madelung.hpp"

using namespace qspiral;
constexpr double pi = std::numbers::pi;

TEST(Grid, RejectsTooFewPointsAndEmptyRange) {
  EXPECT_THROW(Grid1D(0, 1, 7, true), DomainError);
  EXPECT_THROW(Grid1D(1, 1, 16, false), DomainError);
  EXPECT_DOUBLE_EQ(Grid1D(0, 1, 10, true).spacing(), 0.1);
  EXPECT_DOUBLE_EQ(Grid1D(0, 1, 11, false).spacing(), 0.1);
}

TEST(SpinorField, RejectsNonFiniteAndSizeMismatch) {
  Grid1D g(0, 1, 8, true);
  std::vector<Complex> ok(8, 1.0), bad(8, 1.0);
  bad[3] = Complex(NAN, 0);
  EXPECT_THROW(SpinorField1D(g, bad, ok), InvalidField);
  EXPECT_THROW(SpinorField1D(g, std::vector<Complex>(7), ok), InvalidField);
}

TEST(Madelung, SpinUpUniformMasksSecondPhase) {
  Grid1D g(0, 1, 16, true);
  SpinorField1D f(g, std::vector<Complex>(16, 1.0), std::vector<Complex>(16, 0.0));
  const auto m = madelung_decompose(f);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(m.rho1[i], 1.0);
    EXPECT_EQ(m.rho2[i], 0.0);
    EXPECT_EQ(m.s1[i], 0.0);
    EXPECT_EQ(m.s2[i], 0.0);
    EXPECT_TRUE(m.valid1[i]);
    EXPECT_FALSE(m.valid2[i]);
  }
}

TEST(Madelung, PlaneWavePhaseIsUnwrapped) {
  Grid1D g(0, 2 * pi, 64, true);
  SpinorField1D f(g);
  for (std::size_t i = 0; i < 64; ++i) f.psi1[i] = std::polar(1.0, g.x(i));
  const auto m = madelung_decompose(f);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(m.s1[i], g.x(i), 1e-13);
}

TEST(Madelung, HbarScalesPhase) {
  Grid1D g(0, 1, 8, true);
  SpinorField1D f(g, std::vector<Complex>(8, Complex(0, 2)), std::vector<Complex>(8, 1.0));
  const auto m = madelung_decompose(f, PhysConsts{0.5, 1.0});
  EXPECT_NEAR(m.s1[0], 0.5 * pi / 2, 1e-15);
}

TEST(Madelung, ComposeDirectSubstitution) {
  Grid1D g(0, 1, 8, true);
  MadelungVars<Grid1D> m{g, std::vector<double>(8, 4.0), std::vector<double>(8, 0.0),
                         std::vector<double>(8, pi / 2), std::vector<double>(8, 0.0),
                         Mask(8, 1), Mask(8, 0), 1.0};
  const auto f = madelung_compose(m);
  EXPECT_NEAR(std::abs(f.psi1[0] - Complex(0, 2)), 0.0, 1e-15);
  EXPECT_EQ(f.psi2[0], Complex(0, 0));
  m.rho1[2] = -1.0;
  EXPECT_THROW(madelung_compose(m), DomainError);
}

TEST(Madelung, RoundTripOnRandomSmoothSpinor) {
  Grid2D g(Grid1D(-1, 1, 40, true), Grid1D(-1, 1, 36, true));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::array<double, 8> c;
  for (auto& v : c) v = u(rng);
  SpinorField2D f(g);
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double x = g.x_axis().x(i), y = g.y_axis().x(j);
      const std::size_t k = g.index(i, j);
      f.psi1[k] = std::polar(1.2 + c[0] * std::sin(pi * x), 3 * c[1] * std::cos(pi * y) + c[2] * x);
      f.psi2[k] = std::polar(0.8 + 0.5 * c[3] * std::cos(pi * (x + y)), c[4] * 5 * std::sin(pi * x * y));
    }
  const auto back = madelung_compose(madelung_decompose(f));
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_LE(std::abs(back.psi1[k] - f.psi1[k]), 1e-12 * std::abs(f.psi1[k]));
    EXPECT_LE(std::abs(back.psi2[k] - f.psi2[k]), 1e-12 * std::abs(f.psi2[k]));
  }
}

TEST(Clebsch, Definitions) {
  Grid1D g(0, 2 * pi, 32, true);
  SpinorField1D f(g);
  for (std::size_t i = 0; i < 32; ++i) {
    f.psi1[i] = std::polar(1.0, g.x(i));
    f.psi2[i] = std::polar(1.0, -g.x(i));
  }
  const auto c = clebsch_vars(madelung_decompose(f));
  for (std::size_t i = 0; i < 32; ++i) {
    EXPECT_NEAR(c.rho[i], 2.0, 1e-15);
    EXPECT_NEAR(c.mu[i], 0.0, 1e-15);
    EXPECT_NEAR(c.phi[i], 0.0, 1e-14);
    EXPECT_NEAR(c.sigma[i], g.x(i), 1e-14);
  }
}

TEST(Clebsch, RhoPlusMinusMuIsExact) {
  Grid1D g(0, 1, 16, false);
  SpinorField1D f(g);
  for (std::size_t i = 0; i < 16; ++i) {
    f.psi1[i] = Complex(0.3 + 0.1 * i, 0.7);
    f.psi2[i] = Complex(1.1, -0.05 * i);
  }
  const auto m = madelung_decompose(f);
  const auto c = clebsch_vars(m);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(c.rho[i], m.rho1[i] + m.rho2[i]);
    EXPECT_EQ(c.mu[i], m.rho1[i] - m.rho2[i]);
    EXPECT_LE(std::abs(c.mu[i]), c.rho[i]);
  }
}

namespace {

ClebschVars<Grid2D> synthetic(const Grid2D& g, double (*frac)(double, double),
                              double (*phi)(double, double), double (*sigma)(double, double)) {
  const std::size_t n = g.size();
  ClebschVars<Grid2D> c{g, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                        std::vector<double>(n), Mask(n, 1), 1.0};
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double x = g.x_axis().x(i), y = g.y_axis().x(j);
      const std::size_t k = g.index(i, j);
      c.rho[k] = 2.0 + std::sin(x) * std::cos(y);
      c.mu[k] = frac(x, y) * c.rho[k];
      c.phi[k] = phi(x, y);
      c.sigma[k] = sigma(x, y);
    }
  return c;
}

double max_interior(const std::vector<double>& a, const Grid2D& g) {
  double m = 0.0;
  for (std::size_t j = 2; j + 2 < g.ny(); ++j)
    for (std::size_t i = 2; i + 2 < g.nx(); ++i) m = std::max(m, std::abs(a[g.index(i, j)]));
  return m;
}

}  // namespace

TEST(Vorticity, ZeroWhenSpinFractionIsConstant) {
  Grid2D g(Grid1D(0, 1, 24, false), Grid1D(0, 1, 24, false));
  auto c = synthetic(
      g, [](double, double) { return 0.0; }, [](double x, double y) { return x * y + x * x; },
      [](double x, double y) { return std::sin(x + 2 * y); });
  const auto mv = momentum_and_vorticity(c);
  EXPECT_EQ(max_interior(mv.w.values, g), 0.0);
}

TEST(Vorticity, AnalyticCurlOfLinearFields) {
  Grid2D g(Grid1D(0, 1, 24, false), Grid1D(0, 1, 24, false));
  auto c = synthetic(
      g, [](double x, double) { return x * 0.5; }, [](double, double) { return 0.0; },
      [](double, double y) { return y; });
  // mu/rho = x/2, sigma = y => w = 1/2
  const auto mv = momentum_and_vorticity(c);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(mv.w.values[k], 0.5, 1e-12);
}

TEST(Vorticity, DiscreteCurlConvergesToIdentityAtSecondOrder) {
  auto err = [](std::size_t n) {
    Grid2D g(Grid1D(0, 2 * pi, n, true), Grid1D(0, 2 * pi, n, true));
    auto c = synthetic(
        g, [](double x, double y) { return 0.4 * std::sin(x + y) * std::cos(y); },
        [](double x, double y) { return std::cos(x) * std::sin(2 * y); },
        [](double x, double y) { return std::sin(x - y) + 0.3 * std::cos(2 * x); });
    const auto mv = momentum_and_vorticity(c);
    const auto w = curl(mv.p);
    double m = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) m = std::max(m, std::abs(w.values[k] - mv.w.values[k]));
    return m;
  };
  const double e1 = err(64), e2 = err(128);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.2);
}

TEST(Vorticity, ScalarFieldIsCurlFree) {
  Grid2D g(Grid1D(-1, 1, 32, false), Grid1D(-1, 1, 32, false));
  SpinorField2D f(g);
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double x = g.x_axis().x(i), y = g.y_axis().x(j);
      f.psi1[g.index(i, j)] = std::polar(1.0 + 0.2 * x * y, 2 * x * x - y);
    }
  const auto mv = momentum_and_vorticity(clebsch_vars(madelung_decompose(f)));
  for (double w : mv.w.values) EXPECT_EQ(w, 0.0);
}

TEST(Momentum, OneDimensionalPlaneWave) {
  Grid1D g(0, 2 * pi, 64, true);
  SpinorField1D f(g);
  for (std::size_t i = 0; i < 64; ++i) f.psi1[i] = std::polar(1.0, 3 * g.x(i));
  const auto p = momentum(clebsch_vars(madelung_decompose(f)));
  for (double v : p.components[0]) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Spin, BasisStatesAndNormalisation) {
  Grid1D g(0, 1, 8, true);
  SpinorField1D up(g, std::vector<Complex>(8, 1.0), std::vector<Complex>(8, 0.0));
  auto s = spin_density(up);
  EXPECT_EQ(s.sx[0], 0.0);
  EXPECT_EQ(s.sy[0], 0.0);
  EXPECT_EQ(s.sz[0], 1.0);
  const double r = 1.0 / std::sqrt(2.0);
  SpinorField1D x(g, std::vector<Complex>(8, r), std::vector<Complex>(8, r));
  s = spin_density(x);
  EXPECT_NEAR(s.sx[0], 1.0, 1e-15);
  EXPECT_NEAR(s.sz[0], 0.0, 1e-15);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  SpinorField1D rnd(g);
  for (std::size_t i = 0; i < 8; ++i) {
    rnd.psi1[i] = Complex(n01(rng), n01(rng));
    rnd.psi2[i] = Complex(n01(rng), n01(rng));
  }
  s = spin_density(rnd);
  for (std::size_t i = 0; i < 8; ++i)
    EXPECT_NEAR(s.sx[i] * s.sx[i] + s.sy[i] * s.sy[i] + s.sz[i] * s.sz[i], 1.0, 1e-12);
}

TEST(Spin, MasksBelowFloor) {
  Grid1D g(0, 1, 8, true);
  SpinorField1D f(g, std::vector<Complex>(8, 1.0), std::vector<Complex>(8, 0.0));
  f.psi1[2] = 0.0;
  const auto s = spin_density(f);
  EXPECT_FALSE(s.valid[2]);
  EXPECT_TRUE(s.valid[3]);
}
