#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qspiral/evolve.hpp"
#include "qspiral/lyapunov.hpp"
#include "qspiral/stationary.hpp"

using namespace qspiral;

TEST(Ode, HarmonicOscillatorDenseOutput) {
  auto rhs = [](double, const OdeState<2>& y) { return OdeState<2>{y[1], -y[0]}; };
  double worst = 0.0;
  auto obs = [&](const DenseStep<2>& s) {
    const double tm = 0.5 * (s.t_old + s.t_new);
    worst = std::max(worst, std::abs(s(tm)[0] - std::cos(tm)));
    return true;
  };
  const auto r = integrate_dopri5<2>(rhs, 0.0, {1.0, 0.0}, 10.0, {1e-12, 1e-14}, obs);
  EXPECT_EQ(r.status, OdeStatus::completed);
  EXPECT_NEAR(r.y[0], std::cos(10.0), 1e-10);
  EXPECT_LT(worst, 1e-9);
}

TEST(Stationary, ZeroDataStaysZero) {
  Stationary1DParams p;
  p.initial = {0, 0, 0, 0};
  p.x_max = 10;
  const auto t = stationary_integrate(p);
  for (double r : t.rho) EXPECT_EQ(r, 0.0);
  EXPECT_FALSE(t.truncated);
}

TEST(Stationary, SechProfileSolvesSingleComponentEquation) {
  // phi = eta sech(eta x) with a = -1 needs lambda = +eta^2/2 (hbar = m = 1).
  const double eta = 1.3;
  Stationary1DParams p;
  p.a = -1.0;
  p.lambda = eta * eta / 2;
  double worst = 0.0;
  for (double x = -6; x <= 6; x += 0.01) {
    const double s = 1 / std::cosh(eta * x), t = std::tanh(eta * x);
    const double phi = eta * s, dphi = -eta * eta * s * t;
    const double d2 = eta * eta * eta * (s * t * t - s * s * s);
    const auto f = detail::stationary_rhs({phi, 0, 0, 0, dphi, 0, 0, 0}, p);
    worst = std::max(worst, std::abs(f[4] - d2));
  }
  EXPECT_LT(worst, 1e-8);

  p.initial = {eta, 0, 0, 0};
  p.x_max = 6;
  const auto tr = stationary_integrate(p);
  for (std::size_t i = 0; i < tr.x.size(); ++i)
    EXPECT_NEAR(tr.phi1[i].real(), eta / std::cosh(eta * tr.x[i]), 1e-7);
}

TEST(Stationary, XEnergyConservedInCoupledRegime) {
  Stationary1DParams p;  // lambda = 0, a = -2, (1, 0.6, 0, 0), x in [0, 100]
  const auto t = stationary_integrate(p);
  ASSERT_FALSE(t.truncated);
  EXPECT_NEAR(t.x.back(), 100.0, 1e-12);
  const double e0 = t.energy_x.front();
  for (double e : t.energy_x) EXPECT_LE(std::abs(e - e0), 1e-10 * std::abs(e0));
}

TEST(Stationary, OverflowGuardTruncates) {
  Stationary1DParams p;
  p.a = 0.0;
  p.lambda = 1.0;
  p.overflow_guard = 1e3;
  const auto t = stationary_integrate(p);
  EXPECT_TRUE(t.truncated);
  EXPECT_FALSE(t.diagnostic.empty());
  EXPECT_LT(t.x.back(), 100.0);
}

TEST(LocalEigenvalues, RealSplitWithoutBaroclinicTerm) {
  const auto e = local_eigenvalues(0.5, 0.25, 0.0);
  EXPECT_GT(e.exponents[0].real(), 0.0);
  EXPECT_LT(e.exponents[1].real(), 0.0);
  EXPECT_NEAR(e.exponents[0].imag(), 0.0, 1e-15);
}

TEST(LocalEigenvalues, AnalyticSquareRoot) {
  const auto e = local_exponent_pair(0.0, 0.0, 1.0);
  EXPECT_NEAR(std::abs(e.plus - Complex(1, -1)), 0.0, 1e-15);
  EXPECT_NEAR(local_eigenvalues(0.0, 0.0, 1.0).min_abs_real, 1.0, 1e-15);
}

TEST(LocalEigenvalues, NonzeroGAlwaysHasGrowingMode) {
  for (double lh = -5; lh <= 5; lh += 0.5)
    for (double G : {-3.0, -0.1, 1e-3, 0.7, 4.0}) EXPECT_GT(local_eigenvalues(lh, 0.0, G).min_abs_real, 0.0);
}

TEST(Nonexistence, ConstantGGrowthMatchesExponent) {
  Stationary1DParams p;
  p.a = 0.0;
  p.lambda = 0.0;
  p.g = 1.0;
  p.initial = {1.0, 0.6, 0.0, 0.0};
  p.x_max = 30;
  p.overflow_guard = 1e300;
  const auto t = stationary_integrate(p);
  ASSERT_FALSE(t.truncated);
  auto lognorm = [&](std::size_t i) { return 0.5 * std::log(t.rho[i]); };
  const std::size_t i10 = 1000, i30 = t.x.size() - 1;
  const double rate = (lognorm(i30) - lognorm(i10)) / (t.x[i30] - t.x[i10]);
  const double expect = std::abs(local_exponent_pair(0.0, 0.0, 1.0).plus.real());
  EXPECT_NEAR(rate, expect, 0.05 * expect);
  for (std::size_t i = i10 + 1; i < t.x.size(); ++i) EXPECT_GT(t.rho[i], t.rho[i - 1]);
}

TEST(Lyapunov, LinearOscillatorIsZero) {
  Stationary1DParams p;
  p.a = 0.0;
  p.lambda = -1.0;
  EXPECT_NEAR(lyapunov_exponent(p, 1.0, 2000.0).exponent, 0.0, 0.01);
}

TEST(Lyapunov, SingleComponentIsZero) {
  Stationary1DParams p;
  p.initial = {1.0, 0.0, 0.0, 0.0};
  // tangent growth is linear in an integrable flow, so the estimate decays like log(L)/L
  EXPECT_NEAR(lyapunov_exponent(p, 1.0, 2000.0).exponent, 0.0, 0.01);
}

TEST(Lyapunov, CoupledRegimeRegression) {
  Stationary1DParams p;
  const auto r = lyapunov_exponent(p, 1.0, 500.0);
  EXPECT_EQ(r.trace_x.size(), 500u);
  EXPECT_NEAR(r.exponent, 0.01268818222, 1e-8);
}

TEST(Lyapunov, RejectsBaroclinicFlow) {
  Stationary1DParams p;
  p.g = 0.1;
  EXPECT_THROW(lyapunov_exponent(p, 1.0, 10.0), DomainError);
}

namespace {

SpinorField1D two_component(const Grid1D& g) {
  SpinorField1D f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    f.psi1[i] = std::polar(std::sqrt(0.6 + 0.2 * std::cos(x)), 0.3 * std::sin(x));
    f.psi2[i] = std::polar(std::sqrt(0.5 + 0.1 * std::sin(2 * x)), -0.2 * std::cos(x));
  }
  return f;
}

}  // namespace

TEST(Evolve, FreeGaussianSpreading) {
  Grid1D g(-25, 25, 1000, true);
  SpinorField1D f(g);
  const double s0 = 1.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    f.psi1[i] = std::pow(2 * std::numbers::pi * s0 * s0, -0.25) * std::exp(-g.x(i) * g.x(i) / (4 * s0 * s0));
  Evolve1DParams p{g};
  p.dt = 1e-3;
  p.n_steps = 1000;
  p.stride = 1000;
  const auto r = evolve(f, p);
  const auto& s = r.snapshots.back();
  double m2 = 0, n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    m2 += std::norm(s.psi1[i]) * g.x(i) * g.x(i);
    n += std::norm(s.psi1[i]);
  }
  const double t = s.t, expect = s0 * s0 * (1 + std::pow(t / (2 * s0 * s0), 2));
  EXPECT_NEAR(m2 / n, expect, 1e-6 * expect);
}

TEST(Evolve, SolitonIsPreserved) {
  Grid1D g(-20, 20, 800, true);
  SpinorField1D f(g);
  for (std::size_t i = 0; i < g.size(); ++i) f.psi1[i] = 1 / std::cosh(g.x(i));
  Evolve1DParams p{g};
  p.dt = 1e-3;
  p.n_steps = 5000;
  p.stride = 500;
  p.closure = BarotropicClosure{-1.0};
  const auto r = evolve(f, p);
  ASSERT_EQ(r.snapshots.size(), 11u);
  for (const auto& s : r.snapshots) {
    double e = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      e += g.spacing() * std::norm(s.psi1[i] - std::polar(1 / std::cosh(g.x(i)), s.t / 2));
    EXPECT_LE(std::sqrt(e), 1e-6) << "t = " << s.t;
  }
}

TEST(Evolve, IdealGasConservation) {
  Grid1D g(0, 2 * std::numbers::pi, 128, true);
  const auto f = two_component(g);
  auto run = [&](double dt) {
    Evolve1DParams p{g};
    p.dt = dt;
    p.n_steps = static_cast<std::size_t>(std::lround(0.5 / dt));
    p.stride = p.n_steps / 10;
    p.closure = EosParams{};
    return evolve(f, p);
  };
  const auto a = run(1e-3), b = run(5e-4);
  EXPECT_LE(a.report.max_rel_N_drift, 1e-10);
  EXPECT_LE(b.report.max_rel_N_drift, 1e-10);
  const double ratio = a.report.max_rel_E_drift / b.report.max_rel_E_drift;
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 5.0);
  EXPECT_EQ(a.report.t.size(), 11u);
  EXPECT_EQ(a.clamp_activations, 0u);
}

TEST(Evolve, PotentialSubstepKeepsDensity) {
  Grid1D g(0, 2 * std::numbers::pi, 64, true);
  auto f = two_component(g);
  auto sigma = initial_sigma(f, PhysConsts{});
  std::vector<double> before(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) before[i] = f.density(i);
  const auto clamps = potential_substep(f.psi1, f.psi2, sigma, EosParams{}, 0.05, PhysConsts{}, 1e-12);
  EXPECT_EQ(clamps, 0u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double after = std::norm(f.psi1[i]) + std::norm(f.psi2[i]);
    EXPECT_NEAR(after, before[i], 4 * std::numeric_limits<double>::epsilon() * before[i]);
  }
}

TEST(Evolve, PotentialSubstepClampsAndLogs) {
  Grid1D g(0, 1, 8, true);
  SpinorField1D f(g, std::vector<Complex>(8, 1.0), std::vector<Complex>(8, 0.1));
  auto sigma = initial_sigma(f, PhysConsts{});
  const auto clamps = potential_substep(f.psi1, f.psi2, sigma, EosParams{}, 10.0, PhysConsts{}, 1e-12);
  EXPECT_EQ(clamps, 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    const double rho = std::norm(f.psi1[i]) + std::norm(f.psi2[i]);
    EXPECT_NEAR(rho, 1.01, 1e-14);
    EXPECT_GT(std::norm(f.psi2[i]), 0.0);
  }
}

TEST(Evolve, DepletionIsRecordedOnce) {
  Grid1D g(0, 2 * std::numbers::pi, 128, true);
  Evolve1DParams p{g};
  p.dt = 1e-3;
  p.n_steps = 700;
  p.stride = 700;
  p.closure = EosParams{};
  const auto r = evolve(two_component(g), p);
  EXPECT_GT(r.first_clamp_t, 0.5);
  EXPECT_LT(r.first_clamp_t, 0.6);
  EXPECT_GT(r.clamp_activations, 0u);
  EXPECT_EQ(r.log.size(), 2u);
}

TEST(Evolve, CrankNicolsonOnOpenGrid) {
  Grid1D g(-20, 20, 801, false);
  SpinorField1D f(g);
  for (std::size_t i = 0; i < g.size(); ++i) f.psi1[i] = 1 / std::cosh(g.x(i));
  Evolve1DParams p{g};
  p.dt = 1e-3;
  p.n_steps = 1000;
  p.stride = 100;
  p.closure = BarotropicClosure{-1.0};
  p.scheme = Scheme::crank_nicolson;
  const auto r = evolve(f, p);
  EXPECT_LE(r.report.max_rel_N_drift, 1e-10);
  const auto& s = r.snapshots.back();
  double e = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    e += g.weight(i) * std::norm(s.psi1[i] - std::polar(1 / std::cosh(g.x(i)), s.t / 2));
  EXPECT_LE(std::sqrt(e), 5e-3);  // second-order finite differences at h = 0.05
}

TEST(Evolve, SchemeGridMismatchIsRejected) {
  Grid1D open(-1, 1, 16, false);
  Evolve1DParams p{open};
  EXPECT_THROW(evolve(SpinorField1D(open), p), DomainError);
  Grid1D per(-1, 1, 16, true);
  Evolve1DParams q{per};
  q.scheme = Scheme::crank_nicolson;
  EXPECT_THROW(evolve(SpinorField1D(per), q), DomainError);
}

TEST(Evolve, WarnsOnLargeStep) {
  Grid1D g(0, 1, 64, true);
  SpinorField1D f(g, std::vector<Complex>(64, 1.0), std::vector<Complex>(64, 0.0));
  Evolve1DParams p{g};
  p.dt = 0.1;
  p.n_steps = 2;
  const auto r = evolve(f, p);
  ASSERT_FALSE(r.log.empty());
  EXPECT_NE(r.log.front().find("warning"), std::string::npos);
}

TEST(Evolve, IdealGasRejectsWindingSigma) {
  Grid1D g(0, 2 * std::numbers::pi, 64, true);
  SpinorField1D f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    f.psi1[i] = std::polar(0.7, 2 * g.x(i));
    f.psi2[i] = std::polar(0.7, -g.x(i));
  }
  Evolve1DParams p{g};
  p.closure = EosParams{};
  p.n_steps = 1;
  EXPECT_THROW(evolve(f, p), DomainError);
  p.closure = BarotropicClosure{1.0};
  EXPECT_NO_THROW(evolve(f, p));
}
