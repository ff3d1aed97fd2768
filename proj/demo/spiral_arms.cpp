// Shoots the n = 2 thermal spiral and prints its arm profile.

#include <cstdio>

#include "qspiral/spiral.hpp"

int main() {
  using namespace qspiral;
  SpiralParams p;  // n = 2, omega = 4.5, ideal gas with cv = 1
  const ShootResult sh = shoot(p);
  const SpiralSolution& s = sh.solution;
  std::printf("c0* = %.12f after %zu bisections (bounded to r = %g)\n", sh.c0, sh.iterations, s.r_end);

  const ArmFit fit = arm_linearity(s, 3.0);
  std::printf("beta1 ~ %.4f r + %.4f on [3, %g], R^2 = %.4f\n", fit.slope, fit.intercept, s.r_end, fit.fit_r2);

  std::printf("%8s %14s %14s\n", "r", "|phi1|^2", "beta1");
  for (std::size_t i = 0; i < s.r.size(); i += 200) std::printf("%8.3f %14.6e %14.6f\n", s.r[i], s.rho[i] / 2, s.beta1[i]);
}
