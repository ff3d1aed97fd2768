#pragma once

// Benettin estimate of the largest Lyapunov exponent of the real 4D x-flow
// phi_j'' = kappa (lambda + a rho) phi_j, using the variational equations
// and periodic renormalisation of one tangent vector.

#include <array>
#include <cmath>
#include <vector>

#include "qspiral/errors.hpp"
#include "qspiral/ode.hpp"
#include "qspiral/stationary.hpp"

namespace qspiral {

struct LyapunovResult {
  double exponent = 0.0;
  std::vector<double> trace_x;         // end of each renormalisation interval
  std::vector<double> trace_estimate;  // running estimate at trace_x
};

inline LyapunovResult lyapunov_exponent(const Stationary1DParams& p, double renorm_interval,
                                        double length) {
  p.validate();
  require(p.g == 0.0, "lyapunov_exponent: requires the real flow (g = 0)");
  require(renorm_interval > 0.0 && length >= renorm_interval,
          "lyapunov_exponent: need 0 < renorm_interval <= length");
  const double kappa = p.consts.kappa();

  // phi (0..1), phi' (2..3), tangent (4..5), tangent' (6..7)
  auto rhs = [&](double, const OdeState<8>& y) {
    const double rho = y[0] * y[0] + y[1] * y[1];
    const double k = kappa * (p.lambda + p.a * rho);
    const double proj = 2.0 * kappa * p.a * (y[0] * y[4] + y[1] * y[5]);
    return OdeState<8>{y[2], y[3], k * y[0], k * y[1], y[6], y[7],
                       k * y[4] + proj * y[0], k * y[5] + proj * y[1]};
  };

  OdeState<8> y{p.initial[0], p.initial[1], p.initial[2], p.initial[3], 0.5, 0.5, 0.5, 0.5};
  const auto intervals = static_cast<std::size_t>(std::floor(length / renorm_interval + 1e-9));
  LyapunovResult out;
  double log_sum = 0.0;
  double x = 0.0;
  for (std::size_t k = 0; k < intervals; ++k) {
    const auto r = integrate_dopri5<8>(rhs, x, y, x + renorm_interval, p.tol);
    if (r.status != OdeStatus::completed)
      throw NumericalFailure("lyapunov_exponent: integrator " + to_string(r.status) +
                             " at x = " + std::to_string(r.t));
    y = r.y;
    x += renorm_interval;
    if (std::hypot(y[0], y[1]) > p.overflow_guard)
      throw NumericalFailure("lyapunov_exponent: trajectory blow-up at x = " + std::to_string(x));
    const double norm = std::sqrt(y[4] * y[4] + y[5] * y[5] + y[6] * y[6] + y[7] * y[7]);
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NumericalFailure("lyapunov_exponent: degenerate tangent vector");
    log_sum += std::log(norm);
    for (std::size_t i = 4; i < 8; ++i) y[i] /= norm;
    out.trace_x.push_back(x);
    out.trace_estimate.push_back(log_sum / x);
  }
  out.exponent = out.trace_estimate.empty() ? 0.0 : out.trace_estimate.back();
  return out;
}

}  // namespace qspiral
