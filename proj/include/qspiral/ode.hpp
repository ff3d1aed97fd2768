#pragma once

// Dormand-Prince 5(4) with Hairer's fourth-order dense output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>

namespace qspiral {

struct OdeTolerances {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_initial = 0.0;  // 0 selects a starting step automatically
  double h_min = 1e-14;    // relative to the integration span
  std::size_t max_steps = 50'000'000;
};

enum class OdeStatus { completed, stopped_by_observer, step_underflow, max_steps, non_finite };

inline std::string to_string(OdeStatus s) {
  switch (s) {
    case OdeStatus::completed: return "completed";
    case OdeStatus::stopped_by_observer: return "stopped_by_observer";
    case OdeStatus::step_underflow: return "step_underflow";
    case OdeStatus::max_steps: return "max_steps";
    case OdeStatus::non_finite: return "non_finite";
  }
  return "unknown";
}

template <std::size_t N>
using OdeState = std::array<double, N>;

template <std::size_t N>
struct OdeResult {
  OdeStatus status = OdeStatus::completed;
  double t = 0.0;
  OdeState<N> y{};
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Continuous extension over one accepted step [t_old, t_new].
template <std::size_t N>
struct DenseStep {
  double t_old = 0.0;
  double t_new = 0.0;
  std::array<OdeState<N>, 5> coeff{};
  OdeState<N> y_new{};

  OdeState<N> operator()(double t) const {
    const double h = t_new - t_old;
    const double th = h != 0.0 ? (t - t_old) / h : 0.0;
    const double th1 = 1.0 - th;
    OdeState<N> y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = coeff[0][i] +
             th * (coeff[1][i] + th1 * (coeff[2][i] + th * (coeff[3][i] + th1 * coeff[4][i])));
    return y;
  }
};

namespace dopri {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dopri

/// Integrates y' = f(t, y) from t0 to t1 (t1 > t0). After every accepted step
/// `observer(const DenseStep<N>&)` is called; returning false stops the run.
template <std::size_t N, class Rhs, class Observer>
OdeResult<N> integrate_dopri5(Rhs&& f, double t0, const OdeState<N>& y0, double t1,
                              const OdeTolerances& tol, Observer&& observer) {
  using namespace dopri;
  OdeResult<N> res;
  res.t = t0;
  res.y = y0;
  if (!(t1 > t0)) return res;

  auto axpy = [](const OdeState<N>& y, double h, std::initializer_list<std::pair<double, const OdeState<N>*>> terms) {
    OdeState<N> out = y;
    for (const auto& [c, k] : terms)
      if (c != 0.0)
        for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
    return out;
  };
  auto scale = [&](double a, double b) { return tol.atol + tol.rtol * std::max(std::abs(a), std::abs(b)); };
  auto finite = [](const OdeState<N>& y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
  };

  const double span = t1 - t0;
  const double h_min = tol.h_min * std::max(1.0, std::abs(span));
  OdeState<N> y = y0;
  double t = t0;
  OdeState<N> k1 = f(t, y);
  if (!finite(k1)) {
    res.status = OdeStatus::non_finite;
    return res;
  }

  double h = tol.h_initial;
  if (h <= 0.0) {
    double d0 = 0.0, d1n = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = scale(y[i], y[i]);
      d0 += (y[i] / sk) * (y[i] / sk);
      d1n += (k1[i] / sk) * (k1[i] / sk);
    }
    d0 = std::sqrt(d0 / N);
    d1n = std::sqrt(d1n / N);
    h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h = std::min(h, span);
    const OdeState<N> y1 = axpy(y, h, {{1.0, &k1}});
    const OdeState<N> f1 = f(t + h, y1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = scale(y[i], y[i]);
      d2 += ((f1[i] - k1[i]) / sk) * ((f1[i] - k1[i]) / sk);
    }
    d2 = std::sqrt(d2 / N) / h;
    const double dm = std::max(d1n, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min({100.0 * h, h1, span});
  }

  DenseStep<N> dense;
  std::size_t steps = 0;
  bool last_rejected = false;
  while (t < t1) {
    if (steps++ >= tol.max_steps) {
      res.status = OdeStatus::max_steps;
      break;
    }
    if (h < h_min) {
      res.status = OdeStatus::step_underflow;
      break;
    }
    const bool final_step = t + h >= t1;
    if (final_step) h = t1 - t;

    const OdeState<N> k2 = f(t + c2 * h, axpy(y, h, {{a21, &k1}}));
    const OdeState<N> k3 = f(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    const OdeState<N> k4 = f(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const OdeState<N> k5 =
        f(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const OdeState<N> k6 =
        f(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const OdeState<N> y_new =
        axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const OdeState<N> k7 = f(t + h, y_new);

    double err = 0.0;
    bool ok = finite(y_new) && finite(k7);
    if (ok) {
      for (std::size_t i = 0; i < N; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * k7[i]);
        const double r = e / scale(y[i], y_new[i]);
        err += r * r;
      }
      err = std::sqrt(err / N);
      ok = std::isfinite(err);
    }
    if (!ok) {
      h *= 0.25;
      last_rejected = true;
      ++res.rejected;
      continue;
    }

    if (err <= 1.0) {
      dense.t_old = t;
      dense.t_new = final_step ? t1 : t + h;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = y_new[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        dense.coeff[0][i] = y[i];
        dense.coeff[1][i] = ydiff;
        dense.coeff[2][i] = bspl;
        dense.coeff[3][i] = ydiff - h * k7[i] - bspl;
        dense.coeff[4][i] =
            h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      dense.y_new = y_new;
      t = dense.t_new;
      y = y_new;
      k1 = k7;
      ++res.accepted;
      res.t = t;
      res.y = y;
      if (!observer(static_cast<const DenseStep<N>&>(dense))) {
        res.status = OdeStatus::stopped_by_observer;
        return res;
      }
      double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      fac = std::clamp(fac, 0.2, 5.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      h *= fac;
      last_rejected = false;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      last_rejected = true;
      ++res.rejected;
    }
  }
  return res;
}

template <std::size_t N, class Rhs>
OdeResult<N> integrate_dopri5(Rhs&& f, double t0, const OdeState<N>& y0, double t1,
                              const OdeTolerances& tol) {
  return integrate_dopri5<N>(std::forward<Rhs>(f), t0, y0, t1, tol,
                             [](const DenseStep<N>&) { return true; });
}

}  // namespace qspiral
