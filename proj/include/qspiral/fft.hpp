#pragma once

// Thin RAII wrapper over FFTW for 1D complex transforms, plus spectral
// derivatives on periodic grids.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "qspiral/errors.hpp"
#include "qspiral/grid.hpp"

namespace qspiral {

namespace detail {
// The FFTW planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

class FftPlan1D {
 public:
  explicit FftPlan1D(std::size_t n) : n_(n) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    buf_ = fftw_alloc_complex(n);
    if (!buf_) throw NumericalFailure("FftPlan1D: allocation failed");
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPlan1D() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(buf_);
  }
  FftPlan1D(const FftPlan1D&) = delete;
  FftPlan1D& operator=(const FftPlan1D&) = delete;

  std::size_t size() const { return n_; }

  /// Unnormalised forward transform, in place.
  void forward(std::span<std::complex<double>> data) const { run(fwd_, data, 1.0); }
  /// Inverse transform including the 1/n normalisation, in place.
  void inverse(std::span<std::complex<double>> data) const {
    run(inv_, data, 1.0 / static_cast<double>(n_));
  }

 private:
  void run(fftw_plan plan, std::span<std::complex<double>> data, double scale) const {
    if (data.size() != n_) throw InvalidField("FftPlan1D: size mismatch");
    auto* b = reinterpret_cast<std::complex<double>*>(buf_);
    std::copy(data.begin(), data.end(), b);
    fftw_execute(plan);
    for (std::size_t i = 0; i < n_; ++i) data[i] = b[i] * scale;
  }

  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

/// Angular wavenumbers in FFT order for a periodic grid.
inline std::vector<double> wavenumbers(const Grid1D& g) {
  const std::size_t n = g.size();
  std::vector<double> k(n);
  const double dk = 2.0 * std::numbers::pi / g.length();
  for (std::size_t i = 0; i < n; ++i) {
    const auto m = static_cast<long long>(i);
    const long long half = static_cast<long long>(n) / 2;
    k[i] = dk * static_cast<double>(m <= half ? m : m - static_cast<long long>(n));
    if (n % 2 == 0 && m == half) k[i] = dk * static_cast<double>(half);
  }
  return k;
}

/// d/dx by Fourier multiplication; the Nyquist mode is dropped.
inline std::vector<std::complex<double>> spectral_derivative(std::span<const std::complex<double>> f,
                                                             const Grid1D& g, const FftPlan1D& plan) {
  require(g.periodic(), "spectral_derivative: periodic grid required");
  std::vector<std::complex<double>> d(f.begin(), f.end());
  plan.forward(d);
  const auto k = wavenumbers(g);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= std::complex<double>(0.0, k[i]);
  if (d.size() % 2 == 0) d[d.size() / 2] = 0.0;
  plan.inverse(d);
  return d;
}

inline std::vector<double> spectral_derivative(std::span<const double> f, const Grid1D& g,
                                               const FftPlan1D& plan) {
  std::vector<std::complex<double>> c(f.begin(), f.end());
  const auto d = spectral_derivative(std::span<const std::complex<double>>(c), g, plan);
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].real();
  return out;
}

}  // namespace qspiral
