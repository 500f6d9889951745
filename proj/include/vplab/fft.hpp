#pragma once

#include <complex>
#include <cstddef>
#include <mutex>

#include <fftw3.h>

#include "vplab/errors.hpp"

namespace vplab::fft {

// The FFTW planner is not reentrant.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
class Buffer {
 public:
  explicit Buffer(std::size_t n) : n_(n), p_(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (!p_) throw NumericalError("fftw_malloc failed");
    for (std::size_t i = 0; i < n; ++i) p_[i] = T{};
  }
  ~Buffer() { fftw_free(p_); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;

  T* data() { return p_; }
  const T* data() const { return p_; }
  std::size_t size() const { return n_; }
  T& operator[](std::size_t i) { return p_[i]; }
  const T& operator[](std::size_t i) const { return p_[i]; }

 private:
  std::size_t n_;
  T* p_;
};

using Complex = std::complex<double>;

/// Unnormalized 2-D real transforms of an n0 x n1 array (row-major, n1 fastest)
/// and its n0 x (n1/2+1) half spectrum. Planned once with FFTW_ESTIMATE, so
/// results do not depend on timing.
class Real2D {
 public:
  Real2D(int n0, int n1)
      : n0_(n0), n1_(n1), real_(static_cast<std::size_t>(n0) * n1),
        spec_(static_cast<std::size_t>(n0) * (n1 / 2 + 1)) {
    std::lock_guard lock(planner_mutex());
    auto* c = reinterpret_cast<fftw_complex*>(spec_.data());
    fwd_ = fftw_plan_dft_r2c_2d(n0, n1, real_.data(), c, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_2d(n0, n1, c, real_.data(), FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    if (!fwd_ || !inv_) throw NumericalError("FFTW planning failed");
  }
  ~Real2D() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  Real2D(const Real2D&) = delete;
  Real2D& operator=(const Real2D&) = delete;

  int n0() const { return n0_; }
  int n1() const { return n1_; }
  int half() const { return n1_ / 2 + 1; }
  double* real() { return real_.data(); }
  Complex* spectrum() { return spec_.data(); }

  void forward() { fftw_execute(fwd_); }
  /// Overwrites the spectrum buffer.
  void inverse() { fftw_execute(inv_); }

 private:
  int n0_, n1_;
  Buffer<double> real_;
  Buffer<Complex> spec_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

/// Signed integer wavenumber of index i on a grid of n points.
inline int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }

}  // namespace vplab::fft
