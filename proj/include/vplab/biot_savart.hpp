#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "vplab/errors.hpp"
#include "vplab/fft.hpp"
#include "vplab/grid_field.hpp"
#include "vplab/radial_profile.hpp"

namespace vplab {

struct Velocity {
  GridField u1, u2;
  double frame_ratio = 0.0;
  std::string warning;
};

/// Free-space Biot-Savart on a square grid.
///
/// u = (d2 psi, -d1 psi) with psi = -(1/2pi) log|x| * omega. The log kernel is
/// truncated at R = 1.5 L (beyond any distance inside the box) so that its
/// Fourier transform is smooth and can be sampled exactly on a 4n grid of
/// period 4L; the resulting velocity kernels are restricted to the offsets
/// needed by an n x n box and applied as an aperiodic convolution on a 2n
/// grid. Accuracy is spectral in h for smooth, well-resolved vorticity.
class BiotSavart {
 public:
  static constexpr double warn_ratio = 1e-8;
  static constexpr double fail_ratio = 1e-3;

  explicit BiotSavart(GridSpec grid) : grid_(grid), work_(2 * grid.n, 2 * grid.n) {
    grid.validate();
    build_kernels();
  }

  const GridSpec& grid() const { return grid_; }

  /// Checks the frame-decay precondition, then returns u.
  Velocity solve(const GridField& omega) {
    require(omega.grid == grid_, "biot_savart: grid mismatch");
    omega.check_finite();
    Velocity out{GridField(grid_), GridField(grid_), omega.frame_ratio(), {}};
    if (out.frame_ratio > fail_ratio)
      throw PreconditionError("biot_savart: vorticity on the outer 10% frame is " +
                              std::to_string(out.frame_ratio) + " of its maximum (limit 1e-3)");
    if (out.frame_ratio > warn_ratio)
      out.warning = "biot_savart: frame-decay ratio " + std::to_string(out.frame_ratio) +
                    " exceeds 1e-8; truncation error may be visible";
    apply(omega.values.data(), out.u1.values.data(), out.u2.values.data());
    return out;
  }

  /// Raw kernel application, no checks: n*n input, two n*n outputs.
  void apply(const double* omega, double* u1, double* u2) {
    const int n = grid_.n, m = 2 * n, half = n + 1;
    double* buf = work_.real();
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) buf[j * m + i] = (j < n && i < n) ? omega[j * n + i] : 0.0;
    work_.forward();
    fft::Complex* spec = work_.spectrum();
    const std::size_t ns = static_cast<std::size_t>(m) * half;
    omega_hat_.assign(spec, spec + ns);
    const double scale = grid_.h() * grid_.h() / (static_cast<double>(m) * m);
    for (int c = 0; c < 2; ++c) {
      const auto& K = c == 0 ? k1_ : k2_;
      for (std::size_t k = 0; k < ns; ++k) spec[k] = omega_hat_[k] * K[k];
      work_.inverse();
      double* u = c == 0 ? u1 : u2;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) u[j * n + i] = buf[j * m + i] * scale;
    }
  }

  /// Fourier transform of the truncated kernel -(1/2pi) log|x| 1{|x|<R}.
  static double truncated_green_hat(double k, double R) {
    if (k == 0.0) return R * R / 4.0 - R * R * std::log(R) / 2.0;
    const double kr = k * R;
    return (1.0 - std::cyl_bessel_j(0.0, kr)) / (k * k) - R * std::log(R) * std::cyl_bessel_j(1.0, kr) / k;
  }

 private:
  void build_kernels() {
    const int n = grid_.n;
    const int big = 4 * n;
    const double P = 4.0 * grid_.L;
    const double R = 1.5 * grid_.L;
    const double dk = 2.0 * std::numbers::pi / P;

    // G_hat depends on m0^2 + m1^2 only: tabulate on an octant
    const int mh = big / 2;
    std::vector<double> ghat(static_cast<std::size_t>(mh + 1) * (mh + 1));
    for (int a = 0; a <= mh; ++a)
      for (int b = 0; b <= a; ++b) {
        const double v = truncated_green_hat(dk * std::hypot(double(a), double(b)), R);
        ghat[a * (mh + 1) + b] = v;
        ghat[b * (mh + 1) + a] = v;
      }

    fft::Real2D fine(big, big);
    const int fh = fine.half();
    std::vector<double> t1(static_cast<std::size_t>(big) * big), t2(t1.size());
    for (int c = 0; c < 2; ++c) {
      fft::Complex* s = fine.spectrum();
      for (int i0 = 0; i0 < big; ++i0) {
        const int m0 = fft::wavenumber(i0, big);  // y
        for (int i1 = 0; i1 < fh; ++i1) {
          const int m1 = i1;  // x, nonnegative half
          const double g = ghat[std::abs(m0) * (mh + 1) + m1];
          // derivative factors vanish on the Nyquist lines
          const double ky = (std::abs(m0) == mh) ? 0.0 : dk * m0;
          const double kx = (m1 == mh) ? 0.0 : dk * m1;
          s[i0 * fh + i1] = c == 0 ? fft::Complex(0.0, ky * g) : fft::Complex(0.0, -kx * g);
        }
      }
      fine.inverse();
      auto& t = c == 0 ? t1 : t2;
      for (std::size_t k = 0; k < t.size(); ++k) t[k] = fine.real()[k] / (P * P);
    }

    const int m = 2 * n, half = n + 1;
    k1_.assign(static_cast<std::size_t>(m) * half, {});
    k2_ = k1_;
    for (int c = 0; c < 2; ++c) {
      const auto& t = c == 0 ? t1 : t2;
      double* buf = work_.real();
      for (int b = -n; b < n; ++b)
        for (int a = -n; a < n; ++a) {
          const int fb = (b + big) % big, fa = (a + big) % big;
          const int wb = (b + m) % m, wa = (a + m) % m;
          buf[wb * m + wa] = t[static_cast<std::size_t>(fb) * big + fa];
        }
      work_.forward();
      auto& K = c == 0 ? k1_ : k2_;
      for (std::size_t k = 0; k < K.size(); ++k) K[k] = work_.spectrum()[k];
    }
  }

  GridSpec grid_;
  fft::Real2D work_;
  std::vector<fft::Complex> k1_, k2_, omega_hat_;
};

/// One-shot convenience wrapper.
inline Velocity biot_savart_grid(const GridField& omega) {
  BiotSavart bs(omega.grid);
  return bs.solve(omega);
}

/// Lamb-Oseen vorticity (alpha / nu t) G(x / sqrt(nu t)) sampled on `grid`.
inline GridField oseen_field(double alpha, double nu, double t, Vec2 center, GridSpec grid) {
  require(nu > 0.0 && t > 0.0, "oseen_field: need nu > 0 and t > 0");
  grid.validate();
  const double core = std::sqrt(nu * t);
  if (core < 2.0 * grid.h())
    throw PreconditionError("oseen_field: core sqrt(nu t) = " + std::to_string(core) +
                            " is under-resolved (need >= 2 grid spacings)");
  const double amp = alpha / (4.0 * std::numbers::pi * nu * t);
  return GridField::sample(grid, [&](Vec2 x) {
    const double dx = x[0] - center[0], dy = x[1] - center[1];
    return amp * std::exp(-(dx * dx + dy * dy) / (4.0 * nu * t));
  });
}

/// Azimuthal velocity of the Oseen vortex at radius r: alpha (1 - e^{-r^2/4 nu t}) / (2 pi r).
inline double oseen_speed(double alpha, double nu, double t, double r) {
  return -alpha * std::expm1(-r * r / (4.0 * nu * t)) / (2.0 * std::numbers::pi * r);
}

/// Windowed spectral divergence of (u1, u2): max |div u| over the central half
/// of the box (where the window is one) divided by max |u|.
inline double divergence_defect(const GridField& u1, const GridField& u2) {
  const int n = u1.n();
  const double L = u1.grid.L;
  fft::Real2D plan(n, n);
  const int half = plan.half();
  auto window = [&](int i) {
    // C-infinity bump: 1 on the central half, 0 near the edges
    const double x = (i + 0.5) / n;  // in (0,1)
    auto step = [](double s) {
      if (s <= 0) return 0.0;
      if (s >= 1) return 1.0;
      const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
      return a / (a + b);
    };
    const double lo = step((x - 0.1) / 0.15), hi = step((0.9 - x) / 0.15);
    return lo * hi;
  };
  std::vector<double> div(static_cast<std::size_t>(n) * n, 0.0);
  for (int c = 0; c < 2; ++c) {
    const auto& u = c == 0 ? u1 : u2;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) plan.real()[j * n + i] = u.at(i, j) * window(i) * window(j);
    plan.forward();
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < half; ++i1) {
        const int m0 = fft::wavenumber(i0, n);
        const double k = 2.0 * std::numbers::pi / L * (c == 0 ? (i1 == n / 2 ? 0 : i1) : (std::abs(m0) == n / 2 ? 0 : m0));
        plan.spectrum()[i0 * half + i1] *= fft::Complex(0.0, k) / static_cast<double>(n * n);
      }
    plan.inverse();
    for (std::size_t k = 0; k < div.size(); ++k) div[k] += plan.real()[k];
  }
  double dmax = 0.0, umax = 0.0;
  for (int j = n / 4; j < 3 * n / 4; ++j)
    for (int i = n / 4; i < 3 * n / 4; ++i) dmax = std::max(dmax, std::abs(div[j * n + i]));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) umax = std::max(umax, std::hypot(u1.at(i, j), u2.at(i, j)));
  return umax > 0.0 ? dmax / umax : 0.0;
}

}  // namespace vplab
