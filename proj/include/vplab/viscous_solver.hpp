#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "vplab/biot_savart.hpp"
#include "vplab/fft.hpp"
#include "vplab/fokker_planck.hpp"
#include "vplab/grid_field.hpp"
#include "vplab/steady_state.hpp"

namespace vplab {

/// d_t w + (u - Omega x^perp).grad w = nu Lap w in the frame rotating at Omega.
struct SolverConfig {
  double nu = 1.0;
  double Omega = 0.0;
  GridSpec grid{256, 40.0, {0.0, 0.0}};
  double t_start = 1.0;
  double t_end = 2.0;
  double dt_cfl_factor = 0.5;
  bool dealias = true;
  double dt_fixed = 0.0;       // 0 selects the adaptive CFL step
  double frame_limit = 1e-3;   // outer-frame vorticity over max, abort above
  double snap_every = 0.0;     // 0 keeps only the end state

  void validate() const {
    require(nu > 0.0 && std::isfinite(nu), "solver: nu must be positive (parabolic solver)");
    require(std::isfinite(Omega), "solver: Omega must be finite");
    grid.validate();
    require((grid.n & (grid.n - 1)) == 0, "solver: n must be a power of two");
    require(t_start > 0.0 && t_end >= t_start, "solver: need 0 < t_start <= t_end");
    require(dt_cfl_factor > 0.0 && dt_cfl_factor <= 1.0, "solver: dt_cfl_factor must be in (0, 1]");
    require(dt_fixed >= 0.0 && snap_every >= 0.0, "solver: dt_fixed and snap_every must be non-negative");
  }
};

struct Snapshot {
  double t = 0.0;
  GridField omega;
};

class ViscousSolver {
 public:
  explicit ViscousSolver(SolverConfig cfg) : cfg_(cfg), bs_((cfg.validate(), cfg.grid)), plan_(cfg.grid.n, cfg.grid.n) {
    const int n = cfg_.grid.n, half = plan_.half();
    const double k0 = 2.0 * std::numbers::pi / cfg_.grid.L;
    const int cut = n / 3;
    kx_.resize(half);
    ky_.resize(n);
    for (int i = 0; i < half; ++i) kx_[i] = k0 * i;
    for (int j = 0; j < n; ++j) ky_[j] = k0 * fft::wavenumber(j, n);
    mask_.assign(static_cast<std::size_t>(n) * half, 1.0);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < half; ++i) {
        const int mj = std::abs(fft::wavenumber(j, n));
        const bool keep = cfg_.dealias ? (i <= cut && mj <= cut) : (i < n / 2 && mj < n / 2);
        mask_[static_cast<std::size_t>(j) * half + i] = keep ? 1.0 : 0.0;
      }
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    u1_.resize(nn);
    u2_.resize(nn);
  }

  const SolverConfig& config() const { return cfg_; }
  std::size_t steps() const { return steps_; }
  double last_dt() const { return last_dt_; }

  /// Stable step for the current velocity bound.
  double stable_dt(double umax) const {
    const double h = cfg_.grid.h();
    const double adv = umax > 0.0 ? h / umax : 1e300;
    return cfg_.dt_cfl_factor * std::min(adv, h * h / (4.0 * cfg_.nu));
  }

  /// Projects w onto the retained band (2/3 rule when dealiasing).
  void filter(GridField& w) {
    const int n = cfg_.grid.n;
    std::copy(w.values.begin(), w.values.end(), plan_.real());
    plan_.forward();
    auto* s = plan_.spectrum();
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (std::size_t k = 0; k < mask_.size(); ++k) s[k] *= mask_[k] * norm;
    plan_.inverse();
    std::copy(plan_.real(), plan_.real() + w.values.size(), w.values.begin());
  }

  /// Advances w from t to t_target with SSP-RK3, landing exactly on t_target.
  void advance(GridField& w, double& t, double t_target) {
    require(w.grid == cfg_.grid, "solver: grid mismatch");
    const std::size_t nn = w.values.size();
    std::vector<double> k1(nn), s1(nn), s2(nn);
    while (t < t_target * (1.0 - 1e-14)) {
      const double umax = tendency(w.values, k1);
      const double bound = stable_dt(umax);
      double dt = bound;
      if (cfg_.dt_fixed > 0.0) {
        if (cfg_.dt_fixed > bound * (1.0 + 1e-12))
          throw PreconditionError("solver: CFL violation, dt " + std::to_string(cfg_.dt_fixed) +
                                  " exceeds the stable step " + std::to_string(bound));
        dt = cfg_.dt_fixed;
      }
      if (!(dt > 1e-12 * std::max(1.0, t))) throw NumericalError("solver: CFL step collapsed (max |u| = " + std::to_string(umax) + ")");
      dt = std::min(dt, t_target - t);
      for (std::size_t k = 0; k < nn; ++k) s1[k] = w.values[k] + dt * k1[k];
      tendency(s1, k1);
      for (std::size_t k = 0; k < nn; ++k) s2[k] = 0.75 * w.values[k] + 0.25 * (s1[k] + dt * k1[k]);
      tendency(s2, k1);
      for (std::size_t k = 0; k < nn; ++k) w.values[k] = w.values[k] / 3.0 + 2.0 / 3.0 * (s2[k] + dt * k1[k]);
      t = (t_target - t <= dt) ? t_target : t + dt;
      last_dt_ = dt;
      ++steps_;
      check(w);
    }
  }

  void check(const GridField& w) const {
    for (double v : w.values)
      if (!std::isfinite(v)) throw NumericalError("solver: non-finite vorticity after step " + std::to_string(steps_));
    const double fr = w.frame_ratio();
    if (fr > cfg_.frame_limit)
      throw NumericalError("solver: frame contamination, outer-frame vorticity ratio " + std::to_string(fr) +
                           " above " + std::to_string(cfg_.frame_limit));
  }

  /// -div((u - Omega x^perp) w) + nu Lap w, band limited; returns max |u - Omega x^perp|.
  double tendency(const std::vector<double>& w, std::vector<double>& out) {
    const auto& g = cfg_.grid;
    const int n = g.n, half = plan_.half();
    const std::size_t nn = w.size(), ns = static_cast<std::size_t>(n) * half;
    bs_.apply(w.data(), u1_.data(), u2_.data());
    double umax = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * n + i;
        u1_[k] += cfg_.Omega * g.y(j);
        u2_[k] -= cfg_.Omega * g.x(i);
        umax = std::max(umax, std::hypot(u1_[k], u2_[k]));
      }
    auto* s = plan_.spectrum();
    std::copy(w.begin(), w.end(), plan_.real());
    plan_.forward();
    what_.assign(s, s + ns);
    for (std::size_t k = 0; k < nn; ++k) plan_.real()[k] = u1_[k] * w[k];
    plan_.forward();
    f1_.assign(s, s + ns);
    for (std::size_t k = 0; k < nn; ++k) plan_.real()[k] = u2_[k] * w[k];
    plan_.forward();
    const double norm = 1.0 / (static_cast<double>(n) * n);
    const fft::Complex I(0.0, 1.0);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < half; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * half + i;
        const double kx = kx_[i], ky = ky_[j];
        s[k] = mask_[k] * norm * (-I * (kx * f1_[k] + ky * s[k]) - cfg_.nu * (kx * kx + ky * ky) * what_[k]);
      }
    plan_.inverse();
    out.assign(plan_.real(), plan_.real() + nn);
    return umax;
  }

 private:
  SolverConfig cfg_;
  BiotSavart bs_;
  fft::Real2D plan_;
  std::vector<double> kx_, ky_, mask_, u1_, u2_;
  std::vector<fft::Complex> what_, f1_;
  std::size_t steps_ = 0;
  double last_dt_ = 0.0;
};

/// Runs from t_start to t_end, calling on_snapshot at t_start, every
/// snap_every and at t_end. The initial field is band limited first.
inline GridField run(const SolverConfig& cfg, GridField initial,
                     const std::function<void(double, const GridField&)>& on_snapshot) {
  cfg.validate();
  require(initial.grid == cfg.grid, "run: initial field grid does not match the config");
  initial.check_finite();
  const double fr = initial.frame_ratio();
  if (fr > cfg.frame_limit)
    throw PreconditionError("run: initial vorticity violates the frame-decay condition (ratio " + std::to_string(fr) + ")");
  ViscousSolver solver(cfg);
  solver.filter(initial);
  double t = cfg.t_start;
  if (on_snapshot) on_snapshot(t, initial);
  int k = 1;
  while (t < cfg.t_end) {
    const double next = cfg.snap_every > 0.0 ? std::min(cfg.t_start + k++ * cfg.snap_every, cfg.t_end) : cfg.t_end;
    solver.advance(initial, t, next);
    if (on_snapshot) on_snapshot(t, initial);
  }
  return initial;
}

inline std::vector<Snapshot> run(const SolverConfig& cfg, GridField initial) {
  std::vector<Snapshot> out;
  run(cfg, std::move(initial), [&](double t, const GridField& w) { out.push_back({t, w}); });
  return out;
}

/// Two Oseen vortices of age t_start at (+-d/2, 0).
inline GridField initial_pair(double alpha, double d, double nu, double t_start, GridSpec grid) {
  require(alpha > 0.0 && d > 0.0 && nu > 0.0 && t_start > 0.0, "initial_pair: need alpha, d, nu, t_start > 0");
  grid.validate();
  const double core = std::sqrt(nu * t_start);
  if (core < 4.0 * grid.h())
    throw PreconditionError("initial_pair: core sqrt(nu t_start) = " + std::to_string(core) +
                            " is under-resolved (need >= 4 grid spacings)");
  if (core > d / 8.0)
    throw PreconditionError("initial_pair: cores overlap (sqrt(nu t_start) must be <= d/8)");
  auto w = oseen_field(alpha, nu, t_start, {0.5 * d, 0.0}, grid);
  w += oseen_field(alpha, nu, t_start, {-0.5 * d, 0.0}, grid);
  return w;
}

/// Tensor 6-point Lagrange interpolation of a grid field; zero outside the box.
inline double interpolate(const GridField& f, Vec2 x) {
  const auto& g = f.grid;
  const int n = g.n;
  const double h = g.h();
  const double fx = (x[0] - g.center[0] + 0.5 * g.L) / h - 0.5;
  const double fy = (x[1] - g.center[1] + 0.5 * g.L) / h - 0.5;
  if (fx < -0.5 || fy < -0.5 || fx > n - 0.5 || fy > n - 0.5) return 0.0;
  auto weights = [n](double s, int& start, std::array<double, 6>& w) {
    start = std::clamp(static_cast<int>(std::floor(s)) - 2, 0, n - 6);
    for (int a = 0; a < 6; ++a) {
      double num = 1.0, den = 1.0;
      for (int b = 0; b < 6; ++b)
        if (b != a) {
          num *= s - (start + b);
          den *= static_cast<double>(a - b);
        }
      w[a] = num / den;
    }
  };
  int ix, iy;
  std::array<double, 6> wx, wy;
  weights(fx, ix, wx);
  weights(fy, iy, wy);
  double v = 0.0;
  for (int b = 0; b < 6; ++b) {
    double row = 0.0;
    for (int a = 0; a < 6; ++a) row += wx[a] * f.at(ix + a, iy + b);
    v += wy[b] * row;
  }
  return v;
}

/// g(y) = f(R(angle) y), rotation about the grid center.
inline GridField rotated(const GridField& f, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const Vec2 o = f.grid.center;
  return GridField::sample(f.grid, [&](Vec2 y) {
    const double a = y[0] - o[0], b = y[1] - o[1];
    return interpolate(f, Vec2{o[0] + c * a - s * b, o[1] + s * a + c * b});
  });
}

struct VortexProfilePair {
  GridField w1, w2;
};

/// w_i(xi) = (nu t/alpha) omega(x_i + sqrt(nu t) xi) restricted to the half-plane
/// of x_i, with x_1 = -x_2 = (d/2, 0). Both use the same xi orientation, so a
/// pi-symmetric pair gives w_2(xi) = w_1(-xi).
inline VortexProfilePair decompose(const GridField& field, double alpha, double nu, double t, double d,
                                   GridSpec xi_grid = {128, 16.0, {0.0, 0.0}}) {
  require(alpha > 0.0 && nu > 0.0 && t > 0.0 && d > 0.0, "decompose: need alpha, nu, t, d > 0");
  xi_grid.validate();
  const double s = std::sqrt(nu * t);
  if (s > d / 6.0) throw PreconditionError("decompose: cores not separated (sqrt(nu t) must be <= d/6)");
  const double scale = nu * t / alpha;
  auto profile = [&](double sign) {
    return GridField::sample(xi_grid, [&](Vec2 xi) {
      const Vec2 x{sign * 0.5 * d + s * xi[0], s * xi[1]};
      // cells cut by the splitting line keep the fraction on their own side
      const double frac = std::clamp(sign * x[0] / (s * xi_grid.h()) + 0.5, 0.0, 1.0);
      return frac > 0.0 ? frac * scale * interpolate(field, x) : 0.0;
    });
  };
  return {profile(1.0), profile(-1.0)};
}

/// The three normalized distances along a run.
struct ErrorMetrics {
  double t = 0.0;
  double tau = 0.0;   // nu t / d^2
  double thm1 = 0.0;  // (1/alpha) L1 distance to the Oseen superposition
  double app1 = 0.0;  // max_i ||w_i - w_app||_beta
  double app3 = 0.0;  // (1/alpha) L1 distance to the rescaled steady pair
};

struct MetricReferences {
  double alpha = 1.0;
  double nu = 1e-3;
  double d = 1.0;
  double beta = 1.0;
  GridSpec xi_grid{128, 16.0, {0.0, 0.0}};
  std::shared_ptr<const ViscousCorrection> F;          // app1 is skipped when null
  std::shared_ptr<const SteadyPairExpansion> steady;   // app3 is skipped when null
};

inline double l1_distance(const GridField& a, const GridField& b) {
  require(a.grid == b.grid, "l1_distance: grid mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) s += std::abs(a.values[k] - b.values[k]);
  return s * a.grid.h() * a.grid.h();
}

inline ErrorMetrics error_metrics(const GridField& field, double t, const MetricReferences& ref) {
  require(ref.alpha > 0.0 && ref.nu > 0.0 && ref.d > 0.0 && t > 0.0, "error_metrics: need alpha, nu, d, t > 0");
  if (ref.F) {
    const double mu = ref.nu / ref.alpha, mu_f = ref.F->nu / ref.F->alpha;
    require(std::abs(mu - mu_f) <= 1e-12 * mu, "error_metrics: F_nu was solved for a different nu/alpha");
  }
  ErrorMetrics m;
  m.t = t;
  m.tau = ref.nu * t / (ref.d * ref.d);
  const auto& g = field.grid;
  auto oseen = oseen_field(ref.alpha, ref.nu, t, {0.5 * ref.d, 0.0}, g);
  oseen += oseen_field(ref.alpha, ref.nu, t, {-0.5 * ref.d, 0.0}, g);
  m.thm1 = l1_distance(field, oseen) / ref.alpha;
  if (ref.F) {
    const auto pair = decompose(field, ref.alpha, ref.nu, t, ref.d, ref.xi_grid);
    const auto app = w_app(ref.nu, ref.alpha, ref.d, t, *ref.F).sample(ref.xi_grid);
    for (const auto* w : {&pair.w1, &pair.w2}) {
      GridField diff = *w;
      for (std::size_t k = 0; k < diff.values.size(); ++k) diff.values[k] -= app.values[k];
      m.app1 = std::max(m.app1, z_beta_norm(diff, ref.beta));
    }
  }
  if (ref.steady) {
    const auto ref_field = rescaled_pair_field(*ref.steady, ref.alpha, ref.d, std::sqrt(ref.nu * t), g);
    m.app3 = l1_distance(field, ref_field) / ref.alpha;
  }
  return m;
}

/// max |w(x) - w(-x)| over max |w| (pi-rotation about the grid center).
inline double rotation_asymmetry(const GridField& w) {
  const int n = w.n();
  double d = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) d = std::max(d, std::abs(w.at(i, j) - w.at(n - 1 - i, n - 1 - j)));
  const double m = w.max_abs();
  return m > 0.0 ? d / m : 0.0;
}

}  // namespace vplab
