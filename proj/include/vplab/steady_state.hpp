#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "vplab/biot_savart.hpp"
#include "vplab/errors.hpp"
#include "vplab/grid_field.hpp"
#include "vplab/linear_operator.hpp"
#include "vplab/radial_profile.hpp"

namespace vplab {

/// V(x, y) = (x+y)^perp/|x+y|^2 - y^perp/|y|^2.
inline Vec2 interaction_velocity(const Vec2& x, const Vec2& y) {
  const Vec2 z{x[0] + y[0], x[1] + y[1]};
  const double zz = z[0] * z[0] + z[1] * z[1], yy = y[0] * y[0] + y[1] * y[1];
  require(yy > 0.0, "interaction_velocity: y must be nonzero");
  require(zz > 0.0, "interaction_velocity: x + y must be nonzero");
  return {-z[1] / zz + y[1] / yy, z[0] / zz - y[0] / yy};
}

/// One cos-parity term a(r) cos(n th) of the expansion with its stream
/// function A(r) cos(n th), carried with the power d^-order.
struct ModeProfile {
  int n = 0;
  int order = 0;
  std::vector<double> a, da, A, dA;
};

/// Vorticity, its gradient, and the velocity of a sum of mode profiles.
struct FieldSample {
  double w = 0.0;
  Vec2 grad{0.0, 0.0};
  Vec2 u{0.0, 0.0};
};

namespace detail {

// Adds scale * (mode term) at polar point (r, cos th, sin th). `st` is the
// interpolation stencil at r, used only when r_min < r < r_max.
inline void add_mode(const RadialGrid& grid, const RadialGrid::Stencil& st, const ModeProfile& m, double scale,
                     double r, double c, double s, bool with_vorticity, FieldSample& out) {
  const int n = m.n;
  double a = 0.0, da = 0.0, A, dA;
  if (r >= grid.r_max()) {
    // the vorticity is negligible out here; the stream is purely harmonic
    A = m.A.back() * std::pow(grid.r_max() / r, n);
    dA = -n * A / r;
  } else if (r <= grid.r_min()) {
    const double f = std::pow(r / grid.r_min(), n);
    a = m.a.front() * f;
    da = n * a / r;
    A = m.A.front() * f;
    dA = n * A / r;
  } else {
    if (with_vorticity) {
      a = st.apply(m.a);
      da = st.apply(m.da);
    }
    A = st.apply(m.A);
    dA = st.apply(m.dA);
  }
  // cos(n th), sin(n th) from (c + i s)^n
  std::complex<double> z(c, s), zn(1.0, 0.0);
  for (int k = 0; k < n; ++k) zn *= z;
  const double cn = zn.real(), sn = zn.imag();
  // grad = a' cos e_r - (n/r) a sin e_th ; u = -(n/r) A sin e_r - A' cos e_th
  const double ur = -n * A * sn / r, ut = -dA * cn;
  out.u[0] += scale * (ur * c - ut * s);
  out.u[1] += scale * (ur * s + ut * c);
  if (with_vorticity) {
    const double gr = da * cn, gt = -n * a * sn / r;
    out.w += scale * a * cn;
    out.grad[0] += scale * (gr * c - gt * s);
    out.grad[1] += scale * (gr * s + gt * c);
  }
}

}  // namespace detail

/// a' for a mode table, split as a = (g/phi) A + h: the first part uses the
/// analytic (g/phi)' and the stream derivative A', only h is differenced.
inline std::vector<double> mode_derivative(const LambdaOperator& op, std::span<const double> a,
                                           const StreamSector& S) {
  const auto& grid = *op.grid();
  const std::size_t m = grid.size();
  std::vector<double> h(m);
  for (std::size_t i = 0; i < m; ++i) h[i] = a[i] - op.g_over_phi()[i] * S.A[i];
  const auto dh = grid.derivative(h);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i)
    out[i] = op.profile().d_g_over_phi(grid.r(i)) * S.A[i] + op.g_over_phi()[i] * S.dA[i] + dh[i];
  return out;
}

inline ModeProfile make_mode_profile(const LambdaOperator& op, int order, const SectorFunction& w) {
  for (double s : w.sin_coeff) require(s == 0.0, "mode profile: expected cos parity");
  const auto S = op.poisson(w.n, w.cos_coeff);
  return {w.n, order, w.cos_coeff, mode_derivative(op, w.cos_coeff, S), S.A, S.dA};
}

/// Sources and solution of the order-four problem.
struct OrderFour {
  SectorFunction mode4, mode2;
  std::vector<double> B1, B2, B, C;
};

/// The right-hand side f = Lambda w^(n) for n = 2, 3: -(g/2pi)(-1)^n r^n sin(n th).
inline SectorFunction order_rhs(const LambdaOperator& op, int n) {
  const double sign = (n % 2 == 0) ? -1.0 : 1.0;
  std::vector<double> b(op.grid()->size());
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = sign * std::pow(op.grid()->r(i), n) * op.g()[i] / (2.0 * std::numbers::pi);
  return SectorFunction::sine(n, op.grid(), std::move(b));
}

/// Inverts Lambda w = f and checks the residual ||Lambda w - f|| <= 1e-6 ||f||.
inline SectorFunction solve_order(const LambdaOperator& op, const SectorFunction& f) {
  auto w = op.invert(f);
  const double nf = op.norm(f);
  if (nf > 0.0) {
    const double res = op.norm(op.apply(w) - f) / nf;
    if (!(res <= 1e-6)) throw NumericalError("solve_order: residual " + std::to_string(res) + " above 1e-6");
  }
  return w;
}

inline std::pair<SectorFunction, SectorFunction> build_orders_2_3(const LambdaOperator& op) {
  return {solve_order(op, order_rhs(op, 2)), solve_order(op, order_rhs(op, 3))};
}

/// Lambda w4 + B sin(4 th) + C sin(2 th) = 0 with
/// B = (A2' a2 - A2 a2')/r + (2 a2 - r a2')/(4 pi) + r^4 g/(2 pi), C = 2 a2/pi.
/// a2' defaults to mode_derivative; pass `da2` to override.
inline OrderFour build_order_4(const LambdaOperator& op, const SectorFunction& omega2,
                               std::span<const double> da2_override = {}) {
  require(omega2.n == 2, "build_order_4: omega2 must be mode 2");
  for (double s : omega2.sin_coeff) require(s == 0.0, "build_order_4: omega2 must have cos parity");
  const auto& grid = *op.grid();
  const std::size_t m = grid.size();
  const auto& a2 = omega2.cos_coeff;
  const auto S = op.poisson(2, a2);
  const auto da2 = da2_override.empty() ? mode_derivative(op, a2, S)
                                        : std::vector<double>(da2_override.begin(), da2_override.end());
  OrderFour out;
  out.B1.resize(m);
  out.B2.resize(m);
  out.B.resize(m);
  out.C.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = grid.r(i);
    out.B1[i] = (S.dA[i] * a2[i] - S.A[i] * da2[i]) / r;
    out.B2[i] = (2.0 * a2[i] - r * da2[i]) / (4.0 * std::numbers::pi);
    out.B[i] = out.B1[i] + out.B2[i] + std::pow(r, 4) * op.g()[i] / (2.0 * std::numbers::pi);
    out.C[i] = 2.0 * a2[i] / std::numbers::pi;
  }
  auto negate = [](std::vector<double> v) {
    for (double& x : v) x = -x;
    return v;
  };
  out.mode4 = solve_order(op, SectorFunction::sine(4, op.grid(), negate(out.B)));
  out.mode2 = solve_order(op, SectorFunction::sine(2, op.grid(), negate(out.C)));
  return out;
}

/// w = w* + sum d^-k w^(k) around one vortex, with the partner reflected
/// through the origin at -x - 2 x_d.
struct SteadyPairExpansion {
  std::shared_ptr<const LambdaOperator> op;
  SectorFunction omega2, omega3;
  OrderFour omega4;
  std::vector<ModeProfile> modes;
  double d = 0.0;
  double alpha = 1.0;
  int max_order = 4;  // 0 keeps w* only

  const RadialProfile& profile() const { return op->profile(); }
  const RadialGrid& grid() const { return *op->grid(); }

  SteadyPairExpansion with_distance(double dist) const {
    require(dist > 0.0, "expansion: d must be positive");
    auto e = *this;
    e.d = dist;
    return e;
  }
  SteadyPairExpansion truncated(int order) const {
    auto e = *this;
    e.max_order = order;
    return e;
  }

  /// Local field at x relative to this vortex center; with_vorticity = false
  /// fills only the velocity.
  FieldSample local(const Vec2& x, bool with_vorticity = true) const {
    FieldSample s;
    const auto& prof = profile();
    if (with_vorticity) {
      s.w = prof.w_star(x);
      s.grad = prof.grad_w_star(x);
    }
    s.u = prof.v_star(x);
    const double r = std::hypot(x[0], x[1]);
    if (r < 1e-300 || max_order < 2) return s;
    const auto& g = grid();
    const RadialGrid::Stencil st = (r > g.r_min() && r < g.r_max()) ? g.stencil(r) : RadialGrid::Stencil{};
    for (const auto& m : modes)
      if (m.order <= max_order)
        detail::add_mode(g, st, m, std::pow(d, -m.order), r, x[0] / r, x[1] / r, with_vorticity, s);
    return s;
  }
};

inline SteadyPairExpansion build_expansion(std::shared_ptr<const LambdaOperator> op, double d, double alpha = 1.0) {
  require(op != nullptr, "build_expansion: null operator");
  require(d > 0.0 && alpha > 0.0, "build_expansion: need d > 0 and alpha > 0");
  SteadyPairExpansion e;
  e.op = op;
  e.d = d;
  e.alpha = alpha;
  std::tie(e.omega2, e.omega3) = build_orders_2_3(*op);
  e.omega4 = build_order_4(*op, e.omega2);
  e.modes = {make_mode_profile(*op, 2, e.omega2), make_mode_profile(*op, 3, e.omega3),
             make_mode_profile(*op, 4, e.omega4.mode4), make_mode_profile(*op, 4, e.omega4.mode2)};
  return e;
}

inline SteadyPairExpansion build_expansion(const RadialProfile& profile, double d, double alpha = 1.0) {
  return build_expansion(std::make_shared<const LambdaOperator>(profile), d, alpha);
}

/// (w(x), v(x)) of the half-plane profile.
inline std::pair<double, Vec2> assemble_half_plane(const SteadyPairExpansion& e, const Vec2& x) {
  const auto s = e.local(x);
  return {s.w, s.u};
}

/// Calls f(r_index, r, theta, x, weight) on the polar quadrature grid:
/// radial nodes times n_theta equispaced angles.
template <class F>
void for_each_polar(const RadialGrid& grid, int n_theta, F&& f) {
  const double dth = 2.0 * std::numbers::pi / n_theta;
  const auto w = grid.weights();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    for (int k = 0; k < n_theta; ++k) {
      const double th = k * dth;
      f(i, r, th, Vec2{r * std::cos(th), r * std::sin(th)}, w[i] * dth);
    }
  }
}

struct RotationRate {
  double omega = 0.0;  // Omega tilde
  double defect = 0.0;  // |Omega tilde pi d^2 - 1|
};

/// Omega~ = -(2/d) int v2(-x - 2x_d) w(x) dx by polar quadrature over the core.
inline RotationRate rotation_rate(const SteadyPairExpansion& e, int n_theta = 256) {
  require(e.d > 0.0, "rotation_rate: d must be positive");
  const auto& grid = e.grid();
  const double rm = grid.r_max();
  const double tail = 1.0 - e.profile().Q(rm * rm);
  if (tail > 1e-10)
    throw PreconditionError("rotation_rate: core not resolved, vorticity beyond r = " + std::to_string(rm) +
                            " carries " + std::to_string(tail) + " of the circulation");
  double sum = 0.0;
  for_each_polar(grid, n_theta, [&](std::size_t, double, double, const Vec2& x, double wt) {
    const auto here = e.local(x);
    const auto there = e.local({-x[0] - e.d, -x[1]}, false);
    sum += wt * there.u[1] * here.w;
  });
  RotationRate out;
  out.omega = -2.0 / e.d * sum;
  out.defect = std::abs(out.omega * std::numbers::pi * e.d * e.d - 1.0);
  return out;
}

inline RotationRate rotation_rate(const RadialProfile& profile, double d, int n_theta = 256) {
  SteadyPairExpansion e;
  e.op = std::make_shared<const LambdaOperator>(profile);
  e.d = d;
  e.max_order = 0;
  return rotation_rate(e, n_theta);
}

/// (v(x) - v(-x - 2x_d) - Omega~ (x + x_d)^perp) . grad w(x), with the partner
/// velocity evaluated exactly rather than by its series.
inline double residual(const SteadyPairExpansion& e, const Vec2& x, double omega_tilde) {
  const auto here = e.local(x);
  const auto there = e.local({-x[0] - e.d, -x[1]}, false);
  const Vec2 rot = perp(Vec2{x[0] + 0.5 * e.d, x[1]});
  return (here.u[0] - there.u[0] - omega_tilde * rot[0]) * here.grad[0] +
         (here.u[1] - there.u[1] - omega_tilde * rot[1]) * here.grad[1];
}

struct ResidualReport {
  double d = 0.0;
  double omega_tilde = 0.0;
  double x_norm = 0.0;
  double sup = 0.0;
};

inline ResidualReport residual_report(const SteadyPairExpansion& e, int n_theta = 256) {
  ResidualReport rep;
  rep.d = e.d;
  rep.omega_tilde = rotation_rate(e, n_theta).omega;
  const auto& grid = e.grid();
  std::vector<double> p(grid.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = e.op->weight()[i];
  double sum = 0.0;
  for_each_polar(grid, n_theta, [&](std::size_t i, double, double, const Vec2& x, double wt) {
    const double v = residual(e, x, rep.omega_tilde);
    sum += wt * p[i] * v * v;
    rep.sup = std::max(rep.sup, std::abs(v));
  });
  rep.x_norm = std::sqrt(sum);
  return rep;
}

/// Sign of the mode-2 sine part of the directly evaluated R_d (the residual of
/// w* alone) relative to the source -Lambda w^(2) = (g/2pi) r^2 sin 2th:
/// +1 when they agree, -1 when flipped.
inline int source_sign(const SteadyPairExpansion& e, int n_theta = 256) {
  const auto& grid = e.grid();
  const auto bare = e.truncated(0);
  const double om0 = rotation_rate(bare, n_theta).omega;
  const auto src = order_rhs(*e.op, 2);
  double proj = 0.0, ref = 0.0;
  for_each_polar(grid, n_theta, [&](std::size_t i, double, double th, const Vec2& x, double wt) {
    const double s2 = std::sin(2.0 * th), p = e.op->weight()[i];
    proj += wt * p * residual(bare, x, om0) * s2;
    ref += wt * p * (-src.sin_coeff[i]) * s2 * s2;
  });
  return proj * ref > 0.0 ? 1 : -1;
}

/// Angular projection of F(x) onto cos(n th) and sin(n th) at every radial node.
template <class F>
SectorFunction project_mode(const LambdaOperator& op, int n, F&& f, int n_theta = 256) {
  const auto& grid = *op.grid();
  SectorFunction out(n, op.grid());
  const double dth = 2.0 * std::numbers::pi / n_theta;
  const double norm = (n == 0 ? 1.0 : 2.0) / n_theta;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    double c = 0.0, s = 0.0;
    for (int k = 0; k < n_theta; ++k) {
      const double th = k * dth;
      const double v = f(Vec2{r * std::cos(th), r * std::sin(th)});
      c += v * std::cos(n * th);
      s += v * std::sin(n * th);
    }
    out.cos_coeff[i] = norm * c;
    out.sin_coeff[i] = n == 0 ? 0.0 : norm * s;
  }
  return out;
}

/// omega_eps(x) = (alpha/eps^2) [w_eps((x - x_d)/eps) + w_eps((-x - x_d)/eps)],
/// where w_eps uses the expansion at separation d/eps.
inline GridField rescaled_pair_field(const SteadyPairExpansion& e, double alpha, double d, double eps,
                                     GridSpec grid) {
  require(alpha > 0.0 && d > 0.0 && eps > 0.0, "rescaled_pair_field: need alpha, d, eps > 0");
  require(eps < d / 4.0, "rescaled_pair_field: cores overlap (need eps < d/4)");
  const auto we = e.with_distance(d / eps);
  const double amp = alpha / (eps * eps);
  return GridField::sample(grid, [&](Vec2 x) {
    const Vec2 y1{(x[0] - 0.5 * d) / eps, x[1] / eps}, y2{(-x[0] - 0.5 * d) / eps, -x[1] / eps};
    return amp * (we.local(y1).w + we.local(y2).w);
  });
}

/// (u_eps - Omega x^perp) . grad omega_eps on the grid, with u_eps from the
/// grid Biot-Savart solve of omega_eps and Omega = alpha/(pi d^2).
inline GridField rescaled_pair_defect(const SteadyPairExpansion& e, double alpha, double d, double eps,
                                      GridSpec grid) {
  const auto field = rescaled_pair_field(e, alpha, d, eps, grid);
  BiotSavart bs(grid);
  const auto vel = bs.solve(field);
  const auto we = e.with_distance(d / eps);
  const double Omega = alpha / (std::numbers::pi * d * d);
  const double amp = alpha / (eps * eps * eps);
  GridField out(grid);
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i) {
      const Vec2 x{grid.x(i), grid.y(j)};
      const Vec2 y1{(x[0] - 0.5 * d) / eps, x[1] / eps}, y2{(-x[0] - 0.5 * d) / eps, -x[1] / eps};
      const auto g1 = we.local(y1).grad, g2 = we.local(y2).grad;
      const Vec2 gw{amp * (g1[0] - g2[0]), amp * (g1[1] - g2[1])};
      const double u1 = vel.u1.at(i, j) + Omega * x[1], u2 = vel.u2.at(i, j) - Omega * x[0];
      out.at(i, j) = u1 * gw[0] + u2 * gw[1];
    }
  return out;
}

}  // namespace vplab
