#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "vplab/grid_field.hpp"
#include "vplab/linear_operator.hpp"
#include "vplab/steady_state.hpp"

namespace vplab {

/// Solution of (nu/alpha)(1 - L)F + Lambda F + A = 0 in mode 2, with
/// L = Delta + xi.grad/2 + 1 and A = (1/2pi) r^2 g sin(2 theta).
struct ViscousCorrection {
  double nu = 0.0;
  double alpha = 1.0;
  SectorFunction F;
  double residual = 0.0;  // normwise backward error of the dense solve
  double rcond = 0.0;     // reciprocal condition estimate after row scaling
};

namespace detail {

/// Dense matrix of a linear map on grid tables, column by column.
template <class Map>
Eigen::MatrixXd table_matrix(std::size_t m, Map&& map) {
  Eigen::MatrixXd out(m, m);
  std::vector<double> e(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    e[j] = 1.0;
    const std::vector<double> col = map(std::span<const double>(e));
    for (std::size_t i = 0; i < m; ++i) out(i, j) = col[i];
    e[j] = 0.0;
  }
  return out;
}

}  // namespace detail

/// 1 - L in mode n: -(f'' + f'/r - n^2 f/r^2 + r f'/2); the +1 of L cancels.
inline Eigen::MatrixXd one_minus_L_matrix(const RadialGrid& grid, int n) {
  const std::size_t m = grid.size();
  const auto d1 = detail::table_matrix(m, [&](std::span<const double> f) { return grid.derivative(f); });
  const auto d2 = detail::table_matrix(m, [&](std::span<const double> f) { return grid.second_derivative(f); });
  Eigen::MatrixXd out = -d2;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = grid.r(i);
    out.row(i) -= (1.0 / r + 0.5 * r) * d1.row(i);
    out(i, i) += static_cast<double>(n * n) / (r * r);
  }
  return out;
}

/// (1/2pi) r^2 g(r) sin(2 theta).
inline SectorFunction fp_source(const LambdaOperator& op) {
  const auto& grid = *op.grid();
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = grid.r(i) * grid.r(i) * op.g()[i] / (2.0 * std::numbers::pi);
  return SectorFunction::sine(2, op.grid(), std::move(s));
}

/// Stacked (cos, sin) system. Lambda enters as the off-diagonal block
/// K = 2 (phi - g P) with P the mode-2 Poisson map; for nu > 0 the end nodes
/// carry homogeneous Dirichlet rows.
inline ViscousCorrection solve_F_nu(const LambdaOperator& op, double nu, double alpha, const SectorFunction& A) {
  require(nu >= 0.0 && std::isfinite(nu), "solve_F_nu: nu must be non-negative");
  require(alpha > 0.0 && std::isfinite(alpha), "solve_F_nu: alpha must be positive");
  require(op.profile().name() == "gaussian", "solve_F_nu: the profile must be the Gaussian");
  op.check_grid(A);
  require(A.n == 2, "solve_F_nu: source must be mode 2");

  const auto& grid = *op.grid();
  const std::size_t m = grid.size();
  const double mu = nu / alpha;

  Eigen::MatrixXd K =
      -2.0 * detail::table_matrix(m, [&](std::span<const double> a) { return op.poisson(2, a).A; });
  for (std::size_t i = 0; i < m; ++i) {
    K.row(i) *= op.g()[i];
    K(i, i) += 2.0 * op.phi()[i];
  }

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  S.topRightCorner(m, m) = K;
  S.bottomLeftCorner(m, m) = -K;
  Eigen::VectorXd b(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    b(i) = -A.cos_coeff[i];
    b(m + i) = -A.sin_coeff[i];
  }
  if (mu > 0.0) {
    const Eigen::MatrixXd D = mu * one_minus_L_matrix(grid, 2);
    S.topLeftCorner(m, m) = D;
    S.bottomRightCorner(m, m) = D;
    for (std::size_t k : {std::size_t{0}, m - 1, m, 2 * m - 1}) {
      S.row(k).setZero();
      S(k, k) = 1.0;
      b(k) = 0.0;
    }
  }

  Eigen::VectorXd scale = S.rowwise().lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < scale.size(); ++i) scale(i) = scale(i) > 0.0 ? 1.0 / scale(i) : 1.0;
  const Eigen::MatrixXd Ss = scale.asDiagonal() * S;
  const Eigen::VectorXd bs = scale.asDiagonal() * b;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Ss);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15))
    throw NumericalError("solve_F_nu: singular discrete system (rcond " + std::to_string(rcond) + ")");
  Eigen::VectorXd x = lu.solve(bs);
  x += lu.solve(bs - Ss * x);
  if (!x.allFinite()) throw NumericalError("solve_F_nu: non-finite solution");

  const double denom = Ss.lpNorm<Eigen::Infinity>() * x.lpNorm<Eigen::Infinity>() + bs.lpNorm<Eigen::Infinity>();
  const double res = denom > 0.0 ? (Ss * x - bs).lpNorm<Eigen::Infinity>() / denom : 0.0;
  if (res > 1e-8) throw NumericalError("solve_F_nu: residual " + std::to_string(res) + " above 1e-8");

  ViscousCorrection out{nu, alpha, SectorFunction(2, op.grid()), res, rcond};
  for (std::size_t i = 0; i < m; ++i) {
    out.F.cos_coeff[i] = x(i);
    out.F.sin_coeff[i] = x(m + i);
  }
  return out;
}

inline ViscousCorrection solve_F_nu(const LambdaOperator& op, double nu, double alpha) {
  return solve_F_nu(op, nu, alpha, fp_source(op));
}

/// G + tau F with tau = nu t / d^2, evaluated in the self-similar variable xi.
struct ApproxProfile {
  double tau = 0.0;
  SectorFunction F;

  double operator()(Vec2 xi) const {
    const double r = std::hypot(xi[0], xi[1]);
    const double G = std::exp(-0.25 * r * r) / (4.0 * std::numbers::pi);
    return tau == 0.0 ? G : G + tau * F.eval(r, std::atan2(xi[1], xi[0]));
  }
  GridField sample(GridSpec g) const { return GridField::sample(g, *this); }
};

inline ApproxProfile w_app(double nu, double alpha, double d, double t, const ViscousCorrection& F) {
  require(t > 0.0, "w_app: t must be positive");
  require(nu >= 0.0 && alpha > 0.0 && d > 0.0, "w_app: need nu >= 0, alpha > 0, d > 0");
  return {nu * t / (d * d), F.F};
}

/// (int |f|^2 e^{beta |xi - c|} dxi)^{1/2} by the midpoint rule on the grid.
inline double z_beta_norm(const GridField& f, double beta) {
  require(beta > 0.0 && std::isfinite(beta), "z_beta_norm: beta must be positive");
  const auto& g = f.grid;
  const int n = g.n;
  const int w = std::max(1, n / 20);
  double sum = 0.0, outer = 0.0, band = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = f.at(i, j);
      const double e = v * v * std::exp(beta * std::hypot(g.x(i) - g.center[0], g.y(j) - g.center[1]));
      sum += e;
      const int edge = std::min({i, j, n - 1 - i, n - 1 - j});
      if (edge < w)
        outer = std::max(outer, e);
      else if (edge < 2 * w)
        band = std::max(band, e);
    }
  if (!std::isfinite(sum)) throw NumericalError("z_beta_norm: non-finite integrand");
  if (outer > 0.0 && outer >= band) throw NumericalError("z_beta_norm: divergent tail (weighted integrand not decaying)");
  return std::sqrt(sum * g.h() * g.h());
}

}  // namespace vplab
