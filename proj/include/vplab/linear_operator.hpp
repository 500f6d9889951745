#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vplab/errors.hpp"
#include "vplab/ode.hpp"
#include "vplab/radial_grid.hpp"
#include "vplab/radial_profile.hpp"
#include "vplab/sector.hpp"

namespace vplab {

/// Regular solutions of -psi'' - psi'/r + (n^2/r^2 - g/phi) psi = 0.
struct HomogeneousSolutions {
  int n = 0;
  std::vector<double> psi_minus, dpsi_minus;  // ~ r^n at 0
  std::vector<double> psi_plus, dpsi_plus;    // ~ r^-n at infinity
  std::vector<double> rescaled_wronskian;     // r W / (2n), W = psi_-' psi_+ - psi_- psi_+'
  double kappa = 0.0;
};

namespace detail {

// psi'' = (n2 - U(r)) psi in rho = ln r, sampled at every grid node.
template <class U>
void integrate_radial(const RadialGrid& grid, double n2, U potential, double r_start, std::vector<double> seed,
                      bool outward, std::vector<double>& psi, std::vector<double>& dpsi, double atol = 1e-300) {
  const std::size_t m = grid.size();
  auto rhs = [&potential, n2](const std::vector<double>& y, std::vector<double>& dy, double rho) {
    const double r = std::exp(rho);
    dy[0] = y[1];
    dy[1] = (n2 - potential(r)) * y[0];
  };
  psi.assign(m, 0.0);
  dpsi.assign(m, 0.0);
  std::vector<double> y = std::move(seed);
  double rho = std::log(r_start);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = outward ? k : m - 1 - k;
    const double r = grid.r(i);
    if (k > 0) {
      integrate_steps(rhs, y, rho, std::log(r), atol, 1e-13, [](double, const auto&, const auto&) {});
      rho = std::log(r);
    }
    psi[i] = y[0];
    dpsi[i] = y[1] / r;
  }
}

}  // namespace detail

/// Homogeneous solutions for the potential n^2/r^2 - U(r)/r^2, where
/// U = r^2 g/phi and U(r) ~ u0 r^2 near the origin. psi_- is integrated outward
/// from the first node with seed r^n (1 - u0 r^2/(4n+4)), psi_+ inward from
/// r_max with seed r^-n; kappa is r W/(2n) at mid-grid.
template <class U>
HomogeneousSolutions solve_homogeneous(int n, U potential, double u0, const RadialGrid& grid) {
  require(n >= 1, "homogeneous_solutions: mode must be positive");
  HomogeneousSolutions hs;
  hs.n = n;
  const double r0 = grid.r_min(), r1 = grid.r_max();
  const double c = -u0 / (4.0 * n + 4.0);
  const double rn = std::pow(r0, n);
  detail::integrate_radial(grid, double(n * n), potential, r0, {rn * (1 + c * r0 * r0), rn * (n + c * (n + 2) * r0 * r0)},
                           true, hs.psi_minus, hs.dpsi_minus);
  const double rm = std::pow(r1, -n);
  detail::integrate_radial(grid, double(n * n), potential, r1, {rm, -n * rm}, false, hs.psi_plus, hs.dpsi_plus);
  const std::size_t m = grid.size();
  hs.rescaled_wronskian.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = grid.r(i);
    hs.rescaled_wronskian[i] = r * (hs.dpsi_minus[i] * hs.psi_plus[i] - hs.psi_minus[i] * hs.dpsi_plus[i]) / (2.0 * n);
  }
  hs.kappa = hs.rescaled_wronskian[m / 2];
  require(hs.kappa > 0.0, "homogeneous_solutions: non-positive Wronskian");
  return hs;
}

/// Result of solving n(phi a - g A[a]) = b for one parity.
struct RadialSolution {
  std::vector<double> a;
  std::vector<double> A;
  std::vector<double> dA;
};

/// The linearized operator around w* acting sector by sector on a radial grid.
///
/// For w = c(r) cos(n th) + s(r) sin(n th), Lambda w has cosine coefficient
/// L[s] and sine coefficient -L[c], with L[a] = n (phi a - g A_n[a]) and A_n
/// the stream coefficient of a.
class LambdaOperator {
 public:
  LambdaOperator(RadialProfile profile, GridPtr grid) : profile_(std::move(profile)), grid_(std::move(grid)) {
    require(grid_ != nullptr, "LambdaOperator: null grid");
    const std::size_t m = grid_->size();
    phi_.resize(m);
    g_.resize(m);
    p_.resize(m);
    gphi_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double r = grid_->r(i);
      phi_[i] = profile_.phi(r);
      g_[i] = profile_.g(r);
      p_[i] = profile_.p(r * r);
      gphi_[i] = profile_.g_over_phi(r);
    }
  }

  explicit LambdaOperator(RadialProfile profile)
      : LambdaOperator(std::move(profile), std::make_shared<RadialGrid>()) {}

  const RadialProfile& profile() const { return profile_; }
  const GridPtr& grid() const { return grid_; }
  std::span<const double> phi() const { return phi_; }
  std::span<const double> g() const { return g_; }
  /// p(r^2) at the nodes, the weight of X.
  std::span<const double> weight() const { return p_; }
  std::span<const double> g_over_phi() const { return gphi_; }

  SectorFunction zero(int n) const { return SectorFunction(n, grid_); }

  /// pi * int (a_f a_g + b_f b_g) p(r^2) r dr, 2 pi for n = 0.
  double inner(const SectorFunction& f, const SectorFunction& h) const {
    require(f.n == h.n, "inner_product_X: mode mismatch");
    check_grid(f);
    check_grid(h);
    const auto w = grid_->weights();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      s += w[i] * p_[i] * (f.cos_coeff[i] * h.cos_coeff[i] + f.sin_coeff[i] * h.sin_coeff[i]);
    return (f.n == 0 ? 2.0 : 1.0) * std::numbers::pi * s;
  }

  double norm(const SectorFunction& f) const { return std::sqrt(inner(f, f)); }

  /// A_n = (1/2n) [ r^-n int_0^r s^{n+1} a + r^n int_r^inf s^{1-n} a ].
  StreamSector poisson(int n, std::span<const double> a) const {
    require(n >= 1, "poisson_sector: mode 0 is unsupported (stream normalization ambiguous)");
    const std::size_t m = grid_->size();
    require(a.size() == m, "poisson_sector: table size does not match the grid");
    std::vector<double> f1(m), f2(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double r = grid_->r(i);
      f1[i] = std::pow(r, n + 1) * a[i];
      f2[i] = std::pow(r, 1 - n) * a[i];
    }
    const auto c1 = grid_->cumulative(f1, 2.0 * n + 1.0);
    const auto c2 = grid_->cumulative_tail(f2);
    StreamSector out{n, std::vector<double>(m), std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
      const double r = grid_->r(i);
      const double rn = std::pow(r, n);
      out.A[i] = (c1[i] / rn + rn * c2[i]) / (2.0 * n);
      out.dA[i] = 0.5 * (-c1[i] / (rn * r) + rn / r * c2[i]);
    }
    return out;
  }

  /// n (phi a - g A_n[a]).
  std::vector<double> L(int n, std::span<const double> a) const {
    std::vector<double> out(a.size(), 0.0);
    if (n == 0) return out;
    const auto A = poisson(n, a).A;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = n * (phi_[i] * a[i] - g_[i] * A[i]);
    return out;
  }

  SectorFunction apply(const SectorFunction& f) const {
    check_grid(f);
    SectorFunction out(f.n, grid_);
    if (f.n == 0) return out;
    out.cos_coeff = L(f.n, f.sin_coeff);
    const auto c = L(f.n, f.cos_coeff);
    for (std::size_t i = 0; i < c.size(); ++i) out.sin_coeff[i] = -c[i];
    return out;
  }

  /// psi_- is integrated outward from the first node, psi_+ inward from r_max,
  /// both in rho = ln r.
  const HomogeneousSolutions& homogeneous(int n) const {
    require(n >= 2, "homogeneous_solutions: modes n <= 1 are unsupported (kernel obstruction)");
    std::lock_guard lock(cache_mutex_);
    auto it = homogeneous_.find(n);
    if (it != homogeneous_.end()) return *it->second;
    auto hs = std::make_unique<HomogeneousSolutions>(solve_homogeneous(
        n, [this](double r) { return r * r * profile_.g_over_phi(r); }, profile_.g_over_phi(0.0), *grid_));
    return *homogeneous_.emplace(n, std::move(hs)).first->second;
  }

  /// Solves L[a] = b for n >= 2 by the Green's representation.
  RadialSolution L_inverse(int n, std::span<const double> b) const {
    const auto& hs = homogeneous(n);
    const std::size_t m = grid_->size();
    require(b.size() == m, "invert_lambda: table size does not match the grid");
    std::vector<double> h(m), f1(m), f2(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double r = grid_->r(i);
      h[i] = b[i] / (n * phi_[i]);
      f1[i] = hs.psi_minus[i] * h[i] * r;
      f2[i] = hs.psi_plus[i] * h[i] * r;
    }
    const auto i1 = grid_->cumulative(f1, 2.0 * n + 1.0);
    const auto i2 = grid_->cumulative_tail(f2);
    const double c = 1.0 / (2.0 * n * hs.kappa);
    RadialSolution out{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
      out.A[i] = c * (hs.psi_plus[i] * i1[i] + hs.psi_minus[i] * i2[i]);
      out.dA[i] = c * (hs.dpsi_plus[i] * i1[i] + hs.dpsi_minus[i] * i2[i]);
      out.a[i] = gphi_[i] * out.A[i] + h[i];
    }
    return out;
  }

  /// Right inverse on modes n >= 2: cos input b_c gives sine output, sin input
  /// b_s gives cosine output -L^{-1} b_s.
  SectorFunction invert(const SectorFunction& f) const {
    check_grid(f);
    require(f.n >= 2, "invert_lambda: modes n <= 1 are unsupported (kernel obstruction)");
    check_Y(f);
    SectorFunction out(f.n, grid_);
    out.sin_coeff = L_inverse(f.n, f.cos_coeff).a;
    const auto c = L_inverse(f.n, f.sin_coeff).a;
    for (std::size_t i = 0; i < c.size(); ++i) out.cos_coeff[i] = -c[i];
    return out;
  }

  /// The kernel element a_1 = r g(r) (cos parity gives -d1 w*, sin parity -d2 w*).
  std::vector<double> kernel_table() const {
    std::vector<double> k(grid_->size());
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = grid_->r(i) * g_[i];
    return k;
  }

  /// Mode-1 inverse on Ker(Lambda)^perp for f orthogonal to the kernel.
  SectorFunction invert_mode1(const SectorFunction& f) const {
    check_grid(f);
    require(f.n == 1, "invert_lambda_mode1: mode must be 1");
    const auto k = kernel_table();
    const SectorFunction kc = SectorFunction::cosine(1, grid_, k), ks = SectorFunction::sine(1, grid_, k);
    const double nf = norm(f), nk = norm(kc);
    if (nf > 0.0) {
      const double oc = inner(f, kc), os = inner(f, ks);
      if (std::abs(oc) > 1e-8 * nf * nk || std::abs(os) > 1e-8 * nf * nk)
        throw PreconditionError("invert_lambda_mode1: input is not orthogonal to the kernel (relative overlap " +
                                std::to_string(std::max(std::abs(oc), std::abs(os)) / (nf * nk)) + ")");
    }
    check_Y(f);
    SectorFunction out(1, grid_);
    out.sin_coeff = mode1_solve(f.cos_coeff).a;
    const auto c = mode1_solve(f.sin_coeff).a;
    for (std::size_t i = 0; i < c.size(); ++i) out.cos_coeff[i] = -c[i];
    return out;
  }

  /// Solves L[a] = b in mode 1 with int a r^2 dr = 0; the kernel component
  /// of b is projected out first.
  RadialSolution mode1_solve(std::span<const double> b_in) const {
    const std::size_t m = grid_->size();
    const auto k = kernel_table();
    std::vector<double> b(b_in.begin(), b_in.end());
    {
      const auto w = grid_->weights();
      double bk = 0.0, kk = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        bk += w[i] * p_[i] * b[i] * k[i];
        kk += w[i] * p_[i] * k[i] * k[i];
      }
      for (std::size_t i = 0; i < m; ++i) b[i] -= bk / kk * k[i];
    }
    const auto& u2 = mode1_second_solution();
    std::vector<double> h(m), f1(m), f2(m), u1(m), du1(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double r = grid_->r(i);
      h[i] = b[i] / phi_[i];
      u1[i] = r * phi_[i];
      du1[i] = phi_[i] + r * profile_.dphi(r);
      f1[i] = u1[i] * h[i] * r;
      f2[i] = u2.psi_plus[i] * h[i] * r;
    }
    // C = r (u1 u2' - u1' u2), constant
    const std::size_t ic = m / 4;
    const double C = grid_->r(ic) * (u1[ic] * u2.dpsi_plus[ic] - du1[ic] * u2.psi_plus[ic]);
    const auto i1 = grid_->cumulative(f1, 3.0);
    const auto i2 = grid_->cumulative(f2, 1.0);
    RadialSolution out{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
      out.A[i] = (u1[i] * i2[i] - u2.psi_plus[i] * i1[i]) / C;
      out.dA[i] = (du1[i] * i2[i] - u2.dpsi_plus[i] * i1[i]) / C;
      out.a[i] = gphi_[i] * out.A[i] + h[i];
    }
    // remove the kernel direction: int a r^2 dr = 0
    double ak = 0.0, kk = 0.0;
    const auto w = grid_->weights();
    for (std::size_t i = 0; i < m; ++i) {
      ak += w[i] * p_[i] * out.a[i] * k[i];
      kk += w[i] * p_[i] * k[i] * k[i];
    }
    const double c = ak / kk;
    for (std::size_t i = 0; i < m; ++i) {
      out.a[i] -= c * k[i];
      out.A[i] -= c * u1[i];
      out.dA[i] -= c * du1[i];
    }
    return out;
  }

  /// Stream coefficients (A and A') of both parities of f.
  std::pair<StreamSector, StreamSector> stream(const SectorFunction& f) const {
    check_grid(f);
    return {poisson(f.n, f.cos_coeff), poisson(f.n, f.sin_coeff)};
  }

  void check_grid(const SectorFunction& f) const {
    f.validate();
    require(f.grid == grid_ || (f.grid->size() == grid_->size() && f.grid->r_max() == grid_->r_max() &&
                                f.grid->r_min() == grid_->r_min()),
            "sector: grid mismatch");
  }

  // |x|^2 f must lie in X: its weighted tail beyond 0.9 r_max must be negligible
  void check_Y(const SectorFunction& f) const {
    const auto w = grid_->weights();
    double total = 0.0, tail = 0.0;
    const double r_tail = 0.9 * grid_->r_max();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double r = grid_->r(i);
      const double v = w[i] * p_[i] * std::pow(r, 4) *
                       (f.cos_coeff[i] * f.cos_coeff[i] + f.sin_coeff[i] * f.sin_coeff[i]);
      total += v;
      if (r > r_tail) tail += v;
    }
    if (!std::isfinite(total) || tail > 1e-6 * total)
      throw PreconditionError("invert_lambda: |x|^2 f is not in X (weighted tail fraction " +
                              std::to_string(total > 0 ? tail / total : tail) + ")");
  }

 private:
  // mode-1 solution ~ r at infinity (singular at the origin), stored in psi_plus
  const HomogeneousSolutions& mode1_second_solution() const {
    std::lock_guard lock(cache_mutex_);
    auto it = homogeneous_.find(1);
    if (it != homogeneous_.end()) return *it->second;
    auto hs = std::make_unique<HomogeneousSolutions>();
    hs->n = 1;
    const double r1 = grid_->r_max();
    // this solution changes sign, so the error control needs an absolute floor
    detail::integrate_radial(*grid_, 1.0, [this](double r) { return r * r * profile_.g_over_phi(r); }, r1,
                             {r1, r1}, false, hs->psi_plus, hs->dpsi_plus, 1e-13);
    return *homogeneous_.emplace(1, std::move(hs)).first->second;
  }

  RadialProfile profile_;
  GridPtr grid_;
  std::vector<double> phi_, g_, p_, gphi_;
  mutable std::mutex cache_mutex_;
  mutable std::map<int, std::unique_ptr<HomogeneousSolutions>> homogeneous_;
};

inline double inner_product_X(const SectorFunction& f, const SectorFunction& g, const LambdaOperator& op) {
  return op.inner(f, g);
}
inline StreamSector poisson_sector(int n, std::span<const double> a, const LambdaOperator& op) {
  return op.poisson(n, a);
}
inline SectorFunction apply_lambda(const SectorFunction& f, const LambdaOperator& op) { return op.apply(f); }
inline const HomogeneousSolutions& homogeneous_solutions(int n, const LambdaOperator& op) {
  return op.homogeneous(n);
}
inline SectorFunction invert_lambda(const SectorFunction& f, const LambdaOperator& op) { return op.invert(f); }
inline SectorFunction invert_lambda_mode1(const SectorFunction& f, const LambdaOperator& op) {
  return op.invert_mode1(f);
}

}  // namespace vplab
