#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vplab/errors.hpp"
#include "vplab/stencil.hpp"

namespace vplab {

/// Discretization of the radial half-line r > 0.
///
/// Nodes are uniform in a mapped coordinate t with r(t) = knee * log(1 + e^t):
/// geometric clustering near the origin (ratio e^h between neighbours) and
/// uniform spacing knee*h for r >> knee. All table operations (cumulative
/// integrals, derivatives, interpolation) work on the uniform t grid with
/// 6th-order stencils; full-line integrals use the trapezoid rule in t, which
/// is spectrally accurate for integrands that vanish at both ends.
class RadialGrid {
 public:
  struct Options {
    std::size_t nodes = 2048;
    double r_min = 1e-4;
    double r_max = 20.0;
    double knee = 1.0;
  };

  RadialGrid() : RadialGrid(Options{}) {}

  explicit RadialGrid(Options opt) : opt_(opt) {
    require(opt.nodes >= 16, "RadialGrid: need at least 16 nodes");
    require(opt.r_min > 0.0 && opt.r_max > opt.r_min, "RadialGrid: need 0 < r_min < r_max");
    require(opt.knee > 0.0, "RadialGrid: knee must be positive");
    const std::size_t m = opt.nodes;
    t0_ = t_of(opt.r_min);
    const double t1 = t_of(opt.r_max);
    h_ = (t1 - t0_) / static_cast<double>(m - 1);
    r_.resize(m);
    dr_.resize(m);
    d2r_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double t = t0_ + h_ * static_cast<double>(i);
      r_[i] = r_of(t);
      const double sig = 1.0 / (1.0 + std::exp(-t));
      dr_[i] = opt.knee * sig;
      d2r_[i] = opt.knee * sig * (1.0 - sig);
    }
    r_.front() = opt.r_min;
    r_.back() = opt.r_max;

    weights_.resize(m);
    for (std::size_t i = 0; i < m; ++i) weights_[i] = h_ * r_[i] * dr_[i];
    weights_.front() *= 0.5;
    weights_.back() *= 0.5;
    // piece [0, r_min] for integrands bounded at the origin
    weights_.front() += 0.5 * opt.r_min * opt.r_min;

    build_stencils();
  }

  std::size_t size() const { return r_.size(); }
  double r(std::size_t i) const { return r_[i]; }
  std::span<const double> radii() const { return r_; }
  /// Quadrature weights for the measure r dr on (0, r_max].
  std::span<const double> weights() const { return weights_; }
  double r_min() const { return opt_.r_min; }
  double r_max() const { return opt_.r_max; }
  double step() const { return h_; }
  const Options& options() const { return opt_; }

  double t_of(double r) const { return std::log(std::expm1(r / opt_.knee)); }
  double r_of(double t) const {
    return t > 30.0 ? opt_.knee * (t + std::log1p(std::exp(-t)))
                    : opt_.knee * std::log1p(std::exp(t));
  }

  template <class F>
  std::vector<double> sample(F&& f) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = f(r_[i]);
    return out;
  }

  /// Approximates the integral of f(r) r dr over (0, inf).
  double integrate(std::span<const double> f) const {
    check_size(f);
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += weights_[i] * f[i];
    return s;
  }

  /// C_i = integral of f(s) ds over (0, r_i). `leading_power` k models
  /// f ~ s^k on (0, r_min) for the first piece.
  std::vector<double> cumulative(std::span<const double> f, double leading_power = 0.0) const {
    check_size(f);
    const std::size_t m = size();
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = f[i] * dr_[i];
    std::vector<double> out(m);
    out[0] = f[0] * r_[0] / (leading_power + 1.0);
    for (std::size_t i = 0; i + 1 < m; ++i) out[i + 1] = out[i] + interval_integral(g, i);
    return out;
  }

  /// T_i = integral of f(s) ds over (r_i, r_max).
  std::vector<double> cumulative_tail(std::span<const double> f) const {
    check_size(f);
    const std::size_t m = size();
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = f[i] * dr_[i];
    std::vector<double> out(m);
    out[m - 1] = 0.0;
    for (std::size_t i = m - 1; i-- > 0;) out[i] = out[i + 1] + interval_integral(g, i);
    return out;
  }

  /// df/dr at the nodes.
  std::vector<double> derivative(std::span<const double> f) const {
    check_size(f);
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = dt_apply(f, i, 1) / dr_[i];
    return out;
  }

  /// d2f/dr2 at the nodes.
  std::vector<double> second_derivative(std::span<const double> f) const {
    check_size(f);
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
      const double ft = dt_apply(f, i, 1);
      const double ftt = dt_apply(f, i, 2);
      const double fr = ft / dr_[i];
      out[i] = (ftt - d2r_[i] * fr) / (dr_[i] * dr_[i]);
    }
    return out;
  }

  /// Value and r-derivative of the local degree-5 interpolant at r in [r_min, r_max].
  std::pair<double, double> interpolate_with_derivative(std::span<const double> f,
                                                        double r) const {
    const double tau = (t_of(std::clamp(r, opt_.r_min, opt_.r_max)) - t0_) / h_;
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(size());
    std::ptrdiff_t s = static_cast<std::ptrdiff_t>(std::floor(tau)) - 2;
    s = std::clamp<std::ptrdiff_t>(s, 0, m - 6);
    std::array<double, 6> x{};
    for (int j = 0; j < 6; ++j) x[j] = static_cast<double>(s + j);
    const auto w = stencil::fornberg(tau, x, 1);
    double v = 0.0, dv = 0.0;
    for (int j = 0; j < 6; ++j) {
      v += w[0][j] * f[s + j];
      dv += w[1][j] * f[s + j];
    }
    const double t = t0_ + h_ * tau;
    const double drdt = opt_.knee / (1.0 + std::exp(-t));
    return {v, dv / (h_ * drdt)};
  }

  /// Six-point Lagrange weights in t for the value at r; reusable across tables.
  struct Stencil {
    std::size_t start = 0;
    std::array<double, 6> w{};
    double apply(std::span<const double> f) const {
      double v = 0.0;
      for (int j = 0; j < 6; ++j) v += w[j] * f[start + j];
      return v;
    }
  };

  Stencil stencil(double r) const {
    const double tau = (t_of(std::clamp(r, opt_.r_min, opt_.r_max)) - t0_) / h_;
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(size());
    const std::ptrdiff_t s = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(tau)) - 2, 0, m - 6);
    Stencil st;
    st.start = static_cast<std::size_t>(s);
    const double u = tau - static_cast<double>(s);
    // denominators prod_{k != j} (j - k) for nodes 0..5
    static constexpr std::array<double, 6> denom{-120.0, 24.0, -12.0, 12.0, -24.0, 120.0};
    for (int j = 0; j < 6; ++j) {
      double num = 1.0;
      for (int k = 0; k < 6; ++k)
        if (k != j) num *= u - k;
      st.w[j] = num / denom[j];
    }
    return st;
  }

  double interpolate(std::span<const double> f, double r) const {
    check_size(f);
    return stencil(r).apply(f);
  }

 private:
  void check_size(std::span<const double> f) const {
    require(f.size() == size(), "RadialGrid: table size does not match grid");
  }

  void build_stencils() {
    for (int k = 0; k < 5; ++k) {
      std::array<double, 6> x{};
      for (int j = 0; j < 6; ++j) x[j] = static_cast<double>(j);
      const auto w = stencil::integration_weights(x, k, k + 1);
      for (int j = 0; j < 6; ++j) interval_w_[k][j] = w[j];
    }
    for (int k = 0; k < 7; ++k) {
      std::array<double, 7> x{};
      for (int j = 0; j < 7; ++j) x[j] = static_cast<double>(j);
      const auto w = stencil::fornberg(k, x, 2);
      for (int j = 0; j < 7; ++j) {
        diff_w_[0][k][j] = w[1][j];
        diff_w_[1][k][j] = w[2][j];
      }
    }
  }

  // integral of g dt over [t_i, t_{i+1}] from a 6-point stencil
  double interval_integral(const std::vector<double>& g, std::size_t i) const {
    const std::size_t m = size();
    const std::size_t s = std::min(i >= 2 ? i - 2 : 0, m - 6);
    const auto& w = interval_w_[i - s];
    double acc = 0.0;
    for (int j = 0; j < 6; ++j) acc += w[j] * g[s + j];
    return acc * h_;
  }

  double dt_apply(std::span<const double> f, std::size_t i, int order) const {
    const std::size_t m = size();
    const std::size_t s = std::min(i >= 3 ? i - 3 : 0, m - 7);
    const auto& w = diff_w_[order - 1][i - s];
    double acc = 0.0;
    for (int j = 0; j < 7; ++j) acc += w[j] * f[s + j];
    return acc / std::pow(h_, order);
  }

  Options opt_;
  double t0_ = 0.0;
  double h_ = 0.0;
  std::vector<double> r_, dr_, d2r_, weights_;
  std::array<std::array<double, 6>, 5> interval_w_{};
  std::array<std::array<std::array<double, 7>, 7>, 2> diff_w_{};
};

}  // namespace vplab
