#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "vplab/errors.hpp"

namespace vplab {

using Vec2 = std::array<double, 2>;

inline Vec2 perp(const Vec2& x) { return {-x[1], x[0]}; }

/// Radially symmetric vortex profile w*(x) = q(|x|^2)/pi.
///
/// q, dq, d2q take s = |x|^2. The radial functions phi(r), g(r) take the
/// radius; Q(s) and p(s) take s, matching their role as functions of |x|^2.
class RadialProfile {
 public:
  using Fn = std::function<double(double)>;

  RadialProfile(std::string name, Fn q, Fn dq, Fn d2q, std::optional<Fn> Q_closed = std::nullopt,
                double r_max = 20.0, std::size_t n_quad = 4000)
      : name_(std::move(name)), q_(std::move(q)), dq_(std::move(dq)), d2q_(std::move(d2q)),
        Q_closed_(std::move(Q_closed)), r_max_(r_max), n_quad_(n_quad) {
    require(r_max > 0.0, "RadialProfile: r_max must be positive");
    require(n_quad >= 16, "RadialProfile: n_quad too small");
    q0_ = q_(0.0);
    q1_ = dq_(0.0);
    q2_ = d2q_(0.0);
    require(q0_ > 0.0 && q1_ < 0.0, "RadialProfile: need q(0) > 0 and q'(0) < 0");
  }

  const std::string& name() const { return name_; }
  double r_max() const { return r_max_; }
  std::size_t n_quad() const { return n_quad_; }

  double q(double s) const { return q_(s); }
  double dq(double s) const { return dq_(s); }
  double d2q(double s) const { return d2q_(s); }

  double Q(double s) const {
    require(s >= 0.0, "cumulative_Q: negative argument");
    if (Q_closed_) return (*Q_closed_)(s);
    if (s == 0.0) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(q_, 0.0, s, 20, 1e-14);
  }

  /// Q(s)/s, continuous at s = 0.
  double Q_over_s(double s) const {
    if (s < 1e-6) return q0_ + 0.5 * q1_ * s + q2_ * s * s / 6.0;
    return Q(s) / s;
  }

  double phi(double r) const { return Q_over_s(r * r) / (2.0 * std::numbers::pi); }
  double g(double r) const { return -2.0 * dq_(r * r) / std::numbers::pi; }
  double p(double s) const { return -1.0 / dq_(s); }

  double w_star(const Vec2& x) const { return q_(x[0] * x[0] + x[1] * x[1]) / std::numbers::pi; }
  Vec2 v_star(const Vec2& x) const {
    const double f = phi(std::hypot(x[0], x[1]));
    return {-x[1] * f, x[0] * f};
  }
  Vec2 grad_w_star(const Vec2& x) const {
    const double f = g(std::hypot(x[0], x[1]));
    return {-x[0] * f, -x[1] * f};
  }

  /// dphi/dr.
  double dphi(double r) const { return r * qQ_defect(r * r) / std::numbers::pi; }

  /// dg/dr.
  double dg(double r) const { return -4.0 * r * d2q_(r * r) / std::numbers::pi; }

  /// g/phi = -4 s q'(s)/Q(s), with its limit -4 q'(0)/q(0) at the origin.
  double g_over_phi(double r) const {
    const double s = r * r;
    return -4.0 * dq_(s) / Q_over_s(s);
  }

  /// d(g/phi)/dr.
  double d_g_over_phi(double r) const {
    const double s = r * r;
    const double R = Q_over_s(s);
    const double dk = -4.0 * (d2q_(s) * R - dq_(s) * qQ_defect(s)) / (R * R);
    return 2.0 * r * dk;
  }

 private:
  // (s q(s) - Q(s)) / s^2, by series where the difference cancels
  double qQ_defect(double s) const {
    if (s < 1e-5) return 0.5 * q1_ + q2_ * s / 3.0;
    return (s * q_(s) - Q(s)) / (s * s);
  }

  std::string name_;
  Fn q_, dq_, d2q_;
  std::optional<Fn> Q_closed_;
  double r_max_;
  std::size_t n_quad_;
  double q0_ = 0.0, q1_ = 0.0, q2_ = 0.0;
};

/// q(s) = gamma e^{-gamma s}.
inline RadialProfile make_exponential(double gamma) {
  require(gamma > 0.0, "make_exponential: gamma must be positive");
  std::ostringstream name;
  name << "exponential:" << gamma;
  return RadialProfile(
      name.str(), [gamma](double s) { return gamma * std::exp(-gamma * s); },
      [gamma](double s) { return -gamma * gamma * std::exp(-gamma * s); },
      [gamma](double s) { return gamma * gamma * gamma * std::exp(-gamma * s); },
      [gamma](double s) { return -std::expm1(-gamma * s); });
}

/// The Oseen profile: w* = G, q(s) = e^{-s/4}/4.
inline RadialProfile make_gaussian() {
  return RadialProfile(
      "gaussian", [](double s) { return 0.25 * std::exp(-0.25 * s); },
      [](double s) { return -0.0625 * std::exp(-0.25 * s); },
      [](double s) { return 0.015625 * std::exp(-0.25 * s); },
      [](double s) { return -std::expm1(-0.25 * s); });
}

/// q(s) = (1+s)^-2: normalized, satisfies (SS), but only algebraic decay.
inline RadialProfile make_algebraic() {
  return RadialProfile(
      "algebraic", [](double s) { return 1.0 / ((1.0 + s) * (1.0 + s)); },
      [](double s) { return -2.0 / std::pow(1.0 + s, 3); },
      [](double s) { return 6.0 / std::pow(1.0 + s, 4); },
      [](double s) { return s / (1.0 + s); });
}

/// "gaussian", "exponential:<gamma>" or "algebraic".
inline RadialProfile make_profile(const std::string& spec) {
  if (spec == "gaussian") return make_gaussian();
  if (spec == "algebraic") return make_algebraic();
  const std::string prefix = "exponential:";
  if (spec.rfind(prefix, 0) == 0) {
    double gamma = 0.0;
    try {
      gamma = std::stod(spec.substr(prefix.size()));
    } catch (const std::exception&) {
      throw PreconditionError("unknown profile '" + spec + "'");
    }
    return make_exponential(gamma);
  }
  throw PreconditionError("unknown profile '" + spec + "'");
}

inline double cumulative_Q(const RadialProfile& profile, double s) { return profile.Q(s); }

struct DerivedFunctions {
  double phi;
  double g;
  double p;
};

/// phi(r), g(r) and p evaluated at the same argument, p(r) = -1/q'(r).
inline DerivedFunctions derived_functions(const RadialProfile& profile, double r) {
  require(r >= 0.0, "derived_functions: negative radius");
  return {profile.phi(r), profile.g(r), profile.p(r)};
}

struct AdmissibilityReport {
  static constexpr int max_k = 12;
  double normalization = 0.0;
  bool positive_decreasing = true;
  double sup_ratio = 0.0;     // sup of -s^2 q'/Q
  double sup_ratio_at = 0.0;  // s where it is attained
  bool ratio_below_one = true;
  std::array<double, max_k + 1> qdecay_max{};
  std::array<bool, max_k + 1> qdecay_ok{};
  std::array<double, max_k + 1> q2decay_max{};
  std::array<bool, max_k + 1> q2decay_ok{};

  bool normalized() const { return std::abs(normalization - 1.0) <= 1e-8; }
  bool qdecay() const { return std::all_of(qdecay_ok.begin(), qdecay_ok.end(), [](bool b) { return b; }); }
  bool q2decay() const { return std::all_of(q2decay_ok.begin(), q2decay_ok.end(), [](bool b) { return b; }); }
  bool admissible() const {
    return normalized() && positive_decreasing && ratio_below_one && qdecay() && q2decay();
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "normalization=" << normalization << "\n"
       << "positive_decreasing=" << positive_decreasing << "\n"
       << "sup_ratio=" << sup_ratio << "\n"
       << "sup_ratio_at=" << sup_ratio_at << "\n"
       << "ratio_below_one=" << ratio_below_one << "\n";
    for (int k = 0; k <= max_k; ++k)
      os << "qdecay_max_k" << k << "=" << qdecay_max[k] << "\n"
         << "qdecay_ok_k" << k << "=" << qdecay_ok[k] << "\n";
    for (int k = 0; k <= max_k; ++k)
      os << "q2decay_max_k" << k << "=" << q2decay_max[k] << "\n"
         << "q2decay_ok_k" << k << "=" << q2decay_ok[k] << "\n";
    os << "admissible=" << admissible() << "\n";
    return os.str();
  }
};

/// Samples s on (0, r_max^2] and checks (SS) and the decay conditions for k <= 12.
/// A weighted ratio counts as bounded when it is non-increasing over the outer
/// tenth of the sampled range, i.e. it has turned over before the truncation.
inline AdmissibilityReport check_admissibility(const RadialProfile& profile) {
  AdmissibilityReport rep;
  const double s_max = profile.r_max() * profile.r_max();
  const std::size_t n = profile.n_quad();
  rep.normalization =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          [&](double s) { return profile.q(s); }, 0.0, std::numeric_limits<double>::infinity(), 25,
          1e-13);

  std::vector<double> s(n), a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = s_max * static_cast<double>(i + 1) / static_cast<double>(n);
    const double q = profile.q(s[i]), dq = profile.dq(s[i]), d2q = profile.d2q(s[i]);
    if (!(q > 0.0 && dq < 0.0)) rep.positive_decreasing = false;
    const double ratio = -s[i] * s[i] * dq / profile.Q(s[i]);
    if (ratio > rep.sup_ratio) {
      rep.sup_ratio = ratio;
      rep.sup_ratio_at = s[i];
    }
    a[i] = q * (q / std::abs(dq));
    b[i] = d2q * (d2q / std::abs(dq));
  }
  {
    // polish the scanned maximum
    const double h = s_max / static_cast<double>(n);
    const auto best = boost::math::tools::brent_find_minima(
        [&](double x) { return x * x * profile.dq(x) / profile.Q(x); },
        std::max(rep.sup_ratio_at - h, 0.5 * h), rep.sup_ratio_at + h, 52);
    if (-best.second > rep.sup_ratio) {
      rep.sup_ratio = -best.second;
      rep.sup_ratio_at = best.first;
    }
  }
  rep.ratio_below_one = rep.sup_ratio < 1.0;

  const std::size_t tail = n - n / 10;
  for (int k = 0; k <= AdmissibilityReport::max_k; ++k) {
    double ma = 0.0, mb = 0.0;
    bool oka = true, okb = true;
    double prev_a = std::numeric_limits<double>::infinity(), prev_b = prev_a;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = std::pow(s[i], k);
      const double va = sk * a[i], vb = sk * b[i];
      ma = std::max(ma, va);
      mb = std::max(mb, vb);
      if (i >= tail) {
        if (va > prev_a) oka = false;
        if (vb > prev_b) okb = false;
        prev_a = va;
        prev_b = vb;
      }
    }
    rep.qdecay_max[k] = ma;
    rep.qdecay_ok[k] = oka && std::isfinite(ma);
    rep.q2decay_max[k] = mb;
    rep.q2decay_ok[k] = okb && std::isfinite(mb);
  }
  return rep;
}

}  // namespace vplab
