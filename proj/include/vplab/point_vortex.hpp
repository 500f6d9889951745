#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "vplab/errors.hpp"
#include "vplab/ode.hpp"
#include "vplab/radial_profile.hpp"

namespace vplab {

struct PointVortexState {
  std::vector<Vec2> positions;
  std::vector<double> circulations;
  double time = 0.0;

  std::size_t size() const { return positions.size(); }

  void validate() const {
    require(!positions.empty(), "point vortex state: need at least one vortex");
    require(positions.size() == circulations.size(), "point vortex state: size mismatch");
    for (double a : circulations) require(a != 0.0 && std::isfinite(a), "point vortex state: zero circulation");
    require(min_pairwise_distance() > 0.0 || size() == 1, "point vortex state: coincident vortices");
  }

  double min_pairwise_distance() const {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j)
        d = std::min(d, std::hypot(positions[i][0] - positions[j][0], positions[i][1] - positions[j][1]));
    return d;
  }

  double total_abs_circulation() const {
    double s = 0.0;
    for (double a : circulations) s += std::abs(a);
    return s;
  }
};

namespace detail {

// dz_i/dt from the flat layout (x1, y1, x2, y2, ...); throws if two vortices
// come closer than `floor`.
inline void pv_velocities(const std::vector<double>& alpha, const std::vector<double>& z,
                          std::vector<double>& dz, double floor) {
  const std::size_t n = alpha.size();
  std::fill(dz.begin(), dz.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = z[2 * i] - z[2 * j], dy = z[2 * i + 1] - z[2 * j + 1];
      const double r2 = dx * dx + dy * dy;
      if (!(r2 > floor * floor)) throw NumericalError("point vortex: collision (singular configuration)");
      const double c = 1.0 / (2.0 * std::numbers::pi * r2);
      // (z_i - z_j)^perp = (-dy, dx)
      dz[2 * i] += alpha[j] * c * (-dy);
      dz[2 * i + 1] += alpha[j] * c * dx;
      dz[2 * j] -= alpha[i] * c * (-dy);
      dz[2 * j + 1] -= alpha[i] * c * dx;
    }
  }
}

inline std::vector<double> flatten(const std::vector<Vec2>& p) {
  std::vector<double> z(2 * p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    z[2 * i] = p[i][0];
    z[2 * i + 1] = p[i][1];
  }
  return z;
}

inline std::vector<Vec2> unflatten(const std::vector<double>& z) {
  std::vector<Vec2> p(z.size() / 2);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = {z[2 * i], z[2 * i + 1]};
  return p;
}

}  // namespace detail

/// Velocities of the point vortices.
inline std::vector<Vec2> rhs(const PointVortexState& state) {
  state.validate();
  const auto z = detail::flatten(state.positions);
  std::vector<double> dz(z.size());
  detail::pv_velocities(state.circulations, z, dz, 0.0);
  return detail::unflatten(dz);
}

struct FirstIntegrals {
  double H;
  double P1;
  double P2;
  double I;
};

/// Hamiltonian, linear impulse and angular impulse (the standard invariants).
inline FirstIntegrals first_integrals(const PointVortexState& state) {
  FirstIntegrals fi{0, 0, 0, 0};
  const auto& z = state.positions;
  const auto& a = state.circulations;
  for (std::size_t i = 0; i < state.size(); ++i) {
    fi.P1 += a[i] * z[i][0];
    fi.P2 += a[i] * z[i][1];
    fi.I += a[i] * (z[i][0] * z[i][0] + z[i][1] * z[i][1]);
    for (std::size_t j = i + 1; j < state.size(); ++j) {
      const double dx = z[i][0] - z[j][0], dy = z[i][1] - z[j][1];
      fi.H -= a[i] * a[j] * std::log(dx * dx + dy * dy) / (4.0 * std::numbers::pi);
    }
  }
  return fi;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<PointVortexState> states;
  std::vector<std::vector<Vec2>> velocities;  // at each sample, for Hermite resampling
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double tol = 0.0;

  const PointVortexState& back() const { return states.back(); }

  /// Dense output at t by cubic Hermite interpolation between stored samples.
  PointVortexState at(double t) const {
    require(!times.empty() && t >= times.front() && t <= times.back(), "trajectory: time out of range");
    const std::size_t k = std::min<std::size_t>(
        std::upper_bound(times.begin(), times.end(), t) - times.begin(), times.size() - 1);
    const std::size_t j = k == 0 ? 0 : k - 1;
    PointVortexState s = states[j];
    s.time = t;
    if (k == j) return s;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (int c = 0; c < 2; ++c)
        s.positions[i][c] = hermite(times[j], states[j].positions[i][c], velocities[j][i][c], times[k],
                                    states[k].positions[i][c], velocities[k][i][c], t);
    return s;
  }
};

/// Adaptive Dormand-Prince integration, recording every accepted step.
inline Trajectory integrate(const PointVortexState& state, double t_end, double tol) {
  state.validate();
  require(t_end > state.time, "integrate: t_end must exceed the current time");
  require(tol > 0.0, "integrate: tol must be positive");
  const double floor = state.size() > 1 ? 1e-8 * state.min_pairwise_distance() : 0.0;
  const auto alpha = state.circulations;
  auto f = [&alpha, floor](const std::vector<double>& z, std::vector<double>& dz, double) {
    detail::pv_velocities(alpha, z, dz, floor);
  };

  Trajectory tr;
  auto push = [&](double t, const std::vector<double>& z, const std::vector<double>& dz) {
    tr.times.push_back(t);
    tr.states.push_back({detail::unflatten(z), alpha, t});
    tr.velocities.push_back(detail::unflatten(dz));
  };
  std::vector<double> z = detail::flatten(state.positions), dz(z.size());
  f(z, dz, state.time);
  push(state.time, z, dz);
  const auto st = integrate_steps(f, z, state.time, t_end, tol, tol, push);
  tr.tol = tol;
  tr.steps = st.steps;
  tr.rejected = st.rejected;
  return tr;
}

struct MinDistance {
  double d;
  double T0;
};

/// Minimal pairwise distance over the run and the turnover time d^2 / sum|alpha_i|.
///
/// Each step is scanned at `resample` Hermite points. Where the interpolant dips
/// below both step endpoints, the dip is confirmed by re-integrating from the
/// step start, so interpolation error alone cannot lower d.
inline MinDistance min_distance_and_turnover(const Trajectory& tr, int resample = 8) {
  require(!tr.states.empty(), "min_distance: empty trajectory");
  require(tr.states.front().size() >= 2, "min_distance: undefined for a single vortex");
  double d = tr.states.front().min_pairwise_distance();
  for (std::size_t k = 1; k < tr.times.size(); ++k) {
    const double ends = std::min(tr.states[k - 1].min_pairwise_distance(), tr.states[k].min_pairwise_distance());
    d = std::min(d, ends);
    double best = ends, t_best = 0.0;
    for (int m = 1; m < resample; ++m) {
      const double t = tr.times[k - 1] + (tr.times[k] - tr.times[k - 1]) * m / resample;
      const double dm = tr.at(t).min_pairwise_distance();
      if (dm < best) {
        best = dm;
        t_best = t;
      }
    }
    if (best < ends * (1.0 - 1e-12)) {
      const auto sub = integrate(tr.states[k - 1], t_best, tr.tol > 0.0 ? tr.tol : 1e-12);
      d = std::min(d, sub.back().min_pairwise_distance());
    }
  }
  return {d, d * d / tr.states.front().total_abs_circulation()};
}

/// Reads lines "alpha x y"; blank lines and '#' comments are skipped.
inline PointVortexState read_point_vortices(std::istream& in) {
  PointVortexState s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double a, x, y;
    if (!(ls >> a)) continue;
    if (!(ls >> x >> y)) throw PreconditionError("point vortex input: malformed line " + std::to_string(lineno));
    s.circulations.push_back(a);
    s.positions.push_back({x, y});
  }
  s.validate();
  return s;
}

}  // namespace vplab
