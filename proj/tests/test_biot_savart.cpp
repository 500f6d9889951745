#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "vplab/biot_savart.hpp"

using namespace vplab;
using std::numbers::pi;

namespace {

GridSpec standard_grid() { return {256, 40.0, {0.0, 0.0}}; }

GridField gaussian(GridSpec g, Vec2 c, double alpha, double nut) {
  return oseen_field(alpha, 1.0, nut, c, g);
}

}  // namespace

TEST(BiotSavart, OseenVelocityMatchesClosedForm) {
  const auto g = standard_grid();
  const auto w = gaussian(g, {0, 0}, 1.0, 1.0);
  const auto u = biot_savart_grid(w);
  EXPECT_TRUE(u.warning.empty());
  EXPECT_NEAR(oseen_speed(1, 1, 1, 2.0), 0.050302, 1e-6);
  double worst = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i), y = g.y(j), r = std::hypot(x, y);
      if (r < 0.5 || r > 10) continue;
      const double v = oseen_speed(1, 1, 1, r);
      // v* = x^perp v / r
      worst = std::max(worst, std::hypot(u.u1.at(i, j) + y / r * v, u.u2.at(i, j) - x / r * v) / v);
    }
  EXPECT_LT(worst, 1e-3);
}

TEST(BiotSavart, AzimuthalSpeedAtRandomRadii) {
  // |v| = Q(r^2)/(2 pi r) for the Gaussian profile, sampled on grid nodes
  const auto g = standard_grid();
  const auto G = make_gaussian();
  const auto u = biot_savart_grid(GridField::sample(g, [&](Vec2 x) { return G.w_star(x); }));
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(g.n / 2 - 40, g.n / 2 + 40);
  for (int k = 0; k < 20; ++k) {
    const int i = pick(rng), j = pick(rng);
    const double r = std::hypot(g.x(i), g.y(j));
    const double expect = G.Q(r * r) / (2 * pi * r);
    EXPECT_NEAR(std::hypot(u.u1.at(i, j), u.u2.at(i, j)) / expect, 1.0, 1e-3);
  }
}

TEST(BiotSavart, ZeroAndSuperposition) {
  const auto g = standard_grid();
  BiotSavart bs(g);
  const auto z = bs.solve(GridField(g));
  EXPECT_EQ(z.u1.max_abs(), 0.0);
  EXPECT_EQ(z.u2.max_abs(), 0.0);

  const auto a = gaussian(g, {-2.1, 0.7}, 1.0, 1.0), b = gaussian(g, {3.0, -1.4}, 0.5, 1.5);
  auto ab = a;
  ab += b;
  const auto ua = bs.solve(a), ub = bs.solve(b), uab = bs.solve(ab);
  double err = 0;
  for (std::size_t k = 0; k < ab.values.size(); ++k) {
    err = std::max(err, std::abs(uab.u1.values[k] - ua.u1.values[k] - ub.u1.values[k]));
    err = std::max(err, std::abs(uab.u2.values[k] - ua.u2.values[k] - ub.u2.values[k]));
  }
  EXPECT_LT(err, 1e-10);
}

TEST(BiotSavart, FarField) {
  const auto g = standard_grid();
  const double alpha = 1.3;
  const auto u = biot_savart_grid(gaussian(g, {0, 0}, alpha, 1.0));
  // node nearest to |x| = 0.4 L on the x axis row
  const int j = g.n / 2;
  const int i = static_cast<int>(std::lround((0.4 * g.L + 0.5 * g.L) / g.h() - 0.5));
  const double r = std::hypot(g.x(i), g.y(j));
  EXPECT_NEAR(std::hypot(u.u1.at(i, j), u.u2.at(i, j)) * 2 * pi * r / alpha, 1.0, 1e-2);
}

TEST(BiotSavart, ReflectionSymmetry) {
  const auto g = standard_grid();
  auto w = gaussian(g, {1.5, 0.0}, 1.0, 1.0);
  w += gaussian(g, {-2.0, 0.0}, 0.7, 0.6);
  const auto u = biot_savart_grid(w);
  const double s = u.u1.max_abs() + u.u2.max_abs();
  double e1 = 0, e2 = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      e1 = std::max(e1, std::abs(u.u1.at(i, j) + u.u1.at(i, g.n - 1 - j)));
      e2 = std::max(e2, std::abs(u.u2.at(i, j) - u.u2.at(i, g.n - 1 - j)));
    }
  EXPECT_LT(e1 / s, 1e-12);
  EXPECT_LT(e2 / s, 1e-12);
}

TEST(BiotSavart, TranslationByOneCell) {
  const auto g = standard_grid();
  const auto w = gaussian(g, {0.3, -0.2}, 1.0, 1.0);
  GridField shifted(g);
  for (int j = 0; j < g.n; ++j)
    for (int i = 1; i < g.n; ++i) shifted.at(i, j) = w.at(i - 1, j);
  BiotSavart bs(g);
  const auto u = bs.solve(w), us = bs.solve(shifted);
  double err = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 1; i < g.n; ++i)
      err = std::max({err, std::abs(us.u1.at(i, j) - u.u1.at(i - 1, j)), std::abs(us.u2.at(i, j) - u.u2.at(i - 1, j))});
  EXPECT_LT(err, 1e-14);
}

TEST(BiotSavart, Divergence) {
  const auto g = standard_grid();
  auto w = gaussian(g, {1.5, 0.5}, 1.0, 1.0);
  w += gaussian(g, {-2.0, 0.0}, 0.7, 0.6);
  const auto u = biot_savart_grid(w);
  EXPECT_LT(divergence_defect(u.u1, u.u2), 1e-6);
}

TEST(BiotSavart, FrameDecayPrecondition) {
  const auto g = standard_grid();
  // core sqrt(5) at L = 40: frame ratio ~ e^{-256/20} ~ 3e-6, warned
  const auto u = biot_savart_grid(gaussian(g, {0, 0}, 1.0, 5.0));
  EXPECT_FALSE(u.warning.empty());
  EXPECT_THROW(biot_savart_grid(gaussian(g, {0, 0}, 1.0, 40.0)), PreconditionError);
}

TEST(OseenField, Values) {
  const GridSpec g{256, 40.0, {0.0, 0.0}};
  const auto w = oseen_field(1.0, 0.5, 2.0, {g.x(128), g.y(128)}, g);
  EXPECT_NEAR(w.at(128, 128), 1.0 / (4 * pi), 1e-15);
  EXPECT_NEAR(w.integral(), 1.0, 1e-6);
  const auto w2 = oseen_field(1.0, 0.5, 4.0, {g.x(128), g.y(128)}, g);
  EXPECT_NEAR(w2.at(128, 128) / w.at(128, 128), 0.5, 1e-15);
  EXPECT_THROW(oseen_field(1.0, 0.0, 1.0, {0, 0}, g), PreconditionError);
  EXPECT_THROW(oseen_field(1.0, 1e-3, 1.0, {0, 0}, g), PreconditionError);
}

TEST(GridFieldIo, BinaryRoundTrip) {
  const GridSpec g{32, 3.0, {0.5, -0.25}};
  const auto w = GridField::sample(g, [](Vec2 x) { return x[0] - 2 * x[1]; });
  std::stringstream ss;
  write_binary(ss, w);
  EXPECT_EQ(ss.str().size(), 32u + 8u * 32 * 32);
  const auto r = read_binary(ss);
  EXPECT_EQ(r.grid, g);
  EXPECT_EQ(r.values, w.values);
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_binary(bad), PreconditionError);
}
