#pragma once

#include <cmath>
#include <memory>
#include <ostream>
#include <vector>

#include "vplab/errors.hpp"
#include "vplab/radial_grid.hpp"

namespace vplab {

using GridPtr = std::shared_ptr<const RadialGrid>;

/// a(r) cos(n theta) + b(r) sin(n theta) on a radial grid.
struct SectorFunction {
  int n = 0;
  GridPtr grid;
  std::vector<double> cos_coeff;
  std::vector<double> sin_coeff;

  SectorFunction() = default;
  SectorFunction(int mode, GridPtr g)
      : n(mode), grid(std::move(g)), cos_coeff(grid->size(), 0.0), sin_coeff(grid->size(), 0.0) {
    require(mode >= 0, "sector: negative mode");
  }
  SectorFunction(int mode, GridPtr g, std::vector<double> c, std::vector<double> s)
      : n(mode), grid(std::move(g)), cos_coeff(std::move(c)), sin_coeff(std::move(s)) {
    validate();
  }

  static SectorFunction cosine(int mode, GridPtr g, std::vector<double> a) {
    std::vector<double> zero(a.size(), 0.0);
    return {mode, std::move(g), std::move(a), std::move(zero)};
  }
  static SectorFunction sine(int mode, GridPtr g, std::vector<double> b) {
    std::vector<double> zero(b.size(), 0.0);
    return {mode, std::move(g), std::move(zero), std::move(b)};
  }

  std::size_t size() const { return cos_coeff.size(); }

  void validate() const {
    require(n >= 0, "sector: negative mode");
    require(grid && cos_coeff.size() == grid->size() && sin_coeff.size() == grid->size(),
            "sector: table sizes do not match the grid");
    for (std::size_t i = 0; i < size(); ++i)
      if (!std::isfinite(cos_coeff[i]) || !std::isfinite(sin_coeff[i]))
        throw NumericalError("sector: non-finite table entry");
    if (n == 0)
      for (double b : sin_coeff) require(b == 0.0, "sector: mode 0 must have zero sine coefficient");
  }

  /// Value at polar point (r, theta) by local interpolation; zero beyond the grid,
  /// r^n scaling below its first node.
  double eval(double r, double theta) const {
    double c, s;
    radial(r, c, s);
    return c * std::cos(n * theta) + s * std::sin(n * theta);
  }

  void radial(double r, double& c, double& s) const {
    if (r >= grid->r_max()) {
      c = s = 0.0;
    } else if (r <= grid->r_min()) {
      const double f = std::pow(r / grid->r_min(), n);
      c = cos_coeff.front() * f;
      s = sin_coeff.front() * f;
    } else {
      c = grid->interpolate(cos_coeff, r);
      s = grid->interpolate(sin_coeff, r);
    }
  }

  SectorFunction& operator+=(const SectorFunction& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < size(); ++i) {
      cos_coeff[i] += o.cos_coeff[i];
      sin_coeff[i] += o.sin_coeff[i];
    }
    return *this;
  }
  SectorFunction& operator-=(const SectorFunction& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < size(); ++i) {
      cos_coeff[i] -= o.cos_coeff[i];
      sin_coeff[i] -= o.sin_coeff[i];
    }
    return *this;
  }
  SectorFunction& operator*=(double k) {
    for (std::size_t i = 0; i < size(); ++i) {
      cos_coeff[i] *= k;
      sin_coeff[i] *= k;
    }
    return *this;
  }
  friend SectorFunction operator+(SectorFunction a, const SectorFunction& b) { return a += b; }
  friend SectorFunction operator-(SectorFunction a, const SectorFunction& b) { return a -= b; }
  friend SectorFunction operator*(double k, SectorFunction a) { return a *= k; }

  void check_compatible(const SectorFunction& o) const {
    require(o.n == n, "sector: mode mismatch");
    require(o.grid == grid || (o.grid && grid && o.grid->size() == grid->size() &&
                               o.grid->r_max() == grid->r_max() && o.grid->r_min() == grid->r_min()),
            "sector: grid mismatch");
  }
};

/// Radial stream coefficient A_n and its derivative for one parity.
struct StreamSector {
  int n = 0;
  std::vector<double> A;
  std::vector<double> dA;
};

inline void write_csv(std::ostream& os, const SectorFunction& f) {
  os.precision(17);
  os << "r,cos_coeff,sin_coeff\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    os << f.grid->r(i) << ',' << f.cos_coeff[i] << ',' << f.sin_coeff[i] << '\n';
}

}  // namespace vplab
