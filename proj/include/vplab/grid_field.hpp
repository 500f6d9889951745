#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "vplab/errors.hpp"
#include "vplab/radial_profile.hpp"

namespace vplab {

struct GridSpec {
  int n = 256;
  double L = 40.0;
  Vec2 center{0.0, 0.0};

  double h() const { return L / n; }
  /// Cell-centered node coordinate; symmetric under x -> 2c - x.
  double x(int i) const { return center[0] - 0.5 * L + (i + 0.5) * h(); }
  double y(int j) const { return center[1] - 0.5 * L + (j + 0.5) * h(); }

  void validate() const {
    require(n >= 16 && n % 2 == 0, "grid: n must be even and at least 16");
    require(L > 0.0 && std::isfinite(L), "grid: L must be positive");
  }
  bool operator==(const GridSpec&) const = default;
};

/// n x n samples, values[j*n + i] at (x_i, y_j).
struct GridField {
  GridSpec grid;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(GridSpec g) : grid(g), values(static_cast<std::size_t>(g.n) * g.n, 0.0) { g.validate(); }

  template <class F>
  static GridField sample(GridSpec g, F&& f) {
    GridField out(g);
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) out.at(i, j) = f(Vec2{g.x(i), g.y(j)});
    return out;
  }

  int n() const { return grid.n; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * grid.n + i]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.n + i]; }

  double integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.h() * grid.h();
  }
  double l1() const {
    double s = 0.0;
    for (double v : values) s += std::abs(v);
    return s * grid.h() * grid.h();
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  /// max |value| on the outer `fraction` frame over max |value| overall.
  double frame_ratio(double fraction = 0.1) const {
    const int w = std::max(1, static_cast<int>(std::ceil(fraction * grid.n)));
    double frame = 0.0;
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i)
        if (i < w || j < w || i >= grid.n - w || j >= grid.n - w) frame = std::max(frame, std::abs(at(i, j)));
    const double m = max_abs();
    return m > 0.0 ? frame / m : 0.0;
  }

  void check_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) throw NumericalError("grid field: non-finite value");
  }

  GridField& operator+=(const GridField& o) {
    require(o.grid == grid, "grid field: grid mismatch");
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += o.values[k];
    return *this;
  }
};

/// 32-byte header ("VPF1", uint32 n, f64 L, f64 cx, f64 cy) and row-major f64 values.
inline void write_binary(std::ostream& os, const GridField& f) {
  static_assert(sizeof(double) == 8);
  const char magic[4] = {'V', 'P', 'F', '1'};
  const std::uint32_t n = static_cast<std::uint32_t>(f.grid.n);
  os.write(magic, 4);
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&f.grid.L), 8);
  os.write(reinterpret_cast<const char*>(&f.grid.center[0]), 8);
  os.write(reinterpret_cast<const char*>(&f.grid.center[1]), 8);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!os) throw Error("grid field: write failed");
}

inline GridField read_binary(std::istream& is) {
  char magic[4];
  std::uint32_t n = 0;
  GridSpec g;
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "VPF1", 4) != 0) throw PreconditionError("grid field: bad magic");
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&g.L), 8);
  is.read(reinterpret_cast<char*>(&g.center[0]), 8);
  is.read(reinterpret_cast<char*>(&g.center[1]), 8);
  g.n = static_cast<int>(n);
  GridField f(g);
  is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!is) throw PreconditionError("grid field: truncated file");
  return f;
}

inline void save(const std::string& path, const GridField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  write_binary(os, f);
}

inline GridField load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PreconditionError("cannot open " + path);
  return read_binary(is);
}

/// CSV of the row j (y fixed): x,value.
inline void write_row_csv(std::ostream& os, const GridField& f, int j) {
  os << "x,value\n";
  os.precision(17);
  for (int i = 0; i < f.n(); ++i) os << f.grid.x(i) << ',' << f.at(i, j) << '\n';
}

}  // namespace vplab
