#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vplab/fokker_planck.hpp"
#include "vplab/point_vortex.hpp"
#include "vplab/steady_state.hpp"
#include "vplab/viscous_solver.hpp"

#ifndef VPLAB_CODE_VERSION
#define VPLAB_CODE_VERSION "0.1.0"
#endif

namespace vplab {

// ---------------------------------------------------------------- fitting

struct ScalingFitResult {
  std::string abscissa;
  double exponent = 0.0;
  double lo = 0.0;  // 95% bootstrap interval
  double hi = 0.0;
  double prefactor = 0.0;
  std::size_t points = 0;
};

namespace detail {

inline std::pair<double, double> log_slope(const std::vector<double>& lx, const std::vector<double>& ly,
                                           const std::vector<std::size_t>& idx) {
  double mx = 0.0, my = 0.0;
  for (auto k : idx) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= idx.size();
  my /= idx.size();
  double sxy = 0.0, sxx = 0.0;
  for (auto k : idx) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
  return {slope, my - slope * mx};
}

}  // namespace detail

/// Least-squares slope of log y against log x, with a percentile bootstrap
/// interval from 1000 resamples.
inline ScalingFitResult fit_power_law(const std::vector<std::pair<double, double>>& points,
                                      std::string abscissa = "x", std::uint64_t seed = 12345) {
  require(points.size() >= 4, "fit_power_law: need at least 4 points");
  std::vector<double> lx, ly;
  for (const auto& [x, y] : points) {
    require(x > 0.0 && y > 0.0 && std::isfinite(x) && std::isfinite(y),
            "fit_power_law: values must be finite and strictly positive");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const std::size_t n = points.size();
  std::vector<std::size_t> all(n);
  for (std::size_t k = 0; k < n; ++k) all[k] = k;
  const auto [slope, icpt] = detail::log_slope(lx, ly, all);
  require(std::isfinite(slope), "fit_power_law: abscissae must not all coincide");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> boot;
  std::vector<std::size_t> idx(n);
  const int resamples = 1000;
  for (int tries = 0; static_cast<int>(boot.size()) < resamples && tries < 100 * resamples; ++tries) {
    for (auto& k : idx) k = pick(rng);
    const double s = detail::log_slope(lx, ly, idx).first;
    if (std::isfinite(s)) boot.push_back(s);  // degenerate draws (one distinct x) are redrawn
  }
  if (static_cast<int>(boot.size()) < resamples) throw NumericalError("fit_power_law: bootstrap degenerate");
  std::sort(boot.begin(), boot.end());
  ScalingFitResult r;
  r.abscissa = std::move(abscissa);
  r.exponent = slope;
  r.prefactor = std::exp(icpt);
  r.lo = boot[static_cast<std::size_t>(std::floor(0.025 * (resamples - 1)))];
  r.hi = boot[static_cast<std::size_t>(std::ceil(0.975 * (resamples - 1)))];
  r.points = n;
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) throw NumericalError("fit_power_law: interval not finite");
  return r;
}

// ---------------------------------------------------------------- parameters

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_number(v[k]);
  return s;
}

/// Flat key=value table. Typed getters record defaults they fall back to, so
/// the table ends up holding every resolved parameter.
class ParamTable {
 public:
  void set(const std::string& key, const std::string& value) { map_[key] = value; }
  bool has(const std::string& key) const { return map_.count(key) > 0; }
  const std::map<std::string, std::string>& entries() const { return map_; }
  bool empty() const { return map_.empty(); }

  /// Lines "key = value"; blank lines and '#' comments are skipped.
  void parse(std::istream& in, const std::string& source = "config") {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      const auto key = trim(line.substr(0, eq));
      if (key.empty() && eq == std::string::npos) continue;
      if (eq == std::string::npos || key.empty())
        throw PreconditionError(source + ": line " + std::to_string(lineno) + " is not key=value");
      map_[key] = trim(line.substr(eq + 1));
    }
  }

  std::string str(const std::string& key) const {
    auto it = map_.find(key);
    require(it != map_.end(), "missing parameter '" + key + "'");
    return it->second;
  }
  std::string str(const std::string& key, const std::string& def) {
    if (!has(key)) map_[key] = def;
    return map_[key];
  }

  double num(const std::string& key) const { return to_double(key, str(key)); }
  double num(const std::string& key, double def) {
    if (!has(key)) map_[key] = format_number(def);
    return num(key);
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    require(!out.empty(), "parameter '" + key + "' is an empty list");
    return out;
  }
  std::vector<double> list(const std::string& key, const std::vector<double>& def) {
    if (!has(key)) map_[key] = format_list(def);
    return list(key);
  }

  /// "n,L" centered at the origin.
  GridSpec grid(const std::string& key, GridSpec def) {
    if (!has(key)) map_[key] = std::to_string(def.n) + "," + format_number(def.L);
    const auto v = list(key);
    require(v.size() == 2 && v[0] == std::floor(v[0]) && v[0] > 0.0, "parameter '" + key + "' must be n,L");
    GridSpec g{static_cast<int>(v[0]), v[1], {0.0, 0.0}};
    g.validate();
    return g;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }
  static double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
      throw PreconditionError("parameter '" + key + "': '" + v + "' is not a finite number");
    return out;
  }

  std::map<std::string, std::string> map_;
};

// ---------------------------------------------------------------- sweeps

inline std::shared_ptr<const LambdaOperator> gaussian_operator(std::size_t nodes) {
  require(nodes >= 64, "radial-nodes must be at least 64");
  return std::make_shared<const LambdaOperator>(
      make_gaussian(), std::make_shared<RadialGrid>(RadialGrid::Options{nodes, 1e-4, 20.0, 1.0}));
}

struct ResidualPoint {
  double d = 0.0;
  double residual = 0.0;  // full expansion
  double bare = 0.0;      // w* alone
  double omega_tilde = 0.0;
};

inline std::vector<ResidualPoint> residual_sweep(const SteadyPairExpansion& base, const std::vector<double>& ds) {
  std::vector<ResidualPoint> out;
  for (double d : ds) {
    require(d > 0.0, "residual sweep: d must be positive");
    const auto e = base.with_distance(d);
    const auto full = residual_report(e);
    out.push_back({d, full.x_norm, residual_report(e.truncated(0)).x_norm, full.omega_tilde});
  }
  return out;
}

struct FnuPoint {
  double nu_over_alpha = 0.0;
  double diff = 0.0;      // ||F_nu - F_0||_X
  double residual = 0.0;  // backward error of the solve
};

struct FnuSweep {
  std::vector<FnuPoint> points;
  double f0_defect = 0.0;  // ||F_0 - omega^(2)||_X / ||omega^(2)||_X
};

inline FnuSweep fnu_sweep(const LambdaOperator& op, const std::vector<double>& mus) {
  FnuSweep out;
  const auto omega2 = solve_order(op, order_rhs(op, 2));
  const auto F0 = solve_F_nu(op, 0.0, 1.0);
  out.f0_defect = op.norm(F0.F - omega2) / op.norm(omega2);
  for (double mu : mus) {
    require(mu > 0.0, "fnu sweep: nu/alpha must be positive");
    const auto F = solve_F_nu(op, mu, 1.0);
    out.points.push_back({mu, op.norm(F.F - F0.F), F.residual});
  }
  return out;
}

struct PairRunConfig {
  double alpha = 1.0;
  double nu = 1e-3;
  double d = 1.0;
  double t_start = 1.0;
  GridSpec grid{512, 4.0, {0.0, 0.0}};
  double omega = std::numeric_limits<double>::quiet_NaN();  // NaN: alpha/(pi d^2)
  double dt_cfl_factor = 0.5;
  double beta = 1.0;
  std::size_t radial_nodes = 1024;
  std::vector<double> times;  // sample times, ascending, >= t_start
};

inline double pair_rate(double alpha, double d) { return alpha / (std::numbers::pi * d * d); }

/// Symmetric Oseen pair from t_start, with the three error metrics at each
/// sample time. The field handed to on_sample is in the frame rotating at
/// cfg.omega; metrics are taken in the frame of the point-vortex pair.
inline std::vector<ErrorMetrics> pair_run(const PairRunConfig& cfg,
                                          const std::function<void(double, const GridField&)>& on_sample = nullptr) {
  require(!cfg.times.empty(), "pair run: no sample times");
  require(std::is_sorted(cfg.times.begin(), cfg.times.end()) && cfg.times.front() >= cfg.t_start,
          "pair run: sample times must be ascending and >= t_start");
  require(cfg.grid.L >= 3.0 * cfg.d, "pair run: box must satisfy L >= 3d");
  const double rate = pair_rate(cfg.alpha, cfg.d);
  SolverConfig sc;
  sc.nu = cfg.nu;
  sc.Omega = std::isnan(cfg.omega) ? rate : cfg.omega;
  sc.grid = cfg.grid;
  sc.t_start = cfg.t_start;
  sc.t_end = cfg.times.back();
  sc.dt_cfl_factor = cfg.dt_cfl_factor;

  MetricReferences ref;
  ref.alpha = cfg.alpha;
  ref.nu = cfg.nu;
  ref.d = cfg.d;
  ref.beta = cfg.beta;
  const auto op = gaussian_operator(cfg.radial_nodes);
  ref.F = std::make_shared<const ViscousCorrection>(solve_F_nu(*op, cfg.nu, cfg.alpha));
  ref.steady = std::make_shared<const SteadyPairExpansion>(build_expansion(op, 10.0, cfg.alpha));

  auto w = initial_pair(cfg.alpha, cfg.d, cfg.nu, cfg.t_start, cfg.grid);
  const double fr = w.frame_ratio();
  if (fr > sc.frame_limit)
    throw PreconditionError("pair run: initial vorticity violates the frame-decay condition (ratio " +
                            std::to_string(fr) + ")");
  ViscousSolver solver(sc);
  solver.filter(w);
  double t = cfg.t_start;
  std::vector<ErrorMetrics> out;
  for (double target : cfg.times) {
    solver.advance(w, t, target);
    if (on_sample) on_sample(t, w);
    const double lag = (rate - sc.Omega) * (t - cfg.t_start);
    out.push_back(error_metrics(lag == 0.0 ? w : rotated(w, lag), t, ref));
  }
  return out;
}

/// tau_k = lo (hi/lo)^{k/(count-1)}, k = 0..count-1.
inline std::vector<double> log_spaced(double lo, double hi, int count) {
  require(lo > 0.0 && hi > lo && count >= 2, "log_spaced: need 0 < lo < hi and count >= 2");
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1)));
  return out;
}

// ---------------------------------------------------------------- experiments

struct ExperimentSpec {
  std::string name;
  std::string command;  // pv | steady | fnu | visc | scaling
  ParamTable params;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 12345;

  static const std::map<std::string, std::vector<std::string>>& required_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"pv", {"input", "t-end"}},
        {"steady", {"d"}},
        {"fnu", {"nu-over-alpha"}},
        {"visc", {"nu", "d", "t-end"}},
        {"scaling", {"kind"}},
    };
    return keys;
  }

  void validate() const {
    const auto& keys = required_keys();
    auto it = keys.find(command);
    require(it != keys.end(), "unknown command '" + command + "' (pv, steady, fnu, visc, scaling)");
    require(!name.empty() && name.find('/') == std::string::npos, "experiment name must be a plain non-empty name");
    std::vector<std::string> need = it->second;
    if (command == "scaling" && params.has("kind")) {
      const auto kind = params.str("kind");
      if (kind == "residual")
        need.push_back("d");
      else if (kind == "thm1" || kind == "app3" || kind == "fnu")
        need.push_back("nu-over-alpha");
      else
        throw PreconditionError("scaling: unknown kind '" + kind + "' (residual, thm1, app3, fnu)");
    }
    std::string missing;
    for (const auto& k : need)
      if (!params.has(k)) missing += (missing.empty() ? "" : ", ") + k;
    if (!missing.empty()) throw PreconditionError(command + ": missing required keys: " + missing);
  }
};

struct RunRecord {
  std::filesystem::path dir;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, ScalingFitResult>> fits;  // (quantity, fit)
  double wall_seconds = 0.0;
};

namespace detail {

/// Exclusive ownership of a run directory for the lifetime of the object.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw PreconditionError("run directory " + dir.string() + " is locked by another process");
    const auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~DirLock() {
    ::close(fd_);
    std::filesystem::remove(path_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

class Outputs {
 public:
  Outputs(std::filesystem::path dir, RunRecord& rec) : dir_(std::move(dir)), rec_(rec) {}
  std::ofstream open(const std::string& file) {
    std::ofstream os(dir_ / file);
    if (!os) throw Error("cannot write " + (dir_ / file).string());
    os.precision(17);
    rec_.outputs.push_back(file);
    return os;
  }
  void field(const std::string& file, const GridField& f) {
    save((dir_ / file).string(), f);
    rec_.outputs.push_back(file);
  }

 private:
  std::filesystem::path dir_;
  RunRecord& rec_;
};

inline std::string csv_num(double v) { return format_number(v); }

inline void write_fits(Outputs& out, const RunRecord& rec) {
  auto os = out.open("fit.csv");
  os << "quantity,abscissa,exponent,lo,hi,prefactor,points\n";
  for (const auto& [q, f] : rec.fits)
    os << q << ',' << f.abscissa << ',' << csv_num(f.exponent) << ',' << csv_num(f.lo) << ',' << csv_num(f.hi)
       << ',' << csv_num(f.prefactor) << ',' << f.points << '\n';
}

/// gnuplot script that reads only the CSVs next to it.
inline void write_plot(Outputs& out, const std::string& csv, int xcol, const std::vector<std::pair<int, std::string>>& ycols,
                       bool loglog, const std::string& xlabel) {
  auto os = out.open("plot.gp");
  os << "set datafile separator ','\nset key autotitle columnhead\nset xlabel '" << xlabel << "'\n";
  if (loglog) os << "set logscale xy\n";
  os << "set terminal pngcairo size 900,600\nset output 'plot.png'\nplot ";
  for (std::size_t k = 0; k < ycols.size(); ++k)
    os << (k ? ", " : "") << "'" << csv << "' using " << xcol << ':' << ycols[k].first << " with linespoints title '"
       << ycols[k].second << "'";
  os << '\n';
}

inline GridSpec default_box(double d) { return {512, 4.0 * d, {0.0, 0.0}}; }

inline void run_pv(ParamTable& p, Outputs& out) {
  const auto input = p.str("input");
  std::ifstream is(input);
  require(static_cast<bool>(is), "pv: cannot open input '" + input + "'");
  const auto state = read_point_vortices(is);
  const double t_end = p.num("t-end");
  const double tol = p.num("tol", 1e-10);
  const auto tr = integrate(state, t_end, tol);
  auto os = out.open("pv.csv");
  os << 't';
  for (std::size_t i = 1; i <= state.size(); ++i) os << ",x" << i << ",y" << i;
  os << ",H,P1,P2,I\n";
  for (const auto& s : tr.states) {
    os << csv_num(s.time);
    for (const auto& z : s.positions) os << ',' << csv_num(z[0]) << ',' << csv_num(z[1]);
    const auto fi = first_integrals(s);
    os << ',' << csv_num(fi.H) << ',' << csv_num(fi.P1) << ',' << csv_num(fi.P2) << ',' << csv_num(fi.I) << '\n';
  }
  std::vector<std::pair<int, std::string>> ys;
  for (std::size_t i = 0; i < state.size(); ++i) ys.push_back({static_cast<int>(2 * i + 3), "y" + std::to_string(i + 1)});
  write_plot(out, "pv.csv", 2, ys, false, "x");
}

inline void run_steady(ParamTable& p, Outputs& out) {
  const auto profile = make_profile(p.str("profile", "gaussian"));
  const double d = p.num("d");
  const double alpha = p.num("alpha", 1.0);
  const double eps = p.num("epsilon", 1.0);
  require(d > 0.0 && alpha > 0.0 && eps > 0.0, "steady: d, alpha and epsilon must be positive");
  const auto grid = p.grid("grid", {256, 2.0 * d + 16.0 * eps, {0.0, 0.0}});
  const auto e = build_expansion(profile, d / eps, alpha);
  const std::pair<const char*, const SectorFunction*> sectors[] = {
      {"omega2.csv", &e.omega2}, {"omega3.csv", &e.omega3}, {"omega4_mode4.csv", &e.omega4.mode4},
      {"omega4_mode2.csv", &e.omega4.mode2}};
  for (const auto& [file, f] : sectors) {
    auto os = out.open(file);
    write_csv(os, *f);
  }
  out.field("field.vpf", rescaled_pair_field(e, alpha, d, eps, grid));
  const auto rep = residual_report(e);
  auto os = out.open("residual.csv");
  os << "d,residual_norm\n" << csv_num(d / eps) << ',' << csv_num(rep.x_norm) << '\n';
  write_plot(out, "omega2.csv", 1, {{3, "omega2 sin"}}, false, "r");
}

inline void write_fnu(const FnuSweep& sw, Outputs& out) {
  auto os = out.open("fnu.csv");
  os << "nu_over_alpha,diff_norm,residual\n";
  for (const auto& q : sw.points)
    os << csv_num(q.nu_over_alpha) << ',' << csv_num(q.diff) << ',' << csv_num(q.residual) << '\n';
  auto s = out.open("fnu_summary.csv");
  s << "f0_vs_omega2\n" << csv_num(sw.f0_defect) << '\n';
  write_plot(out, "fnu.csv", 1, {{2, "||F_nu - F_0||_X"}}, true, "nu/alpha");
}

inline void run_fnu(ParamTable& p, Outputs& out) {
  const auto mus = p.list("nu-over-alpha");
  const auto op = gaussian_operator(static_cast<std::size_t>(p.num("radial-nodes", 1024)));
  write_fnu(fnu_sweep(*op, mus), out);
}

inline PairRunConfig pair_config(ParamTable& p, double nu) {
  PairRunConfig c;
  c.nu = nu;
  c.alpha = p.num("alpha", 1.0);
  c.d = p.num("d", 1.0);
  c.t_start = p.num("t-start", 1.0);
  c.grid = p.grid("grid", default_box(c.d));
  const auto om = p.str("omega", "auto");
  if (om != "auto") c.omega = p.num("omega");
  c.dt_cfl_factor = p.num("dt-cfl", 0.5);
  c.beta = p.num("beta", 1.0);
  c.radial_nodes = static_cast<std::size_t>(p.num("radial-nodes", 1024));
  require(c.alpha > 0.0 && c.d > 0.0 && c.t_start > 0.0, "visc: alpha, d and t-start must be positive");
  return c;
}

inline void write_metrics(const std::vector<ErrorMetrics>& ms, Outputs& out) {
  auto os = out.open("metrics.csv");
  os << "t,nut_over_d2,err_thm1,err_app1,err_app3\n";
  for (const auto& m : ms)
    os << csv_num(m.t) << ',' << csv_num(m.tau) << ',' << csv_num(m.thm1) << ',' << csv_num(m.app1) << ','
       << csv_num(m.app3) << '\n';
}

inline std::vector<ErrorMetrics> run_pair(PairRunConfig c, Outputs& out, bool dumps) {
  int k = 0;
  auto ms = pair_run(c, [&](double, const GridField& w) {
    if (!dumps) return;
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05d.vpf", k++);
    out.field(name, w);
  });
  write_metrics(ms, out);
  write_plot(out, "metrics.csv", 2, {{3, "thm1"}, {4, "app1"}, {5, "app3"}}, true, "nu t / d^2");
  return ms;
}

inline void run_visc(ParamTable& p, Outputs& out) {
  const double nu = p.num("nu");
  require(nu > 0.0, "visc: nu must be positive");
  auto c = pair_config(p, nu);
  const double t_end = p.num("t-end");
  require(t_end >= c.t_start, "visc: t-end must be >= t-start");
  if (p.has("tau-samples")) {
    for (double tau : p.list("tau-samples")) c.times.push_back(tau * c.d * c.d / nu);
  } else {
    const double every = p.num("snap-every", 0.0);
    require(every >= 0.0, "visc: snap-every must be non-negative");
    c.times.push_back(c.t_start);
    for (int k = 1; every > 0.0 && c.t_start + k * every < t_end; ++k) c.times.push_back(c.t_start + k * every);
    if (t_end > c.t_start) c.times.push_back(t_end);
  }
  run_pair(c, out, true);
}

inline void run_scaling(ParamTable& p, Outputs& out, RunRecord& rec, std::uint64_t seed) {
  const auto kind = p.str("kind");
  if (kind == "residual") {
    const auto ds = p.list("d");
    const auto profile = make_profile(p.str("profile", "gaussian"));
    const auto pts = residual_sweep(build_expansion(profile, ds.front()), ds);
    auto os = out.open("residual.csv");
    os << "d,residual_norm,bare_norm,omega_tilde\n";
    std::vector<std::pair<double, double>> full, bare;
    for (const auto& q : pts) {
      os << csv_num(q.d) << ',' << csv_num(q.residual) << ',' << csv_num(q.bare) << ',' << csv_num(q.omega_tilde)
         << '\n';
      full.push_back({q.d, q.residual});
      bare.push_back({q.d, q.bare});
    }
    rec.fits.push_back({"residual_norm", fit_power_law(full, "d", seed)});
    rec.fits.push_back({"bare_norm", fit_power_law(bare, "d", seed)});
    write_plot(out, "residual.csv", 1, {{2, "full"}, {3, "bare"}}, true, "d");
  } else if (kind == "fnu") {
    const auto mus = p.list("nu-over-alpha");
    const auto op = gaussian_operator(static_cast<std::size_t>(p.num("radial-nodes", 1024)));
    const auto sw = fnu_sweep(*op, mus);
    write_fnu(sw, out);
    std::vector<std::pair<double, double>> pts;
    for (const auto& q : sw.points) pts.push_back({q.nu_over_alpha / (1.0 + q.nu_over_alpha), q.diff});
    rec.fits.push_back({"diff_norm", fit_power_law(pts, "nu/(nu+alpha)", seed)});
  } else {
    const auto mu = p.list("nu-over-alpha");
    require(mu.size() == 1 && mu[0] > 0.0, "scaling " + kind + ": nu-over-alpha must be one positive value");
    const double alpha = p.num("alpha", 1.0);
    auto c = pair_config(p, mu[0] * alpha);
    const double lo = p.num("tau-min", 0.002), hi = p.num("tau-max", 0.02);
    const int count = static_cast<int>(p.num("tau-count", 8));
    for (double tau : log_spaced(lo, hi, count)) c.times.push_back(tau * c.d * c.d / c.nu);
    const auto ms = run_pair(c, out, false);
    std::vector<std::pair<double, double>> thm1, app3;
    for (const auto& m : ms) {
      thm1.push_back({m.tau, m.thm1});
      app3.push_back({m.tau, m.app3});
    }
    // both fits come from the same run; the requested one is listed first
    auto f1 = std::make_pair(std::string("err_thm1"), fit_power_law(thm1, "nu t/d^2", seed));
    auto f3 = std::make_pair(std::string("err_app3"), fit_power_law(app3, "nu t/d^2", seed));
    if (kind == "thm1") {
      rec.fits.push_back(f1);
      rec.fits.push_back(f3);
    } else {
      rec.fits.push_back(f3);
      rec.fits.push_back(f1);
    }
  }
  write_fits(out, rec);
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

/// Runs one experiment into out_dir/name and writes manifest.txt there.
/// Outputs other than the manifest's two timestamp lines are deterministic.
inline RunRecord run_experiment(ExperimentSpec spec) {
  spec.validate();
  RunRecord rec;
  rec.dir = spec.out_dir / spec.name;
  std::filesystem::create_directories(rec.dir);
  detail::DirLock lock(rec.dir);
  const auto started = detail::utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  detail::Outputs out(rec.dir, rec);
  auto& p = spec.params;
  if (spec.command == "pv")
    detail::run_pv(p, out);
  else if (spec.command == "steady")
    detail::run_steady(p, out);
  else if (spec.command == "fnu")
    detail::run_fnu(p, out);
  else if (spec.command == "visc")
    detail::run_visc(p, out);
  else
    detail::run_scaling(p, out, rec, spec.seed);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream m(rec.dir / "manifest.txt");
  if (!m) throw Error("cannot write manifest in " + rec.dir.string());
  m << "name=" << spec.name << "\ncommand=" << spec.command << "\nseed=" << spec.seed
    << "\ncode_version=" << VPLAB_CODE_VERSION << '\n';
  for (const auto& [k, v] : p.entries()) m << "param." << k << '=' << v << '\n';
  for (const auto& f : rec.outputs) m << "output=" << f << '\n';
  m << "started_utc=" << started << "\nwall_seconds=" << detail::csv_num(rec.wall_seconds) << '\n';
  return rec;
}

}  // namespace vplab
