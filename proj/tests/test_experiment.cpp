#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "vplab/experiment.hpp"

using namespace vplab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
  const auto p = fs::temp_directory_path() / ("vplab_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// manifest without the two timestamp lines
std::string stable_manifest(const fs::path& p) {
  std::stringstream in(slurp(p)), out;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("started_utc=", 0) != 0 && line.rfind("wall_seconds=", 0) != 0) out << line << '\n';
  return out.str();
}

}  // namespace

TEST(FitPowerLaw, ExactCube) {
  std::vector<std::pair<double, double>> pts;
  for (double x : {0.5, 1.0, 2.0, 3.0, 7.0}) pts.push_back({x, x * x * x});
  const auto f = fit_power_law(pts, "x");
  EXPECT_NEAR(f.exponent, 3.0, 1e-10);
  EXPECT_NEAR(f.prefactor, 1.0, 1e-10);
  EXPECT_NEAR(f.lo, 3.0, 1e-10);
  EXPECT_NEAR(f.hi, 3.0, 1e-10);
  EXPECT_EQ(f.points, 5u);
}

TEST(FitPowerLaw, NoisyPowerLaw) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k < 12; ++k) {
    const double x = std::pow(10.0, -2.0 + k / 6.0);
    pts.push_back({x, std::pow(x, 1.5) * (1.0 + 0.01 * noise(rng))});
  }
  const auto f = fit_power_law(pts);
  EXPECT_GE(f.exponent, 1.4);
  EXPECT_LE(f.exponent, 1.6);
  EXPECT_LE(f.lo, f.exponent);
  EXPECT_GE(f.hi, f.exponent);
  EXPECT_LT(f.hi - f.lo, 0.05);
}

TEST(FitPowerLaw, ConstantAndDeterministic) {
  const std::vector<std::pair<double, double>> pts{{1, 2}, {2, 2}, {4, 2}, {8, 2}};
  const auto f = fit_power_law(pts);
  EXPECT_NEAR(f.exponent, 0.0, 1e-14);
  EXPECT_LE(f.lo, 0.0 + 1e-14);
  EXPECT_GE(f.hi, 0.0 - 1e-14);

  const std::vector<std::pair<double, double>> noisy{{1, 1}, {2, 2.3}, {4, 3.7}, {8, 9.1}, {16, 15}};
  const auto a = fit_power_law(noisy, "x", 99), b = fit_power_law(noisy, "x", 99);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
}

TEST(FitPowerLaw, Errors) {
  EXPECT_THROW(fit_power_law({{1, 1}, {2, 2}, {3, 3}}), PreconditionError);
  EXPECT_THROW(fit_power_law({{1, 1}, {2, 0}, {3, 3}, {4, 4}}), PreconditionError);
  EXPECT_THROW(fit_power_law({{1, 1}, {-2, 2}, {3, 3}, {4, 4}}), PreconditionError);
  EXPECT_THROW(fit_power_law({{2, 1}, {2, 2}, {2, 3}, {2, 4}}), PreconditionError);
}

TEST(ParamTable, ParseAndResolve) {
  ParamTable p;
  std::istringstream in("# comment\nd = 6,8, 12\n\nalpha=2.5  # trailing\ngrid=256,4\n");
  p.parse(in);
  EXPECT_EQ(p.list("d"), (std::vector<double>{6, 8, 12}));
  EXPECT_EQ(p.num("alpha"), 2.5);
  EXPECT_EQ(p.grid("grid", {64, 1.0, {0, 0}}).n, 256);
  EXPECT_EQ(p.num("beta", 0.1), 0.1);
  EXPECT_EQ(p.str("beta"), "0.1");  // defaults are recorded
  EXPECT_THROW(p.num("missing"), PreconditionError);

  std::istringstream bad("just words\n");
  EXPECT_THROW(p.parse(bad), PreconditionError);
  p.set("x", "1e-3junk");
  EXPECT_THROW(p.num("x"), PreconditionError);
  p.set("g", "100.5,3");
  EXPECT_THROW(p.grid("g", {64, 1.0, {0, 0}}), PreconditionError);
}

TEST(ExperimentSpec, MissingKeysAreListed) {
  ExperimentSpec s;
  s.name = "x";
  s.command = "visc";
  try {
    s.validate();
    FAIL() << "expected a validation error";
  } catch (const PreconditionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("nu"), std::string::npos);
    EXPECT_NE(msg.find("d"), std::string::npos);
    EXPECT_NE(msg.find("t-end"), std::string::npos);
  }
  s.command = "scaling";
  s.params.set("kind", "residual");
  EXPECT_THROW(s.validate(), PreconditionError);
  s.params.set("kind", "nonsense");
  EXPECT_THROW(s.validate(), PreconditionError);
  s.command = "bogus";
  EXPECT_THROW(s.validate(), PreconditionError);
}

TEST(RunExperiment, PointVortexRunIsDeterministic) {
  const auto dir = scratch("pv");
  {
    std::ofstream in(dir / "pair.txt");
    in << "# alpha x y\n1 0.5 0\n1 -0.5 0\n";
  }
  ExperimentSpec s;
  s.name = "pair";
  s.command = "pv";
  s.out_dir = dir;
  s.params.set("input", (dir / "pair.txt").string());
  s.params.set("t-end", "2");
  const auto a = run_experiment(s);
  const auto csv = slurp(a.dir / "pv.csv");
  const auto man = stable_manifest(a.dir / "manifest.txt");
  const auto b = run_experiment(s);
  EXPECT_EQ(csv, slurp(b.dir / "pv.csv"));
  EXPECT_EQ(man, stable_manifest(b.dir / "manifest.txt"));

  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x1,y1,x2,y2,H,P1,P2,I");
  EXPECT_NE(man.find("param.tol=1e-10"), std::string::npos);
  EXPECT_NE(man.find("code_version="), std::string::npos);
  EXPECT_TRUE(fs::exists(a.dir / "plot.gp"));
  EXPECT_FALSE(fs::exists(a.dir / ".lock"));
  fs::remove_all(dir);
}

TEST(RunExperiment, LockedDirectoryIsRefused) {
  const auto dir = scratch("lock");
  fs::create_directories(dir / "held");
  std::ofstream(dir / "held" / ".lock") << "1\n";
  ExperimentSpec s;
  s.name = "held";
  s.command = "fnu";
  s.out_dir = dir;
  s.params.set("nu-over-alpha", "0.1");
  EXPECT_THROW(run_experiment(s), PreconditionError);
  fs::remove_all(dir);
}

TEST(RunExperiment, FnuScalingWritesFit) {
  const auto dir = scratch("fnu");
  ExperimentSpec s;
  s.name = "fnu";
  s.command = "scaling";
  s.out_dir = dir;
  s.params.set("kind", "fnu");
  s.params.set("nu-over-alpha", "1e-4,5e-5,2.5e-5,1.25e-5");
  s.params.set("radial-nodes", "512");
  const auto r = run_experiment(s);
  ASSERT_EQ(r.fits.size(), 1u);
  // deep in the linear regime
  EXPECT_NEAR(r.fits[0].second.exponent, 1.0, 0.02);
  EXPECT_TRUE(fs::exists(r.dir / "fit.csv"));
  EXPECT_TRUE(fs::exists(r.dir / "fnu.csv"));
  fs::remove_all(dir);
}

TEST(RunExperiment, ViscousSnapshotsAndMetrics) {
  const auto dir = scratch("visc");
  ExperimentSpec s;
  s.name = "v";
  s.command = "visc";
  s.out_dir = dir;
  for (auto [k, v] : {std::pair{"nu", "0.01"}, {"d", "2.5"}, {"t-start", "7"}, {"t-end", "7.5"}, {"grid", "128,8"},
                      {"snap-every", "0.25"}, {"radial-nodes", "512"}})
    s.params.set(k, v);
  const auto r = run_experiment(s);
  for (const char* f : {"snap_00000.vpf", "snap_00001.vpf", "snap_00002.vpf", "metrics.csv"})
    EXPECT_TRUE(fs::exists(r.dir / f)) << f;
  const auto csv = slurp(r.dir / "metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,nut_over_d2,err_thm1,err_app1,err_app3");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto last = load((r.dir / "snap_00002.vpf").string());
  EXPECT_NEAR(last.integral(), 2.0, 1e-10);

  // a frame that does not co-rotate gives the same metrics after the rotation back
  auto lab = s;
  lab.name = "lab";
  lab.params.set("omega", "0");
  const auto rl = run_experiment(lab);
  std::ifstream a(r.dir / "metrics.csv"), b(rl.dir / "metrics.csv");
  std::string la, lb;
  std::getline(a, la);
  std::getline(b, lb);
  for (int k = 0; k < 3; ++k) {
    double va[5], vb[5];
    char c;
    a >> va[0] >> c >> va[1] >> c >> va[2] >> c >> va[3] >> c >> va[4];
    b >> vb[0] >> c >> vb[1] >> c >> vb[2] >> c >> vb[3] >> c >> vb[4];
    EXPECT_NEAR(va[2], vb[2], 1e-4) << k;
  }
  fs::remove_all(dir);
}
