// vplab <command> [flags]: runs one experiment into <out>/<name> and prints
// the run directory and any scaling fits.
//
// exit codes: 0 success, 2 validation error, 3 numerical failure, 1 other.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vplab/experiment.hpp"

namespace {

struct Flag {
  const char* key;
  const char* help;
};

const std::map<std::string, std::vector<Flag>> kFlags{
    {"pv",
     {{"t-end", "final time"}, {"tol", "adaptive tolerance (1e-10)"}}},
    {"steady",
     {{"profile", "gaussian | algebraic | exponential:<gamma> (gaussian)"},
      {"d", "separation"},
      {"alpha", "circulation (1)"},
      {"epsilon", "core size (1)"},
      {"grid", "n,L of the field dump"}}},
    {"fnu", {{"nu-over-alpha", "comma-separated list"}, {"radial-nodes", "radial grid size (1024)"}}},
    {"visc",
     {{"nu", "viscosity"},
      {"alpha", "circulation of each vortex (1)"},
      {"d", "separation"},
      {"t-start", "start time, Oseen data of this age (1)"},
      {"t-end", "final time"},
      {"grid", "n,L (512,4d)"},
      {"omega", "frame rate, auto = alpha/(pi d^2)"},
      {"snap-every", "snapshot interval, 0 = start and end only"},
      {"tau-samples", "snapshot at these nu t/d^2 instead"},
      {"dt-cfl", "CFL factor (0.5)"},
      {"beta", "Z_beta weight (1)"},
      {"radial-nodes", "radial grid of the reference profiles (1024)"}}},
    {"scaling",
     {{"d", "separations (residual)"},
      {"profile", "radial profile (residual)"},
      {"nu-over-alpha", "list (fnu) or single value (thm1, app3)"},
      {"alpha", "circulation (1)"},
      {"t-start", "start time (1)"},
      {"grid", "n,L (512,4d)"},
      {"omega", "frame rate, auto = alpha/(pi d^2)"},
      {"tau-min", "first nu t/d^2 sample (0.002)"},
      {"tau-max", "last nu t/d^2 sample (0.02)"},
      {"tau-count", "log-spaced samples (8)"},
      {"dt-cfl", "CFL factor (0.5)"},
      {"beta", "Z_beta weight (1)"},
      {"radial-nodes", "radial grid size (1024)"}}},
};

const std::map<std::string, const char*> kAbout{
    {"pv", "point-vortex trajectory and invariants"},
    {"steady", "steady co-rotating pair: profile sectors, field, residual"},
    {"fnu", "viscous profile correction F_nu against F_0"},
    {"visc", "viscous pair run with error metrics"},
    {"scaling", "scaling fit: residual | thm1 | app3 | fnu"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vortex pair laboratory"};
  app.require_subcommand(1);
  std::string config, out = "runs", name;
  std::uint64_t seed = 12345;
  app.add_option("--config", config, "key=value file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output root (runs)");
  app.add_option("--name", name, "run name (defaults to the command)");
  app.add_option("--seed", seed, "bootstrap seed (12345)");

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [cmd, flags] : kFlags) {
    auto* sub = app.add_subcommand(cmd, kAbout.at(cmd));
    subs[cmd] = sub;
    auto& store = values[cmd];
    if (cmd == "scaling") sub->add_option("kind", store["kind"], "residual | thm1 | app3 | fnu");
    if (cmd == "pv") sub->add_option("input", store["input"], "file of lines 'alpha x y'");
    for (const auto& f : flags) {
      const std::string flag = "--" + std::string(f.key);
      sub->add_option(flag, store[f.key], f.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    vplab::ExperimentSpec spec;
    for (const auto& [cmd, sub] : subs)
      if (sub->parsed()) spec.command = cmd;
    spec.name = name.empty() ? spec.command : name;
    spec.out_dir = out;
    spec.seed = seed;
    if (!config.empty()) {
      std::ifstream is(config);
      spec.params.parse(is, config);
    }
    auto* sub = subs.at(spec.command);
    for (const auto& [key, value] : values[spec.command]) {
      const bool positional = key == "kind" || key == "input";
      const auto* opt = sub->get_option_no_throw(positional ? key : "--" + key);
      if (opt && opt->count() > 0) spec.params.set(key, value);
    }

    const auto rec = vplab::run_experiment(spec);
    std::cout << "run " << rec.dir.string() << '\n';
    for (const auto& f : rec.outputs) std::cout << "  " << f << '\n';
    for (const auto& [q, f] : rec.fits)
      std::cout << "fit " << q << " vs " << f.abscissa << ": exponent " << f.exponent << " [" << f.lo << ", " << f.hi
                << "] from " << f.points << " points\n";
    std::cout << "wall " << rec.wall_seconds << " s\n";
    return 0;
  } catch (const vplab::PreconditionError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const vplab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
