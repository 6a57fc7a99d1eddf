#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "uavsec/experiment.hpp"
#include "uavsec/validation.hpp"

namespace {

using namespace uavsec;

struct Options {
  std::string spec_path;
  std::string out_dir;
  std::vector<std::string> schemes;
  std::string sweep;
  std::string solver_config;
  bool quiet = false;
};

SolverConfig solver_config_from(const Options &o) {
  return o.solver_config.empty() ? SolverConfig{} : load_solver_config(o.solver_config);
}

int run_optimize(const Options &o) {
  ExperimentSpec spec;
  SolverConfig cfg;
  try {
    spec = load_spec(o.spec_path);
    if (!o.out_dir.empty()) spec.output.directory = o.out_dir;
    if (!o.schemes.empty()) {
      spec.schemes.clear();
      for (const std::string &name : o.schemes) {
        const auto s = parse_scheme(name);
        if (!s) throw SpecError("--scheme: unknown scheme '" + name + "'");
        spec.schemes.push_back(*s);
      }
    }
    if (!o.sweep.empty()) spec.sweep = parse_sweep_arg(o.sweep);
    validate(spec);
    cfg = solver_config_from(o);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    std::filesystem::create_directories(spec.output.directory);
    write_text(std::filesystem::path(spec.output.directory) / "spec.json", canonical_text(spec));
    const ExperimentResult res = run_experiment(spec, cfg, o.quiet ? nullptr : &std::cout);
    if (!o.quiet && res.exit_code != 0) std::cerr << "one or more cells failed\n";
    return res.exit_code;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_verify(const Options &o) {
  Scenario s;
  SolverConfig cfg;
  try {
    s = build_scenario(load_spec(o.spec_path).scenario);
    cfg = solver_config_from(o);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::vector<validation::OracleReport> reports;
  std::mt19937_64 rng(cfg.rng_seed);

  // Closed-form power against the grid oracle: random instances plus
  // 8-slot windows of the scenario's fly-hover-fly gains.
  const Trajectory init = fly_hover_fly_init(s);
  const SlotGains gains = slot_gains(init, s);
  std::vector<validation::PowerInstance> instances;
  for (int i = 0; i < 100; ++i) instances.push_back(validation::random_power_instance(rng));
  if (gains.a.size() >= 8) {
    std::uniform_int_distribution<std::size_t> first(0, gains.a.size() - 8);
    for (int i = 0; i < 20; ++i) {
      const std::size_t f = first(rng);
      validation::PowerInstance inst;
      inst.gains.a.assign(gains.a.begin() + f, gains.a.begin() + f + 8);
      inst.gains.b.assign(gains.b.begin() + f, gains.b.begin() + f + 8);
      inst.p_ave = s.p_ave;
      inst.p_peak = s.p_peak;
      instances.push_back(inst);
    }
  }
  reports.push_back(validation::power_oracle_check(instances, 1e-5));

  reports.push_back(validation::surrogate_bound_sampler(s, 1000, cfg.rng_seed));

  const PowerProfile constant{std::vector<double>(s.slots(), s.p_ave)};
  const ReducedSurrogate objective(make_surrogate_point(init, s), constant, s, cfg.eta_floor);
  reports.push_back(validation::finite_diff_gradient_check(objective, init));

  bool ok = true;
  for (const auto &r : reports) {
    std::cout << validation::describe(r) << "\n";
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Secrecy-rate maximization for a UAV relaying to ground nodes"};
  app.require_subcommand(1);
  Options o;

  CLI::App *opt = app.add_subcommand("optimize", "Run every scheme and sweep cell of a spec");
  opt->add_option("--spec", o.spec_path, "Experiment spec (JSON)")->required();
  opt->add_option("--out", o.out_dir, "Output directory (overrides the spec)");
  opt->add_option("--scheme", o.schemes, "Scheme(s) to run (overrides the spec)");
  opt->add_option("--sweep", o.sweep, "Sweep as <param>=<start>:<stop>:<step>");
  opt->add_option("--solver-config", o.solver_config, "Solver settings (JSON)");
  opt->add_flag("--quiet", o.quiet, "Suppress per-cell progress");

  CLI::App *ver = app.add_subcommand("verify", "Run the numerical oracles on a spec's scenario");
  ver->add_option("--spec", o.spec_path, "Experiment spec (JSON)")->required();
  ver->add_option("--solver-config", o.solver_config, "Solver settings (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*opt) return run_optimize(o);
  return run_verify(o);
}
