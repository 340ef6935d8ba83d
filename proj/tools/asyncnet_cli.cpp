// asyncnet command-line front end.
//
//   asyncnet theory   -c cfg.json [-o theory.json]
//   asyncnet simulate -c cfg.json -o outdir [--seed S] [--threads K] [--svg]
//   asyncnet compare  -c cfg.json -o outdir [--seed S] [--threads K]
//   asyncnet demo <name> [--seed S] [--threads K]
//
// Exit codes: 0 ok, 1 check failed or I/O error, 2 config error,
// 3 math precondition, 4 divergence.

#include "asyncnet/config.hpp"
#include "asyncnet/demos.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace asyncnet;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfig = 2, kPrecondition = 3, kDivergence = 4 };

struct Options {
  std::string config, outdir, demo;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool svg = false;
};

ConfigOverrides overrides(const Options& o) {
  ConfigOverrides ov;
  if (o.seed) {
    ov.seed = o.seed;
  } else if (const char* env = std::getenv("ASYNCNET_SEED")) {
    try {
      ov.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("ASYNCNET_SEED", "expected a nonnegative integer");
    }
  }
  if (o.threads > 0) ov.threads = o.threads;
  return ov;
}

std::string path_in(const std::string& dir, const char* name) { return (std::filesystem::path(dir) / name).string(); }

void print_report(const SteadyStateReport& r) {
  if (r.diverged) {
    std::cout << "diverged at iteration " << r.diverged_iteration << " (run " << r.diverged_run << ", agent "
              << r.diverged_agent << ")\n";
    return;
  }
  std::cout << "steady-state MSD " << r.msd << " +- " << r.msd_se << ", EMSE " << r.emse << " +- " << r.emse_se
            << (r.converged ? "" : " (not converged)") << "\n";
}

int cmd_theory(const Options& o) {
  const ParsedConfig pc = load_config(o.config, overrides(o));
  const std::string out = to_json(predict(pc.spec)).dump(2) + "\n";
  if (!o.outdir.empty()) write_file_atomic(o.outdir, out);
  std::cout << out;
  return kOk;
}

int cmd_simulate(const Options& o) {
  const ParsedConfig pc = load_config(o.config, overrides(o));
  const ExperimentResult res = run_experiment(pc.spec);
  write_file_atomic(path_in(o.outdir, "curves.csv"), curve_csv(res.curve));
  write_file_atomic(path_in(o.outdir, "report.json"), to_json(res.report).dump(2) + "\n");
  if (o.svg) write_file_atomic(path_in(o.outdir, "curves.svg"), curve_svg(res.curve, res.report.strategy));
  print_report(res.report);
  return res.report.diverged ? kDivergence : kOk;
}

int cmd_compare(const Options& o) {
  const ParsedConfig pc = load_config(o.config, overrides(o));
  const TheoryRecord th = predict(pc.spec);
  const ExperimentResult res = run_experiment(pc.spec);
  const Comparison cmp = compare_theory(res.report, th, pc.tolerance);
  write_file_atomic(path_in(o.outdir, "curves.csv"), curve_csv(res.curve));
  write_file_atomic(path_in(o.outdir, "report.json"), to_json(res.report).dump(2) + "\n");
  write_file_atomic(path_in(o.outdir, "theory.json"), to_json(th).dump(2) + "\n");
  write_file_atomic(path_in(o.outdir, "comparison.json"), to_json(cmp).dump(2) + "\n");
  print_report(res.report);
  if (!cmp.comparable) {
    std::cout << cmp.reason << "\n";
    return res.report.diverged ? kDivergence : kCheckFailed;
  }
  for (const auto& r : cmp.rows)
    std::cout << r.quantity << ": empirical " << r.empirical << ", theory " << r.theory << ", rel. error " << r.rel_error
              << " (tol " << r.tolerance << ") " << (r.pass ? "PASS" : "FAIL") << "\n";
  return cmp.pass ? kOk : kCheckFailed;
}

int cmd_demo(const Options& o) {
  const auto& names = demo_names();
  if (std::find(names.begin(), names.end(), o.demo) == names.end()) {
    std::cerr << "unknown demo '" << o.demo << "'; available:";
    for (const auto& n : names) std::cerr << ' ' << n;
    std::cerr << "\n";
    return kConfig;
  }
  const ConfigOverrides ov = overrides(o);
  const DemoResult d = run_demo(o.demo, ov.seed.value_or(2024), o.threads);
  std::cout << "demo " << d.name << "\n";
  for (const auto& l : d.lines) std::cout << "  " << l << "\n";
  std::cout << (d.pass ? "PASS" : "FAIL") << "\n";
  return d.pass ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronous and asynchronous adaptation over multi-agent networks"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto* theory = app.add_subcommand("theory", "closed-form MSD / rate predictions as JSON");
  theory->add_option("-c,--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  theory->add_option("-o,--output", o.outdir, "also write the report to this file");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo learning curves and steady-state report");
  auto* compare = app.add_subcommand("compare", "simulate and compare against theory");
  for (auto* sc : {simulate, compare}) {
    sc->add_option("-c,--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sc->add_option("-o,--output", o.outdir, "output directory")->required();
    sc->add_option("--seed", seed, "master seed (falls back to ASYNCNET_SEED, then the config)");
    sc->add_option("--threads", o.threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  }
  simulate->add_flag("--svg", o.svg, "also write a log-scale plot of the learning curves");

  auto* demo = app.add_subcommand("demo", "run a bundled scenario");
  demo->add_option("name", o.demo, "consensus-instability | nfold | async-vs-sync | equalization")->required();
  demo->add_option("--seed", seed, "master seed");
  demo->add_option("--threads", o.threads, "worker threads")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  for (auto* sc : {simulate, compare, demo})
    if (sc->parsed() && sc->count("--seed")) o.seed = seed;

  try {
    if (theory->parsed()) return cmd_theory(o);
    if (simulate->parsed()) return cmd_simulate(o);
    if (compare->parsed()) return cmd_compare(o);
    if (demo->parsed()) return cmd_demo(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition violated [" << e.invariant() << "]: " << e.what() << "\n";
    return kPrecondition;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kOk;
}
