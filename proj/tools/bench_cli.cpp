// Command-line front end for the weighted-ensemble benchmarking toolkit.
//
// Subcommands:
//   reference  --config c.json                 plain-MD ground truth + TICA
//   tica-fit   --config c.json traj.wetrj      TICA model from a trajectory
//   we-run     --config c.json tica_model.json [gt.wetrj]   checkpointed WE
//   benchmark  --config c.json gt.wetrj we_dir report + models + plots
//   report     report.json                     pretty-print a report
//
// Exit codes: 0 success, 2 configuration/usage error, 3 numeric failure.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wesbench/bench/bench.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

wesbench::BenchmarkConfig load(const CommonArgs& args) {
  wesbench::BenchmarkConfig cfg = wesbench::load_config(args.config_path);
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.propagator.seed_base = *args.seed;
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "benchmark config JSON")
      ->required();
  cmd->add_option("--seed", args.seed,
                  "override the config seed for this invocation");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted-ensemble sampling benchmark toolkit"};
  app.require_subcommand(1);

  CommonArgs ref_args;
  CLI::App* ref = app.add_subcommand(
      "reference", "run plain MD, write gt.wetrj and tica_model.json");
  add_common(ref, ref_args);

  CommonArgs fit_args;
  std::string fit_traj;
  CLI::App* fit = app.add_subcommand(
      "tica-fit", "fit a TICA model on an existing trajectory file");
  add_common(fit, fit_args);
  fit->add_option("trajectory", fit_traj, "input .wetrj file")->required();

  CommonArgs we_args;
  std::string we_model, we_gt;
  CLI::App* we = app.add_subcommand(
      "we-run", "run (or resume) a weighted-ensemble simulation");
  add_common(we, we_args);
  we->add_option("tica_model", we_model, "tica_model.json to project with")
      ->required();
  we->add_option("reference", we_gt,
                 "reference .wetrj (needed for coverage stopping)");

  CommonArgs bench_args;
  std::string bench_gt, bench_we;
  CLI::App* bench = app.add_subcommand(
      "benchmark", "compare a WE run against reference data");
  add_common(bench, bench_args);
  bench->add_option("reference", bench_gt, "reference .wetrj")->required();
  bench->add_option("we_run", bench_we, "WE run directory")->required();

  std::string report_path;
  CLI::App* rep =
      app.add_subcommand("report", "pretty-print an existing report.json");
  rep->add_option("report", report_path, "report.json path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ref)
      wesbench::cmd_reference(load(ref_args));
    else if (*fit)
      wesbench::cmd_tica_fit(load(fit_args), fit_traj);
    else if (*we)
      wesbench::cmd_we(load(we_args), we_model,
                       we_gt.empty()
                           ? std::nullopt
                           : std::optional<std::filesystem::path>(we_gt));
    else if (*bench)
      wesbench::cmd_benchmark(load(bench_args), bench_gt, bench_we);
    else if (*rep)
      wesbench::cmd_report(report_path);
  } catch (const wesbench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const wesbench::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const wesbench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
