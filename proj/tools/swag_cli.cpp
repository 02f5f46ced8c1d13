#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "swag/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sparse wrapper search: libraries of strong low-dimensional learners"};
  app.require_subcommand(1);

  unsigned workers = swag::default_worker_count();
  bool quiet = false;
  app.add_option("--workers", workers, "Concurrent candidate evaluations")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Silence progress lines on standard error");

  std::string config_path;
  std::optional<std::string> output_dir;
  bool baseline = false;
  auto* run = app.add_subcommand("run", "Run the search from a config file and write artifacts");
  run->add_option("config", config_path, "Run configuration file")->required();
  run->add_option("--output-dir", output_dir, "Overrides [output] directory");
  run->add_flag("--baseline", baseline, "Also score the mechanism on all attributes");

  std::string library_path;
  std::optional<double> delta;
  std::optional<std::string> dims;
  bool json = false;
  auto* report = app.add_subcommand("report", "Summarize a library without retraining");
  report->add_option("library", library_path, "library.json from a run")->required();
  report->add_option("--delta", delta, "Median-rule quantile (default: the run's)");
  report->add_option("--dims", dims, "Keep learners with dimension in a..b");
  report->add_flag("--json", json, "Print JSON instead of a table row");

  std::string eval_library;
  std::string data_path;
  bool eval_json = false;
  auto* eval = app.add_subcommand("eval", "Refit final learners and report held-out errors");
  eval->add_option("library", eval_library, "library.json from a run")->required();
  eval->add_option("data", data_path, "CSV to evaluate on")->required();
  eval->add_flag("--json", eval_json, "Print JSON");

  for (auto* sub : {run, report, eval}) {
    sub->add_option("--workers", workers, "Concurrent candidate evaluations")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "Silence progress lines on standard error");
  }

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    swag::cli::RunFlags flags;
    flags.workers = workers;
    flags.quiet = quiet;
    flags.output_dir = output_dir;
    flags.baseline = baseline;
    return swag::cli::cmd_run(config_path, flags);
  }
  if (*report) {
    swag::cli::ReportFlags flags;
    flags.delta = delta;
    flags.json = json;
    try {
      if (dims) flags.dims = swag::cli::parse_dims_flag(*dims);
    } catch (const std::exception& e) {
      swag::cli::report_error(std::cerr, e);
      return 1;
    }
    return swag::cli::cmd_report(library_path, flags);
  }
  swag::cli::EvalFlags flags;
  flags.json = eval_json;
  return swag::cli::cmd_eval(eval_library, data_path, flags);
}
