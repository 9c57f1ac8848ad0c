#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "efsgd/harness.hpp"

namespace {

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
  } else {
    efsgd::write_output(path, content);
  }
}

int cmd_counterexample(int id, bool as_json, const std::string& out) {
  const efsgd::CounterExampleReport report = efsgd::reproduce_counterexample(id);
  const std::string text =
      as_json ? efsgd::counterexample_json(report).dump(2) + "\n" : efsgd::counterexample_text(report);
  write_or_print(out, text);
  if (!out.empty() && !report.passes()) std::cerr << efsgd::counterexample_text(report);
  return report.passes() ? 0 : kExitFailedCheck;
}

int cmd_simulate(const std::string& config_path, const std::string& csv_override, const std::string& summary_override) {
  efsgd::ExperimentConfig cfg = efsgd::load_experiment(config_path);
  if (!csv_override.empty()) cfg.output.csv = csv_override;
  if (!summary_override.empty()) cfg.output.summary = summary_override;
  const efsgd::SimulationOutput result = efsgd::simulate(cfg);
  const std::string summary = efsgd::summary_json(result.summary).dump(2) + "\n";
  write_or_print(cfg.output.csv, result.csv);
  if (!cfg.output.summary.empty()) {
    efsgd::write_output(cfg.output.summary, summary);
  } else {
    std::cerr << summary;
  }
  return result.summary.passes ? 0 : kExitFailedCheck;
}

int cmd_sweep(const std::string& config_path, const std::string& csv_override) {
  efsgd::SweepConfig cfg = efsgd::load_sweep(config_path);
  if (!csv_override.empty()) cfg.base.output.csv = csv_override;
  const efsgd::SweepOutput result = efsgd::sweep(cfg);
  write_or_print(cfg.base.output.csv, result.csv);
  if (result.errors > 0) {
    std::cerr << result.errors << " of " << result.rows << " rows failed\n";
    return kExitFailedCheck;
  }
  return 0;
}

int cmd_verify(std::uint64_t seed, bool as_json, const std::string& out) {
  const std::vector<efsgd::SuiteEntry> entries = efsgd::run_verification_suite(seed);
  const nlohmann::ordered_json summary = efsgd::verification_json(entries);
  write_or_print(out, as_json ? summary.dump(2) + "\n" : efsgd::verification_text(entries));
  return summary["passes"].get<bool>() ? 0 : kExitFailedCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verification lab for error-feedback SGD with two-sided compression"};
  app.require_subcommand(1);

  int ce_id = 0;
  bool ce_json = false;
  std::string ce_out;
  auto* ce = app.add_subcommand("counterexample", "Replay a counter-example and check every printed value");
  ce->add_option("--id", ce_id, "Counter-example id")->required()->check(CLI::Range(1, 3));
  ce->add_flag("--json", ce_json, "Machine-readable report");
  ce->add_option("--out", ce_out, "Report file (relative paths go under $EFSGD_OUTPUT_DIR)");

  std::string sim_config, sim_csv, sim_summary;
  auto* sim = app.add_subcommand("simulate", "Run a configured experiment; write trajectory CSV and summary JSON");
  sim->add_option("config", sim_config, "INI config file")->required();
  sim->add_option("--csv", sim_csv, "Override [output] csv");
  sim->add_option("--summary", sim_summary, "Override [output] summary");

  efsgd::BoundRequest req;
  bool bounds_json = false;
  auto* bounds = app.add_subcommand("bounds", "Evaluate a bound");
  bounds->add_option("which", req.which, "lemma-a | theorem2 | remark1-u | theorem1 | theorem-a | corollary2")
      ->required();
  bounds->add_option("--delta", req.delta, "Compressor delta in (0, 1)")->required();
  bounds->add_option("--g", req.G, "Gradient second-moment bound G");
  bounds->add_option("--t", req.t, "Round index for theorem2");
  bounds->add_option("--eta0", req.eta0, "eta_0");
  bounds->add_option("--eta1", req.eta1, "eta_1");
  bounds->add_option("--schedule", req.schedule, "Schedule spec, e.g. counterex1 or constant:0.05");
  bounds->add_option("--L", req.L, "Smoothness constant");
  bounds->add_option("--sigma", req.sigma, "Noise level");
  bounds->add_option("--M", req.M, "Workers");
  bounds->add_option("--T", req.T, "Rounds");
  bounds->add_option("--f-gap", req.f_gap, "f(x_0) - f*");
  bounds->add_flag("--json", bounds_json, "Machine-readable output");

  std::string sweep_config, sweep_csv;
  auto* sw = app.add_subcommand("sweep", "Run a grid of experiments; one CSV row per grid point");
  sw->add_option("config", sweep_config, "INI config file with a [grid] section")->required();
  sw->add_option("--csv", sweep_csv, "Override [output] csv");

  std::uint64_t verify_seed = 20240601;
  bool verify_json = false;
  std::string verify_out;
  auto* ver = app.add_subcommand("verify", "Run the full verification suite");
  ver->add_option("--seed", verify_seed, "Seed for the randomized properties");
  ver->add_flag("--json", verify_json, "Machine-readable output");
  ver->add_option("--out", verify_out, "Output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ce) return cmd_counterexample(ce_id, ce_json, ce_out);
    if (*sim) return cmd_simulate(sim_config, sim_csv, sim_summary);
    if (*sw) return cmd_sweep(sweep_config, sweep_csv);
    if (*ver) return cmd_verify(verify_seed, verify_json, verify_out);
    if (*bounds) {
      const nlohmann::ordered_json result = efsgd::evaluate_bound(req);
      if (bounds_json) {
        std::cout << result.dump(2) << "\n";
      } else {
        std::cout << efsgd::format_double(result["value"].get<double>()) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
