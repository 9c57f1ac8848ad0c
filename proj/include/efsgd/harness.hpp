#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "efsgd/bounds.hpp"
#include "efsgd/config.hpp"
#include "efsgd/verification.hpp"

namespace efsgd {

/// Environment variable naming the directory relative output paths resolve against.
inline constexpr const char* kOutputDirEnv = "EFSGD_OUTPUT_DIR";

/// Relative paths are placed under $EFSGD_OUTPUT_DIR when it is set.
std::filesystem::path resolve_output_path(const std::string& path);
/// Writes `content` to resolve_output_path(path), creating parent directories.
std::filesystem::path write_output(const std::string& path, const std::string& content);

/// 17 significant digits, "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double v);

nlohmann::ordered_json counterexample_json(const CounterExampleReport& report);
std::string counterexample_text(const CounterExampleReport& report);

/// Everything `simulate` reports besides the per-round table.
struct RunSummary {
  std::string problem;
  std::string schedule;
  std::string worker_compressor;
  std::string server_compressor;
  double delta = 0.0;  // min of the two declared deltas, used by every bound
  double G_declared = 0.0;
  double G_effective = 0.0;  // max(G_declared, largest observed gradient norm)
  double L = 0.0;
  double sigma = 0.0;
  double f_gap = 0.0;
  int M = 1;
  std::int64_t T = 1;
  int R = 1;
  std::uint64_t seed = 0;

  bool step_size_violation = false;
  std::optional<double> measured;  // sum_t w_t mean_r ||grad f(x_t)||^2
  std::optional<double> measured_standard_error;
  std::optional<double> theorem1_rhs;
  std::optional<double> theorem_a_rhs;
  std::optional<double> corollary2_rhs;  // decreasing-rate schedule only
  std::optional<bool> corollary2_threshold_met;

  bool error_bound_ok = false;
  std::optional<std::int64_t> error_bound_first_violation;
  bool lemma_a_exceeded = false;  // some round's combined error above the constant bound
  bool left_domain = false;
  bool convergence_checked = false;  // only with R >= 30 and valid step sizes
  bool convergence_ok = false;
  bool passes = false;
};

nlohmann::ordered_json summary_json(const RunSummary& s);

struct SimulationOutput {
  RunSummary summary;
  /// t, eta, grad_norm_sq, combined_error_sq, theorem2_bound, lemma_a_bound
  /// [, x_0 .. x_{d-1}]. Ensemble runs report means over members.
  std::string csv;
};

SimulationOutput simulate(const ExperimentConfig& config);

struct SweepOutput {
  std::string csv;
  int rows = 0;
  int errors = 0;
};

/// Cartesian product of the grid in the fixed order schedule, compressor,
/// delta, workers, rounds (outermost first). Rows run concurrently on
/// `config.base.jobs` threads and are emitted in grid order.
SweepOutput sweep(const SweepConfig& config);

struct BoundRequest {
  std::string which;  // lemma-a, theorem2, remark1-u, theorem1, theorem-a, corollary2
  double delta = 0.0;
  double G = 0.0;
  std::int64_t t = 0;
  double eta0 = 0.0;
  double eta1 = 0.0;
  std::string schedule;  // schedule spec for theorem2 / theorem1 / theorem-a
  double L = 0.0;
  double sigma = 0.0;
  int M = 1;
  std::int64_t T = 1;
  double f_gap = 0.0;
};

/// {"bound": which, "value": v, ...term breakdown}. Throws on invalid ranges.
nlohmann::ordered_json evaluate_bound(const BoundRequest& request);

nlohmann::ordered_json verification_json(const std::vector<SuiteEntry>& entries);
std::string verification_text(const std::vector<SuiteEntry>& entries);

}  // namespace efsgd
