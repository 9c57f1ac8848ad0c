#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "efsgd/engine.hpp"

namespace efsgd {

/// Parse or validation failure. `field` is "section.key" when known and
/// `line` the 1-based source line (0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& field, const std::string& message);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

struct OutputSpec {
  std::string csv;      // trajectory / sweep CSV path, empty for stdout
  std::string summary;  // summary JSON path, empty to skip
  bool x_columns = false;
};

struct ExperimentConfig {
  RunConfig run;
  int ensemble = 1;  // R
  /// Threads for ensemble members (simulate) or grid rows (sweep).
  int jobs = 1;
  OutputSpec output;
  /// Schedule text as written, re-resolved per grid point for corollary2.
  std::string schedule_spec;
  std::string compressor_spec;
  std::optional<std::string> server_compressor_spec;
};

/// Whitespace-separated value lists from the [grid] section. Empty lists
/// keep the base config's value.
struct GridSpec {
  std::vector<std::string> schedules;
  std::vector<std::string> compressors;
  std::vector<double> deltas;
  std::vector<int> workers;
  std::vector<std::int64_t> rounds;
};

struct SweepConfig {
  ExperimentConfig base;
  GridSpec grid;
};

/// `constant:ETA`, `counterex1`..`counterex3`, `corollary2` (uses M and T),
/// `corollary2:M:T`, `custom:E0;E1;...`.
Schedule parse_schedule(const std::string& spec, int workers, std::int64_t rounds);

/// `KIND[:PARAM][@DELTA]` with KIND in scaling, topk, randk, randk-unbiased,
/// identity. Without @DELTA the largest admissible delta on R^dim is used
/// (0.5 for identity, since the bounds need delta < 1).
Compressor parse_compressor(const std::string& spec, std::size_t dim);

ExperimentConfig parse_experiment(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_experiment(const std::filesystem::path& path);

SweepConfig parse_sweep(const std::string& text, const std::string& source = "<config>");
SweepConfig load_sweep(const std::filesystem::path& path);

/// Rebuilds the run for one grid point; compressor and schedule specs are
/// re-resolved against the new M and T.
ExperimentConfig with_grid_point(const ExperimentConfig& base, const std::string& schedule,
                                 const std::string& compressor, std::optional<double> delta, int workers,
                                 std::int64_t rounds);

}  // namespace efsgd
