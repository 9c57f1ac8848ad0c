#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "efsgd/harness.hpp"

using namespace efsgd;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig config_file(const std::string& name) {
  return load_experiment(std::string(EFSGD_CONFIG_DIR) + "/" + name + ".ini");
}

const char* kSmallSweep = R"([problem]
kind = synthetic_quadratic
dim = 8
sigma = 0.5
seed = 2

[schedule]
spec = constant:0.2

[compressor]
spec = topk:4@0.5

[run]
workers = 2
rounds = 60
seed = 3
ensemble = 2
)";

}  // namespace

TEST(Harness, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(3.365026291613992), "3.3650262916139919");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-HUGE_VAL), "-inf");
  // 17 digits round-trip
  for (double v : {1.0 / 3.0, 87.44127740238307, 1e-300, 6.02e23}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Harness, CounterExampleCsvRow) {
  const SimulationOutput out = simulate(config_file("counterex1"));
  const auto rows = parse_csv(out.csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "eta", "grad_norm_sq", "combined_error_sq", "theorem2_bound",
                                                "lemma_a_bound", "x_0"}));
  EXPECT_EQ(rows[2][0], "1");
  EXPECT_LE(relative_error(std::stod(rows[2][3]), 3.365026291613992), 1e-9);
  EXPECT_LE(relative_error(std::stod(rows[2][4]), 33.550763888888895), 1e-9);
  EXPECT_LE(relative_error(std::stod(rows[2][5]), 1.2810547172687086), 1e-9);
  EXPECT_TRUE(out.summary.lemma_a_exceeded);
  EXPECT_TRUE(out.summary.error_bound_ok);
  EXPECT_TRUE(out.summary.passes);
}

TEST(Harness, IdentityConfigHasZeroErrorColumn) {
  const SimulationOutput out = simulate(config_file("identity_quadratic"));
  const auto rows = parse_csv(out.csv);
  ASSERT_EQ(rows.size(), 201u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][3], "0") << i;
  EXPECT_FALSE(out.summary.lemma_a_exceeded);
}

TEST(Harness, SummaryJsonFields) {
  const SimulationOutput out = simulate(config_file("counterex2"));
  const nlohmann::ordered_json j = summary_json(out.summary);
  for (const char* key : {"measured", "theorem1_rhs", "theoremA_rhs", "corollary2_rhs", "step_size_violation",
                          "error_bound_ok", "passes"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_TRUE(j["corollary2_rhs"].is_null());
  EXPECT_EQ(j["M"], 2);
  EXPECT_EQ(j["T"], 2);
}

TEST(Harness, SingleRowSweepMatchesSimulate) {
  const SweepConfig sweep_cfg = parse_sweep(kSmallSweep);
  const SweepOutput sw = sweep(sweep_cfg);
  const SimulationOutput sim = simulate(parse_experiment(kSmallSweep));
  const auto rows = parse_csv(sw.csv);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(sw.errors, 0);
  const auto& header = rows[0];
  auto col = [&](const std::string& name) {
    return rows[1][static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin())];
  };
  EXPECT_EQ(col("measured"), format_double(*sim.summary.measured));
  EXPECT_EQ(col("theorem1_rhs"), format_double(*sim.summary.theorem1_rhs));
  EXPECT_EQ(col("theoremA_rhs"), format_double(*sim.summary.theorem_a_rhs));
  EXPECT_EQ(col("passes"), sim.summary.passes ? "1" : "0");
  EXPECT_EQ(col("status"), "ok");
}

TEST(Harness, SweepFlagsStepSizeViolationAndKeepsOrder) {
  SweepConfig cfg = parse_sweep(kSmallSweep);
  cfg.grid.schedules = {"constant:0.2", "constant:1.5", "constant:0.1"};
  cfg.grid.workers = {1, 2};
  cfg.base.jobs = 3;
  const SweepOutput out = sweep(cfg);
  const auto rows = parse_csv(out.csv);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(out.errors, 0);
  // schedule outer, workers inner
  EXPECT_EQ(rows[1][1], "constant:0.2");
  EXPECT_EQ(rows[1][4], "1");
  EXPECT_EQ(rows[2][4], "2");
  EXPECT_EQ(rows[3][1], "constant:1.5");
  EXPECT_EQ(rows[3][7], "step-size-violation");
  EXPECT_EQ(rows[3][8], "1");
  EXPECT_EQ(rows[5][7], "ok");
  cfg.base.jobs = 1;
  EXPECT_EQ(sweep(cfg).csv, out.csv);
}

TEST(Harness, SweepRecordsRowErrors) {
  SweepConfig cfg = parse_sweep(kSmallSweep);
  cfg.grid.compressors = {"topk:4@0.5", "topk:40"};
  const SweepOutput out = sweep(cfg);
  EXPECT_EQ(out.errors, 1);
  const auto rows = parse_csv(out.csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2][7], "error");
  EXPECT_EQ(rows[2].size(), rows[0].size());
  EXPECT_NE(rows[2].back().find("exceeds"), std::string::npos) << rows[2].back();
}

TEST(Harness, SweepMeasuredImprovesWithWorkers) {
  SweepConfig cfg = load_sweep(std::string(EFSGD_CONFIG_DIR) + "/sweep_workers.ini");
  const auto rows = parse_csv(sweep(cfg).csv);
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const double prev = std::stod(rows[i - 1][9]), prev_se = std::stod(rows[i - 1][10]);
    const double cur = std::stod(rows[i][9]), cur_se = std::stod(rows[i][10]);
    EXPECT_LE(cur, prev + 3.0 * std::hypot(prev_se, cur_se)) << "M row " << i;
    EXPECT_EQ(rows[i][18], "1");
  }
}

TEST(Harness, SimulateIsBitwiseReproducibleAcrossJobs) {
  ExperimentConfig cfg = parse_experiment(kSmallSweep);
  cfg.ensemble = 4;
  cfg.output.x_columns = true;
  const std::string a = simulate(cfg).csv;
  cfg.jobs = 3;
  cfg.run.threads = 2;
  EXPECT_EQ(simulate(cfg).csv, a);
}

TEST(Harness, EvaluateBoundExamples) {
  BoundRequest q;
  q.which = "lemma-a";
  q.delta = 0.9;
  q.G = 0.25;
  EXPECT_EQ(format_double(evaluate_bound(q)["value"].get<double>()), "1.2810547172687086");
  q.which = "remark1-u";
  q.eta0 = 0.5;
  q.eta1 = 0.02;
  EXPECT_LE(relative_error(evaluate_bound(q)["value"].get<double>(), 33.550763888888895), 1e-12);
  q.which = "theorem2";
  q.t = 1;
  EXPECT_LE(relative_error(evaluate_bound(q)["value"].get<double>(), 33.550763888888895), 1e-12);
  q.schedule = "counterex2";
  q.G = 2.0;
  EXPECT_LE(relative_error(evaluate_bound(q)["value"].get<double>(), 675.8530370370372), 1e-12);
  q.which = "theorem1";
  q.L = 1.0;
  q.T = 50;
  q.M = 2;
  const auto t1 = evaluate_bound(q);
  EXPECT_TRUE(t1.contains("terms"));
  q.which = "corollary2";
  q.schedule = "";
  EXPECT_TRUE(evaluate_bound(q).contains("threshold_met"));
  q.which = "lemma-a";
  q.delta = 1.5;
  EXPECT_THROW(evaluate_bound(q), std::domain_error);
  q.delta = 0.5;
  q.G = -1.0;
  EXPECT_THROW(evaluate_bound(q), std::domain_error);
  q.which = "nope";
  q.G = 1.0;
  EXPECT_THROW(evaluate_bound(q), std::invalid_argument);
}

TEST(Harness, OutputDirectoryOverride) {
  ::setenv(kOutputDirEnv, "/tmp/efsgd-out", 1);
  EXPECT_EQ(resolve_output_path("a/b.csv"), std::filesystem::path("/tmp/efsgd-out/a/b.csv"));
  EXPECT_EQ(resolve_output_path("/abs/c.csv"), std::filesystem::path("/abs/c.csv"));
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(resolve_output_path("a/b.csv"), std::filesystem::path("a/b.csv"));
}

TEST(Harness, CounterExampleReportFormats) {
  const CounterExampleReport r = reproduce_counterexample(2);
  const nlohmann::ordered_json j = counterexample_json(r);
  EXPECT_EQ(j["lhs"].get<double>(), r.lhs);
  EXPECT_TRUE(j["passes"].get<bool>());
  const std::string text = counterexample_text(r);
  EXPECT_NE(text.find("87.441277402383"), std::string::npos);
  EXPECT_NE(text.find("PASS"), std::string::npos);
}
