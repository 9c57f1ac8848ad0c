#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efsgd/bounds.hpp"
#include "efsgd/engine.hpp"

namespace efsgd {

/// Central tolerance policy.
namespace tolerance {
/// Printed reference values (some are truncated rather than rounded).
inline constexpr double kGolden = 1e-9;
/// Two evaluation routes of the same quantity.
inline constexpr double kOracle = 1e-12;
/// Monte-Carlo allowance, in standard errors.
inline constexpr double kStandardErrors = 3.0;
/// Realized error vs. bound for deterministic runs.
inline constexpr double kBoundSlack = 1e-9;
}  // namespace tolerance

double relative_error(double computed, double expected);

struct ValueCheck {
  std::string symbol;  // e.g. "p[1]", "Delta~", "x"
  std::int64_t round = 0;
  double expected = 0.0;
  double computed = 0.0;
  double rel_error = 0.0;
  bool ok = false;
};

struct CounterExampleReport {
  int id = 0;
  std::vector<ValueCheck> checks;
  double lhs = 0.0;           // ||e~_2 + mean_i e_{2,i}||^2
  double rhs_lemma_a = 0.0;   // constant bound
  double rhs_theorem2 = 0.0;  // corrected bound at t = 1
  bool claim_holds = false;   // lhs > rhs_lemma_a
  bool sanity_holds = false;  // lhs <= rhs_theorem2
  bool values_match = false;

  bool passes() const { return claim_holds && sanity_holds && values_match; }
  /// First failing check, if any.
  std::optional<ValueCheck> first_mismatch() const;
};

/// Run configuration of counter-example `id` in {1, 2, 3}: M = 2, C(x) = x/0.77
/// with delta = 0.9, T = 2.
RunConfig counterexample_config(int id);
/// Delta and G used for the counter-example's bounds.
double counterexample_delta();
double counterexample_G(int id);

/// Replays the counter-example and compares every printed intermediate value.
CounterExampleReport reproduce_counterexample(int id);

struct ErrorBoundRow {
  std::int64_t t = 0;
  double measured = 0.0;  // combined error after round t (mean over runs for ensembles)
  double standard_error = 0.0;
  double bound = 0.0;     // corrected bound at t
  bool ok = false;
};

struct ErrorBoundReport {
  std::vector<ErrorBoundRow> rows;
  bool all_ok = true;
  std::optional<ErrorBoundRow> first_violation;
};

/// G for checking realized (not expected) errors: max of the declared G and
/// the largest per-worker gradient norm seen in the run.
double effective_G(const Trajectory& traj, double declared_G);

/// Realized combined error after each round t vs. the corrected bound at t,
/// with relative slack tolerance::kBoundSlack. For deterministic compressors.
ErrorBoundReport check_error_bound_along_run(const Trajectory& traj, const Schedule& schedule, double delta, double G);

/// Ensemble mean of the combined error vs. bound + 3 standard errors.
ErrorBoundReport check_error_bound_ensemble(std::span<const Trajectory> ensemble, const Schedule& schedule,
                                            double delta, double G);

struct ConvergenceReport {
  double measured = 0.0;  // sum_t w_t mean_r ||grad f(x_t^r)||^2
  double standard_error = 0.0;
  double weights_sum = 0.0;
  double theorem1_bound = 0.0;
  double theorem1_threshold = 0.0;  // theorem1_bound (1 + 3/sqrt(R))
  std::optional<double> corollary2_bound;
  bool corollary2_threshold_met = true;
  int members = 0;
  bool passes = false;
};

/// Exact expectation over the sampled index o, averaged over the ensemble.
/// Requires R >= 30 members. When `with_corollary2` the measured value must
/// also stay below the decreasing-rate closed-form bound.
ConvergenceReport check_convergence_metric(std::span<const Trajectory> ensemble, const BoundInputs& inputs,
                                           bool with_corollary2);

/// Per-run metric sum_t w_t ||grad f(x_t)||^2.
double weighted_grad_metric(const Trajectory& traj, std::span<const double> weights);

/// max over t of ||x~_{t+1} - (x~_t - eta_t mean g_t)|| / (1 + ||x~_t||). Full log required.
double virtual_iterate_deviation(const Trajectory& traj);

/// p - Delta - e' == 0 and p~ - Delta~ - e~' == 0 bitwise in every round.
bool error_conservation_holds(const Trajectory& traj);

struct PropertySummary {
  std::string name;
  int trials = 0;
  double max_rel_error = 0.0;
  int failures = 0;
  bool passes = false;
};

/// Random non-negative 50-length sequences: equality recursion vs. closed form
/// (1e-12 relative), and damped recursion stays below the closed form.
PropertySummary lemma2_property(int trials, std::uint64_t seed);

/// ||mean(v)||^2 <= (1/M) sum ||v_i||^2 on random vector lists.
PropertySummary lemma1_property(int trials, std::uint64_t seed);

/// Incremental vs. naive corrected error bound on random (schedule, delta, t).
PropertySummary theorem2_oracle_property(int trials, std::uint64_t seed);

/// Corrected error bound stays below the constant bound for random
/// non-decreasing schedules (t <= max_t).
PropertySummary corollary1_property(int trials, std::int64_t max_t, std::uint64_t seed);

struct SuiteEntry {
  std::string name;
  bool passes = false;
  std::string detail;
};

/// Everything `efsgd verify` runs.
std::vector<SuiteEntry> run_verification_suite(std::uint64_t seed);

}  // namespace efsgd
