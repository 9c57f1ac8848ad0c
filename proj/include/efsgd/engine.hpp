#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "efsgd/compressor.hpp"
#include "efsgd/problem.hpp"
#include "efsgd/rng.hpp"
#include "efsgd/schedule.hpp"
#include "efsgd/vector.hpp"

namespace efsgd {

struct WorkerState {
  ParamVector error;   // e_{t,i}
  ParamVector last_p;  // p_{t-1,i}, zero before the first round

  static WorkerState initial(std::size_t dim) { return {ParamVector(dim), ParamVector(dim)}; }
};

struct ServerState {
  ParamVector error;        // e~_t
  ParamVector last_ptilde;  // p~_{t-1}

  static ServerState initial(std::size_t dim) { return {ParamVector(dim), ParamVector(dim)}; }
};

struct WorkerStepResult {
  ParamVector delta;
  WorkerState state;
};

struct ServerStepResult {
  ParamVector delta_tilde;
  ServerState state;
};

/// p = g + ratio * e;  delta = C(p);  e' = p - delta.
WorkerStepResult worker_step(const WorkerState& ws, const ParamVector& g, double ratio, const Compressor& c, Rng& rng);

/// p~ = mean(deltas) + ratio * e~;  delta~ = C(p~);  e~' = p~ - delta~.
ServerStepResult server_step(const ServerState& ss, std::span<const ParamVector> deltas, double ratio,
                             const Compressor& c, Rng& rng);

/// x~_t = x_t - eta_{t-1} (e~_t + (1/M) sum_i e_{t,i})
ParamVector virtual_iterate(const ParamVector& x, double eta_prev, const ParamVector& server_error,
                            std::span<const ParamVector> worker_errors);

enum class LogMode { kFull, kThin };

struct RunConfig {
  Problem problem;
  Schedule schedule;
  Compressor worker_compressor;
  Compressor server_compressor;
  int workers = 1;
  std::int64_t rounds = 1;
  ParamVector x0;
  std::uint64_t seed = 0;
  LogMode log_mode = LogMode::kFull;
  /// Threads used for the worker phase of each round; results do not depend on it.
  int threads = 1;
};

/// Everything observed in round t. Vector fields other than `x` are only
/// populated in LogMode::kFull.
struct RoundRecord {
  std::int64_t t = 0;
  double eta = 0.0;
  double eta_prev = 0.0;
  ParamVector x;  // x_t
  double grad_norm_sq = 0.0;            // ||grad f(x_t)||^2
  double combined_error_sq = 0.0;       // ||e~_t + mean_i e_{t,i}||^2
  double combined_error_next_sq = 0.0;  // ||e~_{t+1} + mean_i e_{t+1,i}||^2
  double max_grad_norm_sq = 0.0;        // max_i ||g_{t,i}||^2
  bool in_domain = true;

  ParamVector virtual_x;  // x~_t
  ParamVector mean_grad;  // (1/M) sum_i g_{t,i}
  std::vector<ParamVector> grads;
  std::vector<ParamVector> ps;
  std::vector<ParamVector> deltas;
  std::vector<ParamVector> worker_errors_next;  // e_{t+1,i}
  ParamVector ptilde;
  ParamVector delta_tilde;
  ParamVector server_error_next;  // e~_{t+1}
};

struct Trajectory {
  int workers = 0;
  std::int64_t rounds = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  LogMode log_mode = LogMode::kFull;
  std::vector<RoundRecord> records;
  ParamVector final_x;          // x_T
  ParamVector final_virtual_x;  // x~_T
  bool left_domain = false;     // some x_t (t <= T) was outside the problem's declared domain
  double max_grad_norm_sq = 0.0;
};

/// Raised when a non-finite value appears; `round()` is the offending t.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::int64_t round, const std::string& what);
  std::int64_t round() const { return round_; }

 private:
  std::int64_t round_;
};

/// Executes T synchronous rounds of error-feedback SGD with compression on
/// both the M workers and the server.
Trajectory run(const RunConfig& config);

/// Seed of ensemble member r.
std::uint64_t ensemble_member_seed(std::uint64_t seed, std::uint64_t member);

/// R independent runs with seeds ensemble_member_seed(config.seed, r).
/// Members are distributed over `threads` threads; the output order is by r.
std::vector<Trajectory> run_ensemble(const RunConfig& config, int members, int threads = 1);

/// Pr(o = k) = eta_k (3 - 2 L eta_k) / sum_t eta_t (3 - 2 L eta_t), k < T.
/// Throws std::domain_error when some weight is non-positive.
std::vector<double> sample_index_distribution(const Schedule& schedule, double smoothness, std::int64_t rounds);

/// Draws o from the weights.
std::int64_t sample_index(std::span<const double> weights, Rng& rng);

}  // namespace efsgd
