#include "efsgd/engine.hpp"

#include <algorithm>
#include <string>

#include "efsgd/parallel.hpp"

namespace efsgd {
namespace {

void require_finite(const ParamVector& v, std::int64_t t, const char* what) {
  if (!v.all_finite()) throw NonFiniteError(t, std::string("non-finite ") + what);
}

double combined_error_sq(const ParamVector& server_error, std::span<const ParamVector> worker_errors) {
  return squared_norm(server_error + mean_vector(worker_errors));
}

}  // namespace

NonFiniteError::NonFiniteError(std::int64_t round, const std::string& what)
    : std::runtime_error(what + " at round " + std::to_string(round)), round_(round) {}

WorkerStepResult worker_step(const WorkerState& ws, const ParamVector& g, double ratio, const Compressor& c, Rng& rng) {
  require_same_dim(g, ws.error, "worker_step");
  ParamVector p = g;
  p.add_scaled(ratio, ws.error);
  ParamVector delta = compress(c, p, rng);
  ParamVector error = p - delta;
  return {std::move(delta), WorkerState{std::move(error), std::move(p)}};
}

ServerStepResult server_step(const ServerState& ss, std::span<const ParamVector> deltas, double ratio,
                             const Compressor& c, Rng& rng) {
  if (deltas.empty()) throw std::invalid_argument("server_step: no worker messages");
  ParamVector ptilde = mean_vector(deltas);
  require_same_dim(ptilde, ss.error, "server_step");
  ptilde.add_scaled(ratio, ss.error);
  ParamVector delta_tilde = compress(c, ptilde, rng);
  ParamVector error = ptilde - delta_tilde;
  return {std::move(delta_tilde), ServerState{std::move(error), std::move(ptilde)}};
}

ParamVector virtual_iterate(const ParamVector& x, double eta_prev, const ParamVector& server_error,
                            std::span<const ParamVector> worker_errors) {
  ParamVector combined = server_error + mean_vector(worker_errors);
  ParamVector out = x;
  out.add_scaled(-eta_prev, combined);
  return out;
}

Trajectory run(const RunConfig& config) {
  if (config.workers < 1) throw std::invalid_argument("run: M must be >= 1");
  if (config.rounds < 1) throw std::invalid_argument("run: T must be >= 1");
  const std::size_t d = config.problem.dim();
  if (config.x0.dim() != d) {
    throw std::invalid_argument("run: x0 has dimension " + std::to_string(config.x0.dim()) + ", problem expects " +
                                std::to_string(d));
  }
  require_finite(config.x0, 0, "x0");

  const auto m = static_cast<std::size_t>(config.workers);
  const bool full = config.log_mode == LogMode::kFull;

  Trajectory traj;
  traj.workers = config.workers;
  traj.rounds = config.rounds;
  traj.dim = d;
  traj.seed = config.seed;
  traj.log_mode = config.log_mode;
  traj.records.reserve(static_cast<std::size_t>(config.rounds));

  // x is replicated on every worker and updated locally from the broadcast
  std::vector<ParamVector> replicas(m, config.x0);
  std::vector<WorkerState> workers(m, WorkerState::initial(d));
  ServerState server = ServerState::initial(d);

  std::vector<ParamVector> grads(m), deltas(m), errors(m);
  std::vector<WorkerState> next_workers(m);

  for (std::int64_t t = 0; t < config.rounds; ++t) {
    const auto ut = static_cast<std::uint64_t>(t);
    RoundRecord rec;
    rec.t = t;
    rec.eta = eta(config.schedule, t);
    rec.eta_prev = eta(config.schedule, t - 1);
    const double ratio = eta_ratio(config.schedule, t);
    const ParamVector& x = replicas.front();

    for (std::size_t i = 0; i < m; ++i) errors[i] = workers[i].error;
    rec.x = x;
    rec.in_domain = config.problem.in_domain(x);
    rec.grad_norm_sq = squared_norm(config.problem.grad(x));
    rec.combined_error_sq = combined_error_sq(server.error, errors);
    if (full) rec.virtual_x = virtual_iterate(x, rec.eta_prev, server.error, errors);

    parallel_for(m, config.threads, [&](std::size_t i) {
      Rng grad_rng = Rng::substream(config.seed, {static_cast<std::uint64_t>(StreamRole::kGradient), ut, i});
      Rng comp_rng = Rng::substream(config.seed, {static_cast<std::uint64_t>(StreamRole::kWorkerCompressor), ut, i});
      grads[i] = config.problem.stochastic_grad(replicas[i], grad_rng);
      require_finite(grads[i], t, "stochastic gradient");
      WorkerStepResult res = worker_step(workers[i], grads[i], ratio, config.worker_compressor, comp_rng);
      require_finite(res.state.last_p, t, "worker corrected gradient");
      require_finite(res.delta, t, "worker message");
      deltas[i] = std::move(res.delta);
      next_workers[i] = std::move(res.state);
    });

    // barrier: every push is in before the server aggregates
    Rng server_rng = Rng::substream(config.seed, {static_cast<std::uint64_t>(StreamRole::kServerCompressor), ut});
    ServerStepResult sres = server_step(server, deltas, ratio, config.server_compressor, server_rng);
    require_finite(sres.state.last_ptilde, t, "server corrected gradient");
    require_finite(sres.delta_tilde, t, "server message");

    for (std::size_t i = 0; i < m; ++i) {
      replicas[i].add_scaled(-rec.eta, sres.delta_tilde);
      if (replicas[i] != replicas.front()) throw std::logic_error("run: worker replicas diverged");
    }
    require_finite(replicas.front(), t, "iterate");

    for (std::size_t i = 0; i < m; ++i) errors[i] = next_workers[i].error;
    rec.combined_error_next_sq = combined_error_sq(sres.state.error, errors);
    for (std::size_t i = 0; i < m; ++i) rec.max_grad_norm_sq = std::max(rec.max_grad_norm_sq, squared_norm(grads[i]));
    traj.max_grad_norm_sq = std::max(traj.max_grad_norm_sq, rec.max_grad_norm_sq);
    traj.left_domain = traj.left_domain || !rec.in_domain;

    if (full) {
      rec.mean_grad = mean_vector(grads);
      rec.grads = grads;
      rec.deltas = deltas;
      rec.ps.reserve(m);
      for (const WorkerState& w : next_workers) rec.ps.push_back(w.last_p);
      rec.worker_errors_next = errors;
      rec.ptilde = sres.state.last_ptilde;
      rec.delta_tilde = sres.delta_tilde;
      rec.server_error_next = sres.state.error;
    }

    workers.swap(next_workers);
    server = std::move(sres.state);
    traj.records.push_back(std::move(rec));
  }

  traj.final_x = replicas.front();
  traj.left_domain = traj.left_domain || !config.problem.in_domain(traj.final_x);
  for (std::size_t i = 0; i < m; ++i) errors[i] = workers[i].error;
  traj.final_virtual_x =
      virtual_iterate(traj.final_x, eta(config.schedule, config.rounds - 1), server.error, errors);
  return traj;
}

std::uint64_t ensemble_member_seed(std::uint64_t seed, std::uint64_t member) {
  return splitmix64(splitmix64(seed ^ 0xa0761d6478bd642fULL) + splitmix64(member + static_cast<std::uint64_t>(StreamRole::kEnsemble)));
}

std::vector<Trajectory> run_ensemble(const RunConfig& config, int members, int threads) {
  if (members < 1) throw std::invalid_argument("run_ensemble: need at least one member");
  std::vector<Trajectory> out(static_cast<std::size_t>(members));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    RunConfig member = config;
    member.seed = ensemble_member_seed(config.seed, r);
    member.threads = 1;
    out[r] = run(member);
  });
  return out;
}

std::vector<double> sample_index_distribution(const Schedule& schedule, double smoothness, std::int64_t rounds) {
  if (rounds < 1) throw std::invalid_argument("sample_index_distribution: T must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(rounds));
  double total = 0.0;
  for (std::int64_t k = 0; k < rounds; ++k) {
    const double e = eta(schedule, k);
    const double weight = e * (3.0 - 2.0 * smoothness * e);
    if (!(weight > 0.0)) {
      throw std::domain_error("sample_index_distribution: non-positive weight at k = " + std::to_string(k) +
                              " (step-size condition eta < 3/(2L) violated)");
    }
    w[static_cast<std::size_t>(k)] = weight;
    total += weight;
  }
  for (double& x : w) x /= total;
  return w;
}

std::int64_t sample_index(std::span<const double> weights, Rng& rng) {
  if (weights.empty()) throw std::invalid_argument("sample_index: empty weights");
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return static_cast<std::int64_t>(k);
  }
  return static_cast<std::int64_t>(weights.size()) - 1;
}

}  // namespace efsgd
