#include "efsgd/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "efsgd/parallel.hpp"

namespace efsgd {
namespace {

using json = nlohmann::ordered_json;

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

bool step_sizes_violate(const Schedule& schedule, double L, std::int64_t T) {
  for (std::int64_t t = 0; t < T; ++t) {
    const double e = eta(schedule, t);
    if (!(e > 0.0) || (L > 0.0 && !(e < 1.5 / L))) return true;
  }
  return false;
}

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

std::vector<Trajectory> run_members(const ExperimentConfig& cfg) {
  if (cfg.ensemble == 1) return {run(cfg.run)};
  return run_ensemble(cfg.run, cfg.ensemble, cfg.jobs);
}

}  // namespace

std::filesystem::path resolve_output_path(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) return std::filesystem::path(dir) / p;
  }
  return p;
}

std::filesystem::path write_output(const std::string& path, const std::string& content) {
  const std::filesystem::path target = resolve_output_path(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::ofstream out(target, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + target.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + target.string());
  return target;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

json counterexample_json(const CounterExampleReport& r) {
  json checks = json::array();
  for (const ValueCheck& c : r.checks) {
    checks.push_back({{"symbol", c.symbol},
                      {"round", c.round},
                      {"expected", c.expected},
                      {"computed", c.computed},
                      {"rel_error", c.rel_error},
                      {"ok", c.ok}});
  }
  return {{"id", r.id},
          {"lhs", r.lhs},
          {"rhs_lemma_a", r.rhs_lemma_a},
          {"rhs_theorem2", r.rhs_theorem2},
          {"claim_holds", r.claim_holds},
          {"sanity_holds", r.sanity_holds},
          {"values_match", r.values_match},
          {"passes", r.passes()},
          {"checks", checks}};
}

std::string counterexample_text(const CounterExampleReport& r) {
  std::string out = fmt::format("counter-example {}\n", r.id);
  for (const ValueCheck& c : r.checks) {
    out += fmt::format("  {:<5} {:<16} t={} expected={} computed={} rel_error={:.3g}\n", c.ok ? "ok" : "FAIL",
                       c.symbol, c.round, format_double(c.expected), format_double(c.computed), c.rel_error);
  }
  out += fmt::format("combined error {} {} constant bound {}: {}\n", format_double(r.lhs),
                     r.claim_holds ? ">" : "<=", format_double(r.rhs_lemma_a),
                     r.claim_holds ? "constant bound violated" : "constant bound NOT violated");
  out += fmt::format("combined error {} {} corrected bound {}: {}\n", format_double(r.lhs),
                     r.sanity_holds ? "<=" : ">", format_double(r.rhs_theorem2),
                     r.sanity_holds ? "corrected bound holds" : "corrected bound VIOLATED");
  if (auto bad = r.first_mismatch()) {
    out += fmt::format("first mismatch: {} at t={} expected {} computed {}\n", bad->symbol, bad->round,
                       format_double(bad->expected), format_double(bad->computed));
  }
  out += r.passes() ? "PASS\n" : "FAIL\n";
  return out;
}

json summary_json(const RunSummary& s) {
  return {{"problem", s.problem},
          {"schedule", s.schedule},
          {"worker_compressor", s.worker_compressor},
          {"server_compressor", s.server_compressor},
          {"delta", s.delta},
          {"G_declared", s.G_declared},
          {"G_effective", s.G_effective},
          {"L", s.L},
          {"sigma", s.sigma},
          {"f_gap", s.f_gap},
          {"M", s.M},
          {"T", s.T},
          {"R", s.R},
          {"seed", s.seed},
          {"step_size_violation", s.step_size_violation},
          {"measured", optional_json(s.measured)},
          {"measured_standard_error", optional_json(s.measured_standard_error)},
          {"theorem1_rhs", optional_json(s.theorem1_rhs)},
          {"theoremA_rhs", optional_json(s.theorem_a_rhs)},
          {"corollary2_rhs", optional_json(s.corollary2_rhs)},
          {"corollary2_threshold_met", optional_json(s.corollary2_threshold_met)},
          {"error_bound_ok", s.error_bound_ok},
          {"error_bound_first_violation", optional_json(s.error_bound_first_violation)},
          {"lemma_a_exceeded", s.lemma_a_exceeded},
          {"left_domain", s.left_domain},
          {"convergence_checked", s.convergence_checked},
          {"convergence_ok", s.convergence_ok},
          {"passes", s.passes}};
}

SimulationOutput simulate(const ExperimentConfig& cfg) {
  const RunConfig& rc = cfg.run;
  RunSummary s;
  s.problem = rc.problem.describe();
  s.schedule = rc.schedule.describe();
  s.worker_compressor = rc.worker_compressor.describe();
  s.server_compressor = rc.server_compressor.describe();
  s.delta = std::min(rc.worker_compressor.declared_delta(), rc.server_compressor.declared_delta());
  if (!(s.delta < 1.0)) {
    throw std::invalid_argument("bounds need delta < 1; declare the compressor with @DELTA below 1");
  }
  s.G_declared = rc.problem.G();
  s.L = rc.problem.smoothness();
  s.sigma = rc.problem.noise_sigma();
  s.f_gap = rc.problem.loss(rc.x0) - rc.problem.f_star();
  s.M = rc.workers;
  s.T = rc.rounds;
  s.R = cfg.ensemble;
  s.seed = rc.seed;

  const std::vector<Trajectory> members = run_members(cfg);
  s.G_effective = s.G_declared;
  for (const Trajectory& traj : members) {
    s.G_effective = effective_G(traj, s.G_effective);
    s.left_domain = s.left_domain || traj.left_domain;
  }

  const bool randomized = rc.worker_compressor.is_randomized() || rc.server_compressor.is_randomized();
  if (randomized) {
    const ErrorBoundReport eb = check_error_bound_ensemble(members, rc.schedule, s.delta, s.G_effective);
    s.error_bound_ok = eb.all_ok;
    if (eb.first_violation) s.error_bound_first_violation = eb.first_violation->t;
  } else {
    s.error_bound_ok = true;
    for (const Trajectory& traj : members) {
      const ErrorBoundReport eb = check_error_bound_along_run(traj, rc.schedule, s.delta, s.G_effective);
      if (!eb.all_ok) {
        s.error_bound_ok = false;
        if (!s.error_bound_first_violation || eb.first_violation->t < *s.error_bound_first_violation) {
          s.error_bound_first_violation = eb.first_violation->t;
        }
      }
    }
  }

  // per-round table, averaged over members in member order
  const auto T = static_cast<std::size_t>(rc.rounds);
  const std::size_t d = rc.problem.dim();
  const double lemma_a = lemma_a_bound(s.delta, s.G_effective);
  const std::vector<double> t2 = theorem2_error_bounds(rc.schedule, s.delta, s.G_effective, rc.rounds);
  std::string csv = "t,eta,grad_norm_sq,combined_error_sq,theorem2_bound,lemma_a_bound";
  if (cfg.output.x_columns) {
    for (std::size_t j = 0; j < d; ++j) csv += fmt::format(",x_{}", j);
  }
  csv += '\n';
  std::vector<double> grad(members.size()), err(members.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < members.size(); ++r) {
      grad[r] = members[r].records[t].grad_norm_sq;
      err[r] = members[r].records[t].combined_error_next_sq;
    }
    const double mean_err = mean(err);
    if (mean_err > lemma_a) s.lemma_a_exceeded = true;
    const RoundRecord& rec0 = members.front().records[t];
    csv += fmt::format("{},{},{},{},{},{}", t, format_double(rec0.eta), format_double(mean(grad)),
                       format_double(mean_err), format_double(t2[t]), format_double(lemma_a));
    if (cfg.output.x_columns) {
      for (std::size_t j = 0; j < d; ++j) {
        double x = 0.0;
        for (const Trajectory& traj : members) x += traj.records[t].x[j];
        csv += "," + format_double(x / static_cast<double>(members.size()));
      }
    }
    csv += '\n';
  }

  const BoundInputs inputs{rc.schedule, s.delta, s.G_effective, s.L, s.sigma, s.M, s.T, s.f_gap};
  const bool is_corollary2 = std::holds_alternative<Schedule::Corollary2>(rc.schedule.kind());
  if (is_corollary2) {
    const Corollary2Bound c2 = corollary2_rhs(s.M, s.T, s.f_gap, s.L, s.sigma, s.delta, s.G_effective);
    s.corollary2_rhs = c2.value;
    s.corollary2_threshold_met = c2.threshold_met;
  }
  s.step_size_violation = step_sizes_violate(rc.schedule, s.L, rc.rounds);
  if (!s.step_size_violation) {
    const std::vector<double> w = sample_index_distribution(rc.schedule, s.L, rc.rounds);
    std::vector<double> per_run;
    for (const Trajectory& traj : members) per_run.push_back(weighted_grad_metric(traj, w));
    s.measured = mean(per_run);
    s.measured_standard_error = standard_error(per_run);
    s.theorem1_rhs = theorem1_rhs(inputs).total;
    s.theorem_a_rhs = theorem_a_rhs(inputs).total;
    if (cfg.ensemble >= 30) {
      const ConvergenceReport cr = check_convergence_metric(members, inputs, is_corollary2);
      s.convergence_checked = true;
      s.convergence_ok = cr.passes;
    }
  }
  s.passes = s.error_bound_ok && (!s.convergence_checked || s.convergence_ok);
  return {s, std::move(csv)};
}

SweepOutput sweep(const SweepConfig& config) {
  const ExperimentConfig& base = config.base;
  const GridSpec& g = config.grid;
  const std::vector<std::string> schedules = g.schedules.empty() ? std::vector{base.schedule_spec} : g.schedules;
  const std::vector<std::string> compressors =
      g.compressors.empty() ? std::vector{base.compressor_spec} : g.compressors;
  std::vector<std::optional<double>> deltas;
  if (g.deltas.empty()) deltas.emplace_back(std::nullopt);
  for (double dl : g.deltas) deltas.emplace_back(dl);
  const std::vector<int> workers = g.workers.empty() ? std::vector{base.run.workers} : g.workers;
  const std::vector<std::int64_t> rounds = g.rounds.empty() ? std::vector{base.run.rounds} : g.rounds;

  struct Point {
    std::string schedule, compressor;
    std::optional<double> delta;
    int workers;
    std::int64_t rounds;
  };
  std::vector<Point> points;
  for (const auto& sc : schedules)
    for (const auto& co : compressors)
      for (const auto& dl : deltas)
        for (int m : workers)
          for (std::int64_t t : rounds) points.push_back({sc, co, dl, m, t});

  struct Row {
    std::optional<RunSummary> summary;
    std::string error;
  };
  std::vector<Row> rows(points.size());
  parallel_for(points.size(), base.jobs, [&](std::size_t i) {
    const Point& p = points[i];
    try {
      ExperimentConfig cfg = with_grid_point(base, p.schedule, p.compressor, p.delta, p.workers, p.rounds);
      cfg.jobs = 1;
      rows[i].summary = simulate(cfg).summary;
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });

  SweepOutput out;
  out.csv =
      "row,schedule,compressor,delta,workers,rounds,ensemble,status,step_size_violation,measured,"
      "measured_standard_error,theorem1_rhs,theoremA_rhs,corollary2_rhs,error_bound_ok,lemma_a_exceeded,"
      "convergence_checked,convergence_ok,passes,message\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    const Row& r = rows[i];
    out.csv += fmt::format("{},{},{},{},{},{},{},", i, csv_quote(p.schedule), csv_quote(p.compressor),
                           p.delta ? format_double(*p.delta) : "", p.workers, p.rounds, base.ensemble);
    if (!r.summary) {
      ++out.errors;
      out.csv += "error,,,,,,,,,,,," + csv_quote(r.error) + "\n";
      continue;
    }
    const RunSummary& s = *r.summary;
    out.csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},\"\"\n",
                           s.step_size_violation ? "step-size-violation" : "ok", int(s.step_size_violation),
                           format_optional(s.measured), format_optional(s.measured_standard_error),
                           format_optional(s.theorem1_rhs), format_optional(s.theorem_a_rhs),
                           format_optional(s.corollary2_rhs), int(s.error_bound_ok), int(s.lemma_a_exceeded),
                           int(s.convergence_checked), int(s.convergence_ok), int(s.passes));
  }
  out.rows = static_cast<int>(points.size());
  return out;
}

json evaluate_bound(const BoundRequest& q) {
  if (!(q.G >= 0.0)) throw std::domain_error("G must be non-negative");
  auto breakdown = [](const ConvergenceBound& b) {
    return json{{"denominator", b.denominator},     {"gap_term", b.gap_term},
                {"noise_term", b.noise_term},       {"error_term_single", b.error_term_single},
                {"error_term_double", b.error_term_double}};
  };
  auto schedule = [&] {
    if (!q.schedule.empty()) return parse_schedule(q.schedule, q.M, q.T);
    if (q.eta1 > 0.0) return Schedule::custom({q.eta0, q.eta1});
    throw std::invalid_argument("a schedule is required (--schedule SPEC, or --eta0/--eta1 for t <= 1)");
  };

  json out{{"bound", q.which}};
  if (q.which == "lemma-a") {
    out["value"] = lemma_a_bound(q.delta, q.G);
  } else if (q.which == "theorem2") {
    out["t"] = q.t;
    out["value"] = theorem2_error_bound(schedule(), q.delta, q.G, q.t);
  } else if (q.which == "remark1-u") {
    out["value"] = remark1_u(q.delta, q.G, q.eta0, q.eta1);
  } else if (q.which == "theorem1" || q.which == "theorem-a") {
    const BoundInputs in{schedule(), q.delta, q.G, q.L, q.sigma, q.M, q.T, q.f_gap};
    const ConvergenceBound b = q.which == "theorem1" ? theorem1_rhs(in) : theorem_a_rhs(in);
    out["value"] = b.total;
    out["terms"] = breakdown(b);
  } else if (q.which == "corollary2") {
    const Corollary2Bound c = corollary2_rhs(q.M, q.T, q.f_gap, q.L, q.sigma, q.delta, q.G);
    out["value"] = c.value;
    out["prefactor"] = c.prefactor;
    out["threshold_met"] = c.threshold_met;
  } else {
    throw std::invalid_argument("unknown bound '" + q.which +
                                "' (expected lemma-a, theorem2, remark1-u, theorem1, theorem-a, corollary2)");
  }
  return out;
}

json verification_json(const std::vector<SuiteEntry>& entries) {
  json checks = json::array();
  bool all = true;
  for (const SuiteEntry& e : entries) {
    checks.push_back({{"name", e.name}, {"passes", e.passes}, {"detail", e.detail}});
    all = all && e.passes;
  }
  return {{"passes", all}, {"checks", checks}};
}

std::string verification_text(const std::vector<SuiteEntry>& entries) {
  std::string out;
  for (const SuiteEntry& e : entries) out += fmt::format("{} {} {}\n", e.passes ? "PASS" : "FAIL", e.name, e.detail);
  return out;
}

}  // namespace efsgd
