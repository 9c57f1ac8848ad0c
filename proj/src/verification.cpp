#include "efsgd/verification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace efsgd {
namespace {

enum class Symbol { kGrad, kP, kDelta, kErrorNext, kPTilde, kDeltaTilde, kServerErrorNext, kXNext };

struct Golden {
  Symbol symbol;
  std::int64_t round;
  double value;
};

// Values as printed for each counter-example (worker 1; worker 2 is identical).
const std::vector<Golden>& golden_values(int id) {
  static const std::array<std::vector<Golden>, 3> tables = {{
      {
          {Symbol::kP, 0, 0.25},
          {Symbol::kDelta, 0, 0.3246753246753},
          {Symbol::kErrorNext, 0, -0.07467532467532},
          {Symbol::kPTilde, 0, 0.3246753246753},
          {Symbol::kDeltaTilde, 0, 0.42165626581210},
          {Symbol::kServerErrorNext, 0, -0.09698094113678},
          {Symbol::kP, 1, -1.6168831168831},
          {Symbol::kDelta, 1, -2.0998482037443},
          {Symbol::kErrorNext, 1, 0.48296508686119},
          {Symbol::kPTilde, 1, -4.52437173216},
          {Symbol::kDeltaTilde, 1, -5.8758074443687},
          {Symbol::kServerErrorNext, 1, 1.3514357122048},
      },
      {
          {Symbol::kGrad, 0, 2.0},
          {Symbol::kP, 0, 2.0},
          {Symbol::kDelta, 0, 2.5974025974025974},
          {Symbol::kErrorNext, 0, -0.5974025974025974},
          {Symbol::kPTilde, 0, 2.5974025974025974},
          {Symbol::kDeltaTilde, 0, 3.3732501264968797},
          {Symbol::kXNext, 0, -0.26496879743632995},
          {Symbol::kServerErrorNext, 0, -0.7758475290942823},
          {Symbol::kGrad, 1, -0.5299375948726599},
          {Symbol::kP, 1, -8.893573958509023},
          {Symbol::kDelta, 1, -11.550096050011717},
          {Symbol::kErrorNext, 1, 2.656522091502694},
          {Symbol::kPTilde, 1, -22.41196145733167},
          {Symbol::kDeltaTilde, 1, -29.106443451080093},
          {Symbol::kServerErrorNext, 1, 6.694481993748422},
      },
      {
          {Symbol::kGrad, 0, 0.25},
          {Symbol::kP, 0, 0.25},
          {Symbol::kDelta, 0, 0.3246753246753247},
          {Symbol::kErrorNext, 0, -0.07467532467532467},
          {Symbol::kPTilde, 0, 0.3246753246753247},
          {Symbol::kDeltaTilde, 0, 0.42165626581210996},
          {Symbol::kXNext, 0, -0.3162421993590825},
          {Symbol::kServerErrorNext, 0, -0.09698094113678529},
          {Symbol::kGrad, 1, 0.243852158038919},
          {Symbol::kP, 1, -1.6230309588441978},
          {Symbol::kDelta, 1, -2.1078324140833735},
          {Symbol::kErrorNext, 1, 0.4848014552391757},
          {Symbol::kPTilde, 1, -4.532355942503006},
          {Symbol::kDeltaTilde, 1, -5.886176548705203},
          {Symbol::kServerErrorNext, 1, 1.3538206062021967},
      },
  }};
  return tables.at(static_cast<std::size_t>(id - 1));
}

constexpr std::array<double, 3> kGoldenLhs = {3.365026291613992, 87.44127740238307, 3.3805310848189216};
constexpr std::array<double, 3> kGoldenLemmaA = {1.2810547172687086, 81.98750190519735, 1.2810547172687086};
constexpr std::array<double, 3> kGoldenU = {33.550763888888895, 675.8530370370372, 33.550763888888895};

const char* symbol_name(Symbol s) {
  switch (s) {
    case Symbol::kGrad: return "g";
    case Symbol::kP: return "p";
    case Symbol::kDelta: return "Delta";
    case Symbol::kErrorNext: return "e_next";
    case Symbol::kPTilde: return "p~";
    case Symbol::kDeltaTilde: return "Delta~";
    case Symbol::kServerErrorNext: return "e~_next";
    case Symbol::kXNext: return "x_next";
  }
  return "?";
}

bool is_worker_symbol(Symbol s) {
  return s == Symbol::kGrad || s == Symbol::kP || s == Symbol::kDelta || s == Symbol::kErrorNext;
}

double lookup(const Trajectory& traj, Symbol s, std::int64_t round, std::size_t worker) {
  const RoundRecord& r = traj.records.at(static_cast<std::size_t>(round));
  switch (s) {
    case Symbol::kGrad: return r.grads.at(worker)[0];
    case Symbol::kP: return r.ps.at(worker)[0];
    case Symbol::kDelta: return r.deltas.at(worker)[0];
    case Symbol::kErrorNext: return r.worker_errors_next.at(worker)[0];
    case Symbol::kPTilde: return r.ptilde[0];
    case Symbol::kDeltaTilde: return r.delta_tilde[0];
    case Symbol::kServerErrorNext: return r.server_error_next[0];
    case Symbol::kXNext: {
      const auto next = static_cast<std::size_t>(round) + 1;
      return next < traj.records.size() ? traj.records[next].x[0] : traj.final_x[0];
    }
  }
  return 0.0;
}

ValueCheck make_check(std::string symbol, std::int64_t round, double expected, double computed) {
  ValueCheck c;
  c.symbol = std::move(symbol);
  c.round = round;
  c.expected = expected;
  c.computed = computed;
  c.rel_error = relative_error(computed, expected);
  c.ok = c.rel_error <= tolerance::kGolden;
  return c;
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double standard_error_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
}

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(rng.uniform(std::log(lo), std::log(hi))); }

// Random positive schedule with at least `length` entries.
Schedule random_schedule(Rng& rng, std::int64_t length) {
  switch (rng.below(7)) {
    case 0: return Schedule::constant(log_uniform(rng, 1e-3, 1.0));
    case 1: return Schedule::counter_ex1();
    case 2: return Schedule::counter_ex2();
    case 3: return Schedule::counter_ex3();
    case 4: return Schedule::corollary2(static_cast<int>(1 + rng.below(16)), std::max<std::int64_t>(length, 1 + static_cast<std::int64_t>(rng.below(10000))));
    default: break;
  }
  std::vector<double> table(static_cast<std::size_t>(length));
  double e = log_uniform(rng, 1e-3, 1.0);
  for (double& v : table) {
    v = e;
    e *= log_uniform(rng, 0.5, 2.0);
    e = std::clamp(e, 1e-6, 10.0);
  }
  return Schedule::custom(std::move(table));
}

Schedule random_non_decreasing_schedule(Rng& rng, std::int64_t length) {
  if (rng.below(4) == 0) return Schedule::constant(log_uniform(rng, 1e-4, 1.0));
  std::vector<double> table(static_cast<std::size_t>(length));
  double e = log_uniform(rng, 1e-4, 1e-1);
  const double growth = rng.uniform(0.0, 0.02);
  for (double& v : table) {
    v = e;
    if (rng.uniform01() < 0.5) e *= 1.0 + growth * rng.uniform01();
  }
  return Schedule::custom(std::move(table));
}

}  // namespace

double relative_error(double computed, double expected) {
  if (expected == 0.0) return std::abs(computed);
  return std::abs(computed - expected) / std::abs(expected);
}

std::optional<ValueCheck> CounterExampleReport::first_mismatch() const {
  for (const ValueCheck& c : checks) {
    if (!c.ok) return c;
  }
  return std::nullopt;
}

double counterexample_delta() { return 0.9; }

double counterexample_G(int id) {
  switch (id) {
    case 1: return Problem::linear_quarter().G();
    case 2: return Problem::quadratic().G();
    case 3: return Problem::sigmoid().G();
    default: throw std::invalid_argument("counter-example id must be 1, 2 or 3");
  }
}

RunConfig counterexample_config(int id) {
  const Compressor c = Compressor::scaling(0.77, counterexample_delta());
  switch (id) {
    case 1:
      return RunConfig{Problem::linear_quarter(), Schedule::counter_ex1(), c, c, 2, 2, ParamVector{0.0}, 0};
    case 2:
      return RunConfig{Problem::quadratic(), Schedule::counter_ex2(), c, c, 2, 2, ParamVector{1.0}, 0};
    case 3:
      return RunConfig{Problem::sigmoid(), Schedule::counter_ex3(), c, c, 2, 2, ParamVector{0.0}, 0};
    default: throw std::invalid_argument("counter-example id must be 1, 2 or 3");
  }
}

CounterExampleReport reproduce_counterexample(int id) {
  const RunConfig config = counterexample_config(id);
  const Trajectory traj = run(config);

  CounterExampleReport report;
  report.id = id;
  for (const Golden& g : golden_values(id)) {
    const std::string base = symbol_name(g.symbol);
    if (is_worker_symbol(g.symbol)) {
      for (std::size_t w = 0; w < static_cast<std::size_t>(config.workers); ++w) {
        report.checks.push_back(
            make_check(base + "[" + std::to_string(w + 1) + "]", g.round, g.value, lookup(traj, g.symbol, g.round, w)));
      }
    } else {
      report.checks.push_back(make_check(base, g.round, g.value, lookup(traj, g.symbol, g.round, 0)));
    }
  }

  const auto idx = static_cast<std::size_t>(id - 1);
  const double delta = counterexample_delta();
  const double G = counterexample_G(id);
  report.lhs = traj.records.back().combined_error_next_sq;
  report.rhs_lemma_a = lemma_a_bound(delta, G);
  report.rhs_theorem2 = theorem2_error_bound(config.schedule, delta, G, 1);
  report.checks.push_back(make_check("combined_error", 2, kGoldenLhs[idx], report.lhs));
  report.checks.push_back(make_check("lemma_a_bound", 2, kGoldenLemmaA[idx], report.rhs_lemma_a));
  report.checks.push_back(make_check("theorem2_bound", 1, kGoldenU[idx], report.rhs_theorem2));

  report.claim_holds = report.lhs > report.rhs_lemma_a;
  report.sanity_holds = report.lhs <= report.rhs_theorem2;
  report.values_match = std::all_of(report.checks.begin(), report.checks.end(), [](const ValueCheck& c) { return c.ok; });
  return report;
}

double effective_G(const Trajectory& traj, double declared_G) {
  return std::max(declared_G, std::sqrt(traj.max_grad_norm_sq));
}

ErrorBoundReport check_error_bound_along_run(const Trajectory& traj, const Schedule& schedule, double delta, double G) {
  ErrorBoundReport report;
  Theorem2Sums sums(schedule, delta);
  for (const RoundRecord& rec : traj.records) {
    sums.advance();
    ErrorBoundRow row;
    row.t = rec.t;
    row.measured = rec.combined_error_next_sq;
    row.bound = sums.bound(G);
    row.ok = row.measured <= row.bound * (1.0 + tolerance::kBoundSlack);
    if (!row.ok && report.all_ok) {
      report.all_ok = false;
      report.first_violation = row;
    }
    report.rows.push_back(row);
  }
  return report;
}

ErrorBoundReport check_error_bound_ensemble(std::span<const Trajectory> ensemble, const Schedule& schedule,
                                            double delta, double G) {
  if (ensemble.empty()) throw std::invalid_argument("check_error_bound_ensemble: empty ensemble");
  const std::size_t rounds = ensemble.front().records.size();
  ErrorBoundReport report;
  Theorem2Sums sums(schedule, delta);
  std::vector<double> samples(ensemble.size());
  for (std::size_t t = 0; t < rounds; ++t) {
    sums.advance();
    for (std::size_t r = 0; r < ensemble.size(); ++r) samples[r] = ensemble[r].records.at(t).combined_error_next_sq;
    ErrorBoundRow row;
    row.t = static_cast<std::int64_t>(t);
    row.measured = mean_of(samples);
    row.standard_error = standard_error_of(samples);
    row.bound = sums.bound(G);
    row.ok = row.measured <= row.bound + tolerance::kStandardErrors * row.standard_error;
    if (!row.ok && report.all_ok) {
      report.all_ok = false;
      report.first_violation = row;
    }
    report.rows.push_back(row);
  }
  return report;
}

double weighted_grad_metric(const Trajectory& traj, std::span<const double> weights) {
  if (weights.size() != traj.records.size()) throw std::invalid_argument("weighted_grad_metric: length mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) s += weights[t] * traj.records[t].grad_norm_sq;
  return s;
}

ConvergenceReport check_convergence_metric(std::span<const Trajectory> ensemble, const BoundInputs& inputs,
                                           bool with_corollary2) {
  constexpr int kMinMembers = 30;
  if (static_cast<int>(ensemble.size()) < kMinMembers) {
    throw std::invalid_argument("check_convergence_metric: need at least 30 ensemble members, got " +
                                std::to_string(ensemble.size()));
  }
  const std::vector<double> w = sample_index_distribution(inputs.schedule, inputs.L, inputs.T);

  ConvergenceReport report;
  report.members = static_cast<int>(ensemble.size());
  for (double x : w) report.weights_sum += x;

  std::vector<double> per_run;
  per_run.reserve(ensemble.size());
  for (const Trajectory& traj : ensemble) per_run.push_back(weighted_grad_metric(traj, w));
  report.measured = mean_of(per_run);
  report.standard_error = standard_error_of(per_run);

  report.theorem1_bound = theorem1_rhs(inputs).total;
  report.theorem1_threshold =
      report.theorem1_bound * (1.0 + tolerance::kStandardErrors / std::sqrt(static_cast<double>(report.members)));
  report.passes = report.measured <= report.theorem1_threshold;
  if (with_corollary2) {
    const Corollary2Bound c2 =
        corollary2_rhs(inputs.M, inputs.T, inputs.f_gap, inputs.L, inputs.sigma, inputs.delta, inputs.G);
    report.corollary2_bound = c2.value;
    report.corollary2_threshold_met = c2.threshold_met;
    report.passes = report.passes && report.measured <= c2.value;
  }
  return report;
}

double virtual_iterate_deviation(const Trajectory& traj) {
  if (traj.log_mode != LogMode::kFull) throw std::invalid_argument("virtual_iterate_deviation: full log required");
  double worst = 0.0;
  for (std::size_t t = 0; t < traj.records.size(); ++t) {
    const RoundRecord& rec = traj.records[t];
    const ParamVector& next = t + 1 < traj.records.size() ? traj.records[t + 1].virtual_x : traj.final_virtual_x;
    ParamVector predicted = rec.virtual_x;
    predicted.add_scaled(-rec.eta, rec.mean_grad);
    worst = std::max(worst, norm(next - predicted) / (1.0 + norm(rec.virtual_x)));
  }
  return worst;
}

bool error_conservation_holds(const Trajectory& traj) {
  if (traj.log_mode != LogMode::kFull) throw std::invalid_argument("error_conservation_holds: full log required");
  for (const RoundRecord& rec : traj.records) {
    for (std::size_t i = 0; i < rec.ps.size(); ++i) {
      const ParamVector residual = rec.ps[i] - rec.deltas[i] - rec.worker_errors_next[i];
      if (max_abs(residual) != 0.0) return false;
    }
    if (max_abs(rec.ptilde - rec.delta_tilde - rec.server_error_next) != 0.0) return false;
  }
  return true;
}

PropertySummary lemma2_property(int trials, std::uint64_t seed) {
  constexpr std::size_t kLength = 50;
  PropertySummary s;
  s.name = "lemma2_closed_form";
  s.trials = trials;
  Rng rng(seed);
  std::vector<double> alphas(kLength), betas(kLength);
  for (int trial = 0; trial < trials; ++trial) {
    for (std::size_t i = 0; i < kLength; ++i) {
      alphas[i] = rng.uniform(0.0, 1.5);
      betas[i] = rng.uniform(0.0, 2.0);
    }
    const std::vector<double> iterated = lemma2_iterate(alphas, betas);
    double damped = 0.0;
    bool trial_ok = true;
    for (std::size_t t = 0; t < kLength; ++t) {
      const double closed = lemma2_closed_form(alphas, betas, static_cast<std::int64_t>(t));
      const double err = relative_error(iterated[t], closed);
      s.max_rel_error = std::max(s.max_rel_error, err);
      if (err > tolerance::kOracle) trial_ok = false;
      // strict inequality a_{t+1} < alpha_t a_t + beta_t still obeys the bound
      damped = rng.uniform01() * (alphas[t] * damped + betas[t]);
      if (damped > closed * (1.0 + tolerance::kOracle)) trial_ok = false;
    }
    if (!trial_ok) ++s.failures;
  }
  s.passes = s.failures == 0;
  return s;
}

PropertySummary lemma1_property(int trials, std::uint64_t seed) {
  PropertySummary s;
  s.name = "lemma1_norm_of_average";
  s.trials = trials;
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t m = 1 + rng.below(16);
    const std::size_t d = 1 + rng.below(32);
    const double scale = log_uniform(rng, 1e-3, 1e3);
    std::vector<ParamVector> vs(m, ParamVector(d));
    double avg_sq = 0.0;
    for (ParamVector& v : vs) {
      for (double& e : v) e = scale * rng.uniform(-1.0, 1.0);
      avg_sq += squared_norm(v);
    }
    avg_sq /= static_cast<double>(m);
    const double lhs = squared_norm(mean_vector(vs));
    if (lhs > avg_sq * (1.0 + tolerance::kOracle)) ++s.failures;
    if (avg_sq > 0.0) s.max_rel_error = std::max(s.max_rel_error, lhs / avg_sq);
  }
  s.passes = s.failures == 0;
  return s;
}

PropertySummary theorem2_oracle_property(int trials, std::uint64_t seed) {
  PropertySummary s;
  s.name = "theorem2_incremental_vs_naive";
  s.trials = trials;
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const auto t = static_cast<std::int64_t>(rng.below(200));
    const Schedule schedule = random_schedule(rng, t + 1);
    const double delta = rng.uniform(0.01, 0.99);
    const double G = log_uniform(rng, 1e-2, 1e2);
    const double naive = theorem2_error_bound_naive(schedule, delta, G, t);
    const double fast = theorem2_error_bound(schedule, delta, G, t);
    const double err = relative_error(fast, naive);
    s.max_rel_error = std::max(s.max_rel_error, err);
    if (err > tolerance::kOracle) ++s.failures;
  }
  s.passes = s.failures == 0;
  return s;
}

PropertySummary corollary1_property(int trials, std::int64_t max_t, std::uint64_t seed) {
  constexpr std::array<double, 3> kDeltas = {0.1, 0.5, 0.9};
  PropertySummary s;
  s.name = "corollary1_non_decreasing";
  s.trials = trials;
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const Schedule schedule = random_non_decreasing_schedule(rng, max_t + 1);
    const double G = log_uniform(rng, 1e-2, 1e2);
    bool ok = true;
    for (double delta : kDeltas) {
      const double cap = lemma_a_bound(delta, G);
      Theorem2Sums sums(schedule, delta);
      for (std::int64_t t = 0; t <= max_t; ++t) {
        sums.advance();
        const double b = sums.bound(G);
        s.max_rel_error = std::max(s.max_rel_error, b / cap);
        if (b > cap * (1.0 + tolerance::kOracle)) ok = false;
      }
    }
    if (!ok) ++s.failures;
  }
  s.passes = s.failures == 0;
  return s;
}

std::vector<SuiteEntry> run_verification_suite(std::uint64_t seed) {
  std::vector<SuiteEntry> out;
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };

  for (int id = 1; id <= 3; ++id) {
    const CounterExampleReport r = reproduce_counterexample(id);
    std::string detail = "lhs=" + fmt(r.lhs) + " lemma_a=" + fmt(r.rhs_lemma_a) + " theorem2=" + fmt(r.rhs_theorem2);
    if (auto bad = r.first_mismatch()) {
      detail += " mismatch " + bad->symbol + "@" + std::to_string(bad->round) + " expected=" + fmt(bad->expected) +
                " computed=" + fmt(bad->computed);
    }
    out.push_back({"counterexample_" + std::to_string(id), r.passes(), detail});
  }

  for (const PropertySummary& p : {lemma1_property(10000, seed), lemma2_property(1000, seed + 1),
                                   theorem2_oracle_property(1000, seed + 2), corollary1_property(100, 1000, seed + 3)}) {
    out.push_back({p.name, p.passes,
                   "trials=" + std::to_string(p.trials) + " failures=" + std::to_string(p.failures) +
                       " max=" + fmt(p.max_rel_error)});
  }

  // error bound and virtual iterate along the counter-example schedules, extended to T = 500
  for (int id = 1; id <= 3; ++id) {
    RunConfig config = counterexample_config(id);
    config.rounds = 500;
    const Trajectory traj = run(config);
    const ErrorBoundReport eb =
        check_error_bound_along_run(traj, config.schedule, counterexample_delta(), effective_G(traj, counterexample_G(id)));
    const double dev = virtual_iterate_deviation(traj);
    out.push_back({"error_bound_along_run_" + std::to_string(id), eb.all_ok,
                   eb.first_violation ? "violated at t=" + std::to_string(eb.first_violation->t) : "500 rounds"});
    out.push_back({"virtual_iterate_" + std::to_string(id), dev <= 1e-10, "max deviation=" + fmt(dev)});
    out.push_back({"error_conservation_" + std::to_string(id), error_conservation_holds(traj), ""});
  }
  return out;
}

}  // namespace efsgd
