#include <gtest/gtest.h>

#include <cmath>

#include "efsgd/engine.hpp"

using namespace efsgd;

namespace {

// Scalar error-feedback recursion with C(x) = x/c written out by hand.
struct ScalarReference {
  std::vector<double> x, combined;
};

ScalarReference scalar_reference(double (*grad)(double), double c, double x0, int M, int T, double (*eta_fn)(int)) {
  ScalarReference ref;
  double x = x0, server_e = 0.0;
  std::vector<double> e(M, 0.0);
  for (int t = 0; t < T; ++t) {
    ref.x.push_back(x);
    const double ratio = t == 0 ? 0.0 : eta_fn(t - 1) / eta_fn(t);
    double sum = 0.0;
    for (int i = 0; i < M; ++i) {
      const double p = grad(x) + ratio * e[i];
      const double d = p / c;
      e[i] = p - d;
      sum += d;
    }
    const double pt = sum / M + ratio * server_e;
    const double dt = pt / c;
    server_e = pt - dt;
    double mean_e = 0.0;
    for (double v : e) mean_e += v;
    mean_e /= M;
    ref.combined.push_back((server_e + mean_e) * (server_e + mean_e));
    x -= eta_fn(t) * dt;
  }
  ref.x.push_back(x);
  return ref;
}

double quad_grad(double x) { return 2.0 * x; }
double ce2_eta(int t) { return 0.75 / (26.0 * t + 2.0); }

RunConfig synthetic_config(const Compressor& c, int M, std::int64_t T, double sigma, std::uint64_t seed = 5) {
  SyntheticQuadraticSpec spec;
  spec.dim = 8;
  spec.sigma = sigma;
  spec.seed = 4;
  const Problem p = Problem::synthetic_quadratic(spec);
  return RunConfig{p, Schedule::constant(0.1), c, c, M, T, ParamVector::filled(8, 0.5), seed};
}

}  // namespace

TEST(Engine, WorkerStepFormulas) {
  Rng rng(0);
  const WorkerState ws{ParamVector{0.5, -1.0}, ParamVector(2)};
  const ParamVector g{1.0, 2.0};
  const WorkerStepResult r = worker_step(ws, g, 3.0, Compressor::scaling(2.0, 0.5), rng);
  EXPECT_EQ(r.state.last_p, (ParamVector{2.5, -1.0}));
  EXPECT_EQ(r.delta, (ParamVector{1.25, -0.5}));
  EXPECT_EQ(r.state.error, (ParamVector{1.25, -0.5}));
}

TEST(Engine, ServerStepFormulas) {
  Rng rng(0);
  const ServerState ss{ParamVector{1.0}, ParamVector(1)};
  const std::vector<ParamVector> deltas{ParamVector{1.0}, ParamVector{3.0}};
  const ServerStepResult r = server_step(ss, deltas, 0.5, Compressor::scaling(4.0, 0.5), rng);
  EXPECT_EQ(r.state.last_ptilde, ParamVector{2.5});
  EXPECT_EQ(r.delta_tilde, ParamVector{0.625});
  EXPECT_EQ(r.state.error, ParamVector{1.875});
  EXPECT_THROW(server_step(ss, std::vector<ParamVector>{}, 0.5, Compressor::identity(), rng), std::invalid_argument);
}

TEST(Engine, MatchesHandWrittenScalarRecursion) {
  const Compressor c = Compressor::scaling(0.77, 0.9);
  const RunConfig cfg{Problem::quadratic(), Schedule::counter_ex2(), c, c, 2, 6, ParamVector{1.0}, 0};
  const Trajectory traj = run(cfg);
  const ScalarReference ref = scalar_reference(quad_grad, 0.77, 1.0, 2, 6, ce2_eta);
  for (std::size_t t = 0; t < 6; ++t) {
    EXPECT_NEAR(traj.records[t].x[0], ref.x[t], 1e-14 * (1.0 + std::abs(ref.x[t]))) << t;
    EXPECT_NEAR(traj.records[t].combined_error_next_sq, ref.combined[t], 1e-12 * (1.0 + ref.combined[t])) << t;
  }
  EXPECT_NEAR(traj.final_x[0], ref.x[6], 1e-12 * (1.0 + std::abs(ref.x[6])));
}

TEST(Engine, FirstRoundOfFirstCounterExample) {
  // g = 1/4 on both workers, no error yet: p = 1/4, Delta = p/0.77, e = p - Delta
  const Compressor c = Compressor::scaling(0.77, 0.9);
  const RunConfig cfg{Problem::linear_quarter(), Schedule::counter_ex1(), c, c, 2, 1, ParamVector{0.0}, 0};
  const Trajectory traj = run(cfg);
  const RoundRecord& r = traj.records[0];
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(r.ps[i][0], 0.25);
    EXPECT_EQ(r.deltas[i][0], 0.25 / 0.77);
    EXPECT_EQ(r.worker_errors_next[i][0], 0.25 - 0.25 / 0.77);
  }
  EXPECT_DOUBLE_EQ(r.delta_tilde[0], 0.25 / 0.77 / 0.77);
  EXPECT_DOUBLE_EQ(traj.final_x[0], -0.5 * 0.25 / 0.77 / 0.77);
  EXPECT_EQ(r.combined_error_sq, 0.0);
}

TEST(Engine, IdentityCompressionIsPlainAveragedSgd) {
  const RunConfig cfg = synthetic_config(Compressor::identity(0.5), 3, 50, 0.0);
  const Trajectory traj = run(cfg);
  ParamVector x = cfg.x0;
  for (std::size_t t = 0; t < 50; ++t) {
    // the engine averages M identical messages, which can round differently than g itself
    EXPECT_LE(norm(traj.records[t].x - x), 1e-14 * (1.0 + norm(x))) << t;
    EXPECT_EQ(traj.records[t].combined_error_next_sq, 0.0);
    x.add_scaled(-0.1, cfg.problem.grad(x));
  }
}

TEST(Engine, ErrorConservationIsExact) {
  const RunConfig cfg = synthetic_config(Compressor::top_k(3, 3.0 / 8.0), 4, 30, 0.2);
  const Trajectory traj = run(cfg);
  for (const RoundRecord& r : traj.records) {
    for (std::size_t i = 0; i < r.ps.size(); ++i) {
      EXPECT_EQ(r.ps[i] - r.deltas[i], r.worker_errors_next[i]);
    }
    EXPECT_EQ(r.ptilde - r.delta_tilde, r.server_error_next);
  }
}

TEST(Engine, VirtualIterateFollowsAveragedGradientSteps) {
  const RunConfig cfg = synthetic_config(Compressor::random_sparsify(2, 0.25), 4, 100, 0.3);
  const Trajectory traj = run(cfg);
  for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
    const RoundRecord& r = traj.records[t];
    ParamVector predicted = r.virtual_x;
    predicted.add_scaled(-r.eta, r.mean_grad);
    EXPECT_LE(norm(traj.records[t + 1].virtual_x - predicted), 1e-12 * (1.0 + norm(r.virtual_x))) << t;
  }
  EXPECT_EQ(traj.records[0].virtual_x, cfg.x0);
}

TEST(Engine, ThreadCountDoesNotChangeResults) {
  RunConfig cfg = synthetic_config(Compressor::random_sparsify(3, 3.0 / 8.0), 5, 60, 0.4);
  const Trajectory a = run(cfg);
  cfg.threads = 4;
  const Trajectory b = run(cfg);
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    ASSERT_EQ(a.records[t].x, b.records[t].x);
    ASSERT_EQ(a.records[t].combined_error_next_sq, b.records[t].combined_error_next_sq);
  }
}

TEST(Engine, SeedChangesNoiseOnly) {
  const Trajectory a = run(synthetic_config(Compressor::identity(0.5), 2, 10, 0.4, 1));
  const Trajectory b = run(synthetic_config(Compressor::identity(0.5), 2, 10, 0.4, 2));
  EXPECT_NE(a.final_x, b.final_x);
  const Trajectory c = run(synthetic_config(Compressor::identity(0.5), 2, 10, 0.0, 1));
  const Trajectory d = run(synthetic_config(Compressor::identity(0.5), 2, 10, 0.0, 2));
  EXPECT_EQ(c.final_x, d.final_x);
}

TEST(Engine, ThinLogKeepsScalars) {
  RunConfig cfg = synthetic_config(Compressor::top_k(4, 0.5), 2, 20, 0.1);
  const Trajectory full = run(cfg);
  cfg.log_mode = LogMode::kThin;
  const Trajectory thin = run(cfg);
  EXPECT_TRUE(thin.records[3].grads.empty());
  EXPECT_EQ(thin.records[3].combined_error_next_sq, full.records[3].combined_error_next_sq);
  EXPECT_EQ(thin.final_x, full.final_x);
}

TEST(Engine, RejectsBadConfigs) {
  RunConfig cfg = synthetic_config(Compressor::identity(0.5), 2, 10, 0.0);
  cfg.workers = 0;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg.workers = 1;
  cfg.rounds = 0;
  EXPECT_THROW(run(cfg), std::invalid_argument);
  cfg.rounds = 1;
  cfg.x0 = ParamVector{1.0};
  EXPECT_THROW(run(cfg), std::invalid_argument);
  // custom schedule shorter than T
  const Compressor c = Compressor::identity(0.5);
  const RunConfig short_sched{Problem::quadratic(), Schedule::custom({0.1, 0.1}), c, c, 1, 5, ParamVector{1.0}, 0};
  EXPECT_THROW(run(short_sched), std::out_of_range);
}

TEST(Engine, DivergenceRaisesNonFiniteWithRound) {
  // |1 - 2 eta| = 19 per round on the quadratic overflows within a few hundred rounds
  const Compressor c = Compressor::identity(0.5);
  const RunConfig cfg{Problem::quadratic(), Schedule::constant(10.0), c, c, 1, 10000, ParamVector{1.0}, 0};
  try {
    run(cfg);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_GT(e.round(), 100);
    EXPECT_LT(e.round(), 400);
  }
}

TEST(Engine, EnsembleMembersUseDistinctSeeds) {
  const RunConfig cfg = synthetic_config(Compressor::identity(0.5), 2, 5, 0.5, 9);
  const std::vector<Trajectory> ens = run_ensemble(cfg, 4, 2);
  ASSERT_EQ(ens.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(ens[r].seed, ensemble_member_seed(9, r));
  EXPECT_NE(ens[0].final_x, ens[1].final_x);
  const std::vector<Trajectory> again = run_ensemble(cfg, 4, 1);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(ens[r].final_x, again[r].final_x);
}

TEST(Engine, SampleIndexDistribution) {
  const std::vector<double> w = sample_index_distribution(Schedule::counter_ex2(), 2.0, 100);
  double sum = 0.0;
  for (double v : w) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // oracle: eta_k (3 - 2 L eta_k) normalized
  double total = 0.0;
  for (int k = 0; k < 100; ++k) total += ce2_eta(k) * (3.0 - 4.0 * ce2_eta(k));
  EXPECT_NEAR(w[7], ce2_eta(7) * (3.0 - 4.0 * ce2_eta(7)) / total, 1e-15);
  EXPECT_THROW(sample_index_distribution(Schedule::constant(0.75), 2.0, 10), std::domain_error);
}

TEST(Engine, SampleIndexFollowsWeights) {
  const std::vector<double> w{0.1, 0.6, 0.3};
  Rng rng(4);
  std::vector<int> counts(3, 0);
  const int n = 30000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_index(w, rng))];
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(counts[k] / static_cast<double>(n), w[k], 4.0 * std::sqrt(w[k] * (1 - w[k]) / n));
  }
}
