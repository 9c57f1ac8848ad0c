#include <gtest/gtest.h>

#include <cmath>

#include "efsgd/bounds.hpp"

using namespace efsgd;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Corrected error bound written directly from its definition.
double error_bound_oracle(const std::vector<double>& eta, double delta, double G, int t) {
  const double a = 1.0 - delta / 2.0;
  const double c1 = 2.0 * (1.0 - delta) * (2.0 - delta) * G * G / delta;
  const double c2 = 4.0 * (1.0 - delta) * std::pow(2.0 - delta, 3) * G * G / (delta * delta);
  double s1 = 0.0, s2 = 0.0;
  for (int k = 0; k <= t; ++k) s1 += std::pow(eta[t - k] / eta[t], 2) * std::pow(a, k);
  for (int j = 0; j <= t; ++j) {
    for (int k = 0; k <= j; ++k) s2 += std::pow(a, t - j) * std::pow(eta[j - k] / eta[t], 2) * std::pow(a, k);
  }
  return c1 * s1 + c2 * s2;
}

}  // namespace

TEST(Bounds, LemmaAValue) {
  EXPECT_LE(rel(lemma_a_bound(0.9, 0.25), 1.2810547172687086), 1e-12);
  EXPECT_LE(rel(lemma_a_bound(0.9, 2.0), 81.98750190519735), 1e-12);
  const double d = 0.3, G = 1.7;
  EXPECT_DOUBLE_EQ(lemma_a_bound(d, G), 8.0 * 0.7 * G * G / (d * d) * (1.0 + 16.0 / (d * d)));
}

TEST(Bounds, DeltaRange) {
  for (double d : {0.0, 1.0, 1.5, -0.1}) {
    EXPECT_THROW(lemma_a_bound(d, 1.0), std::domain_error) << d;
    EXPECT_THROW(theorem2_error_bound(Schedule::constant(0.1), d, 1.0, 3), std::domain_error) << d;
  }
  EXPECT_THROW(theorem2_error_bound(Schedule::constant(0.1), 0.5, 1.0, -1), std::out_of_range);
}

TEST(Bounds, ZeroGradientBoundGivesZero) {
  EXPECT_EQ(lemma_a_bound(0.5, 0.0), 0.0);
  EXPECT_EQ(theorem2_error_bound(Schedule::counter_ex1(), 0.5, 0.0, 10), 0.0);
}

TEST(Bounds, Theorem2AtZeroIsSumOfCoefficients) {
  const double d = 0.4, G = 1.3;
  const double c1 = 2.0 * (1.0 - d) * (2.0 - d) * G * G / d;
  const double c2 = 4.0 * (1.0 - d) * std::pow(2.0 - d, 3) * G * G / (d * d);
  EXPECT_LE(rel(theorem2_error_bound(Schedule::counter_ex2(), d, G, 0), c1 + c2), 1e-14);
}

TEST(Bounds, Theorem2MatchesDefinition) {
  const std::vector<double> eta{0.5, 0.02, 0.3, 0.3, 0.001, 0.7, 0.05};
  const Schedule s = Schedule::custom(eta);
  for (double d : {0.1, 0.5, 0.9}) {
    for (int t = 0; t < 7; ++t) {
      const double oracle = error_bound_oracle(eta, d, 0.8, t);
      EXPECT_LE(rel(theorem2_error_bound(s, d, 0.8, t), oracle), 1e-12) << d << " " << t;
      EXPECT_LE(rel(theorem2_error_bound_naive(s, d, 0.8, t), oracle), 1e-12) << d << " " << t;
    }
  }
}

TEST(Bounds, Theorem2ConstantScheduleClosedForm) {
  // ratios are 1: A_t = sum_{k<=t} a^k, B_t = sum_{j<=t} a^{t-j} A_j
  const double d = 0.5, G = 1.0, a = 0.75;
  const double c1 = 2.0 * 0.5 * 1.5 / 0.5;
  const double c2 = 4.0 * 0.5 * std::pow(1.5, 3) / 0.25;
  for (int t : {0, 1, 5, 40}) {
    double A = 0, B = 0;
    for (int j = 0; j <= t; ++j) {
      const double Aj = (1.0 - std::pow(a, j + 1)) / (1.0 - a);
      B += std::pow(a, t - j) * Aj;
      if (j == t) A = Aj;
    }
    EXPECT_LE(rel(theorem2_error_bound(Schedule::constant(0.01), d, G, t), c1 * A + c2 * B), 1e-13) << t;
  }
}

TEST(Bounds, RemarkOneValues) {
  EXPECT_LE(rel(remark1_u(0.9, 0.25, 0.5, 0.02), 33.550763888888895), 1e-12);
  EXPECT_LE(rel(theorem2_error_bound(Schedule::counter_ex1(), 0.9, 0.25, 1), 33.550763888888895), 1e-12);
  EXPECT_LE(rel(theorem2_error_bound(Schedule::counter_ex3(), 0.9, 0.25, 1), 33.550763888888895), 1e-12);
  EXPECT_LE(rel(theorem2_error_bound(Schedule::counter_ex2(), 0.9, 2.0, 1), 675.8530370370372), 1e-12);
}

TEST(Bounds, RemarkOneEqualsTheorem2AtOne) {
  for (double d : {0.2, 0.6, 0.95}) {
    for (auto [e0, e1] : {std::pair{0.5, 0.02}, std::pair{0.1, 0.3}, std::pair{1.0, 1.0}}) {
      EXPECT_LE(rel(remark1_u(d, 1.1, e0, e1), theorem2_error_bound(Schedule::custom({e0, e1}), d, 1.1, 1)), 1e-13);
    }
  }
}

TEST(Bounds, DecreasingStepsBreakTheConstantBound) {
  for (const Schedule& s : {Schedule::counter_ex1(), Schedule::counter_ex2(), Schedule::counter_ex3()}) {
    EXPECT_GT(theorem2_error_bound(s, 0.9, 1.0, 1), lemma_a_bound(0.9, 1.0)) << s.describe();
  }
}

TEST(Bounds, IncrementalSumsTrackNaive) {
  Theorem2Sums sums(Schedule::counter_ex2(), 0.3);
  for (int t = 0; t < 40; ++t) {
    EXPECT_EQ(sums.advance(), t);
    EXPECT_LE(rel(sums.bound(2.0), theorem2_error_bound_naive(Schedule::counter_ex2(), 0.3, 2.0, t)), 1e-12);
  }
  const std::vector<double> all = theorem2_error_bounds(Schedule::counter_ex2(), 0.3, 2.0, 10);
  EXPECT_LE(rel(all[9], theorem2_error_bound(Schedule::counter_ex2(), 0.3, 2.0, 9)), 1e-15);
}

TEST(Bounds, Theorem1IncrementalMatchesNaive) {
  for (const Schedule& s : {Schedule::counter_ex2(), Schedule::constant(0.05), Schedule::corollary2(4, 60),
                            Schedule::custom({0.1, 0.01, 0.2, 0.05, 0.3, 0.3, 0.001, 0.4})}) {
    const BoundInputs in{s, 0.4, 1.5, 1.0, 0.7, 3, 8, 2.0};
    const ConvergenceBound fast = theorem1_rhs(in);
    const ConvergenceBound slow = theorem1_rhs_naive(in);
    EXPECT_LE(rel(fast.total, slow.total), 1e-12) << s.describe();
    EXPECT_LE(rel(fast.error_term_double, slow.error_term_double), 1e-12) << s.describe();
  }
}

TEST(Bounds, Theorem1LeadingTerms) {
  // T = 1: no error terms; S = eta(3 - 2 L eta)
  const BoundInputs in{Schedule::constant(0.1), 0.5, 1.0, 2.0, 0.5, 4, 1, 3.0};
  const ConvergenceBound b = theorem1_rhs(in);
  const double S = 0.1 * (3.0 - 0.4);
  EXPECT_DOUBLE_EQ(b.denominator, S);
  EXPECT_DOUBLE_EQ(b.gap_term, 12.0 / S);
  EXPECT_DOUBLE_EQ(b.noise_term, 2.0 * 2.0 * 0.25 / 4.0 * 0.01 / S);
  EXPECT_EQ(b.error_term_single, 0.0);
  EXPECT_EQ(b.error_term_double, 0.0);
}

TEST(Bounds, Theorem1TwoRoundErrorTerms) {
  // T = 2: only t = 1 contributes, with A_0 = B_0 = 1
  const double d = 0.5, G = 1.0, L = 1.0, e0 = 0.2, e1 = 0.1;
  const BoundInputs in{Schedule::custom({e0, e1}), d, G, L, 0.0, 1, 2, 1.0};
  const ConvergenceBound b = theorem1_rhs(in);
  const double S = e0 * (3 - 2 * L * e0) + e1 * (3 - 2 * L * e1);
  const double c1 = 2 * (1 - d) * (2 - d) * G * G / d;
  const double c2 = 4 * (1 - d) * std::pow(2 - d, 3) * G * G / (d * d);
  EXPECT_LE(rel(b.error_term_single, 4 * L * L * c1 * e1 * e0 * e0 / S), 1e-14);
  EXPECT_LE(rel(b.error_term_double, 4 * L * L * c2 * e1 * e0 * e0 / S), 1e-14);
}

TEST(Bounds, TheoremAValue) {
  const double d = 0.5, G = 1.0, L = 1.0, e0 = 0.2, e1 = 0.1;
  const BoundInputs in{Schedule::custom({e0, e1}), d, G, L, 0.0, 1, 2, 1.0};
  const ConvergenceBound b = theorem_a_rhs(in);
  const double S = e0 * (3 - 2 * L * e0) + e1 * (3 - 2 * L * e1);
  const double expected = 32 * L * L * (1 - d) * G * G / (d * d) * (1 + 16 / (d * d)) * e1 * e0 * e0 / S;
  EXPECT_LE(rel(b.error_term_single, expected), 1e-14);
  EXPECT_EQ(b.error_term_double, 0.0);
  EXPECT_LE(rel(b.total, b.gap_term + b.noise_term + expected), 1e-14);
}

TEST(Bounds, AtTwoRoundsTheorem1NeverExceedsTheoremA) {
  // with A = B = 1 the corrected third+fourth terms are 4 L^2 (c1 + c2) vs
  // 32 L^2 (1-d) G^2/d^2 (1 + 16/d^2); the former is smaller for every d in (0,1)
  for (const Schedule& s : {Schedule::counter_ex1(), Schedule::counter_ex2(), Schedule::counter_ex3()}) {
    for (double d : {0.05, 0.3, 0.6, 0.9, 0.99}) {
      const BoundInputs in{s, d, 1.0, 1.0, 0.0, 2, 2, 1.0};
      EXPECT_LE(theorem1_rhs(in).total, theorem_a_rhs(in).total) << s.describe() << " " << d;
    }
  }
}

TEST(Bounds, LongDecreasingScheduleTheorem1ExceedsTheoremA) {
  // the corrected bound grows with eta_{t-1}/eta_t; the constant one does not see it
  const BoundInputs in{Schedule::counter_ex1(), 0.9, 1.0, 1.0, 0.0, 2, 400, 1.0};
  EXPECT_GT(theorem1_rhs(in).error_term_double, 0.0);
  std::vector<double> eta;
  for (int t = 0; t < 50; ++t) eta.push_back(t % 2 ? 0.001 : 0.5);
  const BoundInputs zigzag{Schedule::custom(eta), 0.9, 1.0, 1.0, 0.0, 2, 50, 1.0};
  EXPECT_GT(theorem1_rhs(zigzag).total, theorem_a_rhs(zigzag).total);
}

TEST(Bounds, StepSizeConditionIsEnforced) {
  const BoundInputs bad{Schedule::constant(0.75), 0.5, 1.0, 2.0, 0.0, 1, 10, 1.0};
  EXPECT_THROW(theorem1_rhs(bad), std::domain_error);
  EXPECT_THROW(theorem_a_rhs(bad), std::domain_error);
  const BoundInputs ok{Schedule::constant(0.7499), 0.5, 1.0, 2.0, 0.0, 1, 10, 1.0};
  EXPECT_NO_THROW(theorem1_rhs(ok));
}

TEST(Bounds, Corollary2Formula) {
  const int M = 4;
  const std::int64_t T = 4096;
  const double f = 2.0, L = 1.0, s = 0.5, d = 0.5, G = 3.0;
  const Corollary2Bound c = corollary2_rhs(M, T, f, L, s, d, G);
  const double pre = 2.0 * (1.0 / std::sqrt(4.0 * 4096.0) + std::pow(4096.0, -2.0 / 3.0));
  const double bracket = f + L * s * s + 4 * (1 - d) * (2 - d) * G * G * L * L / (d * d) * (1 + 4 / (d * d));
  EXPECT_LE(rel(c.prefactor, pre), 1e-14);
  EXPECT_LE(rel(c.value, pre * bracket), 1e-14);
  EXPECT_TRUE(c.threshold_met);
  EXPECT_FALSE(corollary2_rhs(4, 255, f, 1.0, s, d, G).threshold_met);
  EXPECT_TRUE(corollary2_rhs(4, 256, f, 1.0, s, d, G).threshold_met);
}

TEST(Bounds, Lemma2ClosedFormExamples) {
  // constant beta: beta (1 + sum_j prod_i alpha_i)
  const std::vector<double> alphas{0.5, 0.8, 1.2, 0.3};
  const std::vector<double> betas(4, 2.0);
  const int t = 3;
  double sum = 0.0;
  for (int j = 1; j <= t; ++j) {
    double prod = 1.0;
    for (int i = j; i <= t; ++i) prod *= alphas[i];
    sum += prod;
  }
  EXPECT_LE(rel(lemma2_closed_form(alphas, betas, t), 2.0 * (1.0 + sum)), 1e-15);
  // alpha = 0: a_{t+1} = beta_t
  const std::vector<double> zeros(4, 0.0);
  const std::vector<double> bs{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(lemma2_closed_form(zeros, bs, 2), 3.0);
  EXPECT_EQ(lemma2_iterate(zeros, bs), bs);
  EXPECT_THROW(lemma2_closed_form(zeros, bs, 4), std::out_of_range);
}
