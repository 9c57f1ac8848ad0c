#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "efsgd/schedule.hpp"

namespace efsgd {

/// Every symbol the bound formulas consume, besides the schedule itself.
struct BoundInputs {
  Schedule schedule;
  double delta = 0.5;
  double G = 0.0;
  double L = 0.0;
  double sigma = 0.0;
  int M = 1;
  std::int64_t T = 1;
  double f_gap = 0.0;  // f(x_0) - f*

  double alpha() const { return 1.0 - delta / 2.0; }
};

/// 8(1-d)G^2/d^2 (1 + 16/d^2). The constant error bound that only holds for
/// non-decreasing step sizes; kept for comparison.
double lemma_a_bound(double delta, double G);

/// Bound on ||e~_{t+1} + mean_i e_{t+1,i}||^2 valid for arbitrary step sizes:
///
///   c1 * sum_{k<=t} (eta_{t-k}/eta_t)^2 a^k
/// + c2 * sum_{j<=t} a^{t-j} sum_{k<=j} (eta_{j-k}/eta_t)^2 a^k
///
/// with a = 1 - d/2, c1 = 2(1-d)(2-d)G^2/d, c2 = 4(1-d)(2-d)^3 G^2/d^2.
///
/// The naive form evaluates the double sum directly in O(t^2).
double theorem2_error_bound_naive(const Schedule& schedule, double delta, double G, std::int64_t t);

/// Same value in O(t) through the running sums
///   A_t = a (eta_{t-1}/eta_t)^2 A_{t-1} + 1,
///   B_t = a (eta_{t-1}/eta_t)^2 B_{t-1} + A_t.
double theorem2_error_bound(const Schedule& schedule, double delta, double G, std::int64_t t);

/// Bounds for t = 0 .. count-1 in a single O(count) pass.
std::vector<double> theorem2_error_bounds(const Schedule& schedule, double delta, double G, std::int64_t count);

/// Running state of the incremental evaluator, exposed for sweeps.
class Theorem2Sums {
 public:
  Theorem2Sums(const Schedule& schedule, double delta);
  /// Moves to the next t (starting at 0) and returns it.
  std::int64_t advance();
  std::int64_t t() const { return t_; }
  double single_sum() const { return a_; }  // A_t
  double double_sum() const { return b_; }  // B_t
  double bound(double G) const;

 private:
  Schedule schedule_;
  double delta_;
  double alpha_;
  std::int64_t t_ = -1;
  double a_ = 0.0;
  double b_ = 0.0;
};

/// Closed form of the error bound at t = 1 in terms of eta_0 and eta_1.
double remark1_u(double delta, double G, double eta0, double eta1);

struct ConvergenceBound {
  double denominator = 0.0;  // sum_k eta_k (3 - 2 L eta_k)
  double gap_term = 0.0;
  double noise_term = 0.0;
  double error_term_single = 0.0;
  double error_term_double = 0.0;
  double total = 0.0;
};

/// Four-term bound on E||grad f(x_o)||^2 for arbitrary step sizes. Requires
/// 0 < eta_t < 3/(2L) for all t < T. The t = 0 error summands vanish since
/// eta_{-1} = 0.
ConvergenceBound theorem1_rhs(const BoundInputs& in);

/// Direct O(T^3) evaluation of the same expression; test oracle.
ConvergenceBound theorem1_rhs_naive(const BoundInputs& in);

/// Three-term bound built on the constant error bound. Only valid for
/// non-decreasing step sizes; evaluated for comparison. `error_term_single`
/// carries the third term, `error_term_double` is zero.
ConvergenceBound theorem_a_rhs(const BoundInputs& in);

struct Corollary2Bound {
  double value = 0.0;
  double prefactor = 0.0;  // 2 (1/sqrt(MT) + T^{-2/3})
  bool threshold_met = false;  // T >= 16 L^4 M^2
};

/// 2(1/sqrt(MT) + 1/T^{2/3}) [f_gap + L s^2 + 4(1-d)(2-d)G^2L^2/d^2 (1 + 4/d^2)].
/// Below the T threshold the value is still computed and flagged.
Corollary2Bound corollary2_rhs(int M, std::int64_t T, double f_gap, double L, double sigma, double delta, double G);

/// Recursive-sequence bound: with a_0 = 0 and a_{s+1} <= alpha_s a_s + beta_s,
///   a_{t+1} <= beta_t + sum_{j=1}^{t} (prod_{i=j}^{t} alpha_i) beta_{j-1}.
double lemma2_closed_form(std::span<const double> alphas, std::span<const double> betas, std::int64_t t);

/// a_1 .. a_n of the equality recursion a_{s+1} = alpha_s a_s + beta_s, a_0 = 0.
std::vector<double> lemma2_iterate(std::span<const double> alphas, std::span<const double> betas);

}  // namespace efsgd
