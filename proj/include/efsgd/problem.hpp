#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "efsgd/rng.hpp"
#include "efsgd/vector.hpp"

namespace efsgd {

enum class ProblemKind { kLinearQuarter, kQuadratic, kSigmoid, kSyntheticQuadratic };

/// Parameters for f(x) = 1/2 x^T A x - b^T x with A = Q diag(spectrum) Q^T,
/// Q a seeded random orthogonal matrix.
struct SyntheticQuadraticSpec {
  std::size_t dim = 10;
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  /// Entries of b drawn uniformly from [-b_scale, b_scale].
  double b_scale = 1.0;
  /// Noise radius: ||zeta|| <= sigma surely.
  double sigma = 0.0;
  /// Iterate-norm budget B used to declare omega = lambda_max * B + ||b||.
  double budget = 10.0;
  std::uint64_t seed = 0;
};

/// Loss f with its assumption constants. G^2 = sigma^2 + omega^2 always holds.
///
/// Scalar problems (LinearQuarter, Quadratic, Sigmoid) live on R^1; their
/// omega is a global bound except for Quadratic, whose omega = 2 only holds
/// on [-1, 1] (no projection is ever applied, leaving the domain is flagged).
class Problem {
 public:
  static Problem linear_quarter();
  static Problem quadratic();
  static Problem sigmoid();
  static Problem synthetic_quadratic(const SyntheticQuadraticSpec& spec);

  ProblemKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::string describe() const;

  double smoothness() const { return smoothness_; }
  double noise_sigma() const { return sigma_; }
  double grad_bound() const { return omega_; }
  double G() const { return g_; }
  double f_star() const { return f_star_; }

  double loss(const ParamVector& x) const;
  ParamVector grad(const ParamVector& x) const;
  /// grad(x) + zeta with E[zeta] = 0 and ||zeta|| <= sigma surely. Each
  /// coordinate of zeta is uniform on [-sigma/sqrt(d), sigma/sqrt(d)].
  ParamVector stochastic_grad(const ParamVector& x, Rng& rng) const;

  /// Whether x lies in the region where omega is a valid gradient bound.
  bool in_domain(const ParamVector& x) const;

  /// Dense A (row-major) and b, SyntheticQuadratic only.
  const std::vector<double>& matrix() const;
  const ParamVector& linear_term() const;
  const std::vector<double>& spectrum() const;

 private:
  struct QuadraticData {
    std::vector<double> a;  // row-major d x d
    ParamVector b;
    std::vector<double> spectrum;
    double budget = 0.0;
  };

  Problem() = default;
  void check_input(const ParamVector& x) const;

  ProblemKind kind_ = ProblemKind::kLinearQuarter;
  std::size_t dim_ = 1;
  double smoothness_ = 0.0;
  double sigma_ = 0.0;
  double omega_ = 0.0;
  double g_ = 0.0;
  double f_star_ = 0.0;
  std::shared_ptr<const QuadraticData> quad_;
};

}  // namespace efsgd
