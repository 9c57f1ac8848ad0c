#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>

#include "efsgd/rng.hpp"
#include "efsgd/vector.hpp"

namespace efsgd {

/// A delta-compressor: E||C(x) - x||^2 <= (1 - delta) ||x||^2.
///
/// `declared_delta` is the delta the bounds are evaluated with. It is an
/// input, checked by check_contract, not something inferred from the kind.
class Compressor {
 public:
  /// x -> x / c. Admissible delta <= 1 - (1/c - 1)^2.
  struct Scaling {
    double c;
  };
  /// Keep the k largest-magnitude coordinates (ties go to the lower index).
  struct TopK {
    std::size_t k;
  };
  /// Keep k coordinates chosen uniformly without replacement. With
  /// `rescale` the kept entries are multiplied by d/k (unbiased, ratio
  /// d/k - 1 in expectation); without it the map is the plain random
  /// projection with expected ratio 1 - k/d.
  struct RandomSparsify {
    std::size_t k;
    bool rescale = false;
  };
  struct Identity {};

  using Kind = std::variant<Scaling, TopK, RandomSparsify, Identity>;

  Compressor(Kind kind, double declared_delta);

  static Compressor scaling(double c, double declared_delta);
  static Compressor top_k(std::size_t k, double declared_delta);
  static Compressor random_sparsify(std::size_t k, double declared_delta, bool rescale = false);
  static Compressor identity(double declared_delta = 1.0);

  const Kind& kind() const { return kind_; }
  double declared_delta() const { return declared_delta_; }
  bool is_randomized() const { return std::holds_alternative<RandomSparsify>(kind_); }

  /// Largest delta for which the contraction holds on R^dim
  /// (in expectation for randomized kinds). May be <= 0 when no delta works.
  double max_admissible_delta(std::size_t dim) const;

  std::string describe() const;

 private:
  Kind kind_;
  double declared_delta_;
};

/// C(x). Deterministic kinds ignore `rng`; randomized kinds draw only from it.
/// Throws if k > dim for sparsifying kinds.
ParamVector compress(const Compressor& c, const ParamVector& x, Rng& rng);

struct ContractReport {
  /// max over samples of ||C(x)-x||^2/||x||^2 (deterministic), or max over
  /// samples of the Monte-Carlo mean ratio (randomized).
  double measured_ratio = 0.0;
  /// 1 - declared_delta
  double allowed_ratio = 0.0;
  /// allowed_ratio with the statistical allowance applied (randomized only)
  double threshold = 0.0;
  bool randomized = false;
  bool passes = false;
};

/// Empirical check of the contraction with the compressor's declared delta.
/// For randomized kinds each sample is compressed `trials` times and the mean
/// ratio must stay below (1 - delta)(1 + 3/sqrt(trials)).
ContractReport check_contract(const Compressor& c, std::span<const ParamVector> samples, int trials, Rng& rng);

}  // namespace efsgd
