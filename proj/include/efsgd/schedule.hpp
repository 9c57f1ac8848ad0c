#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace efsgd {

/// Learning-rate sequence {eta_t}_{t >= -1} with eta_{-1} = 0.
class Schedule {
 public:
  struct Constant {
    double eta;
  };
  /// eta_t = 1 / (48 t + 2)
  struct CounterEx1 {};
  /// eta_t = (3/4) / (26 t + 2)
  struct CounterEx2 {};
  /// eta_t = (3/2) / (48 t + 2)
  struct CounterEx3 {};
  /// eta_t = 1 / ( ((t+1) T)^{1/4} / sqrt(M) + T^{1/3} )
  struct Corollary2 {
    int workers;
    std::int64_t rounds;
  };
  /// Explicit table eta_0 .. eta_{n-1}; querying past the end is an error.
  struct Custom {
    std::vector<double> table;
  };

  using Kind = std::variant<Constant, CounterEx1, CounterEx2, CounterEx3, Corollary2, Custom>;

  static Schedule constant(double eta);
  static Schedule counter_ex1() { return Schedule(CounterEx1{}); }
  static Schedule counter_ex2() { return Schedule(CounterEx2{}); }
  static Schedule counter_ex3() { return Schedule(CounterEx3{}); }
  static Schedule corollary2(int workers, std::int64_t rounds);
  static Schedule custom(std::vector<double> table);

  const Kind& kind() const { return kind_; }

  /// Short textual form, e.g. "constant:0.05", "counterex1", "corollary2:4:4096".
  std::string describe() const;

  /// Last valid index for Custom schedules, unbounded (-1) otherwise.
  std::int64_t horizon() const;

 private:
  explicit Schedule(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// eta_t for t >= -1; exactly 0 at t = -1. Rejects t < -1.
double eta(const Schedule& schedule, std::int64_t t);

/// eta_{t-1} / eta_t, the error rescaling factor. Exactly 0 at t = 0.
double eta_ratio(const Schedule& schedule, std::int64_t t);

/// eta_0 .. eta_{count-1}
std::vector<double> eta_table(const Schedule& schedule, std::int64_t count);

bool is_non_decreasing(const Schedule& schedule, std::int64_t count);

}  // namespace efsgd
