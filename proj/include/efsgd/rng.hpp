#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace efsgd {

/// Seeded random stream. Conversions to doubles and bounded integers are done
/// here rather than through <random> distributions, whose output is
/// implementation-defined, so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent stream keyed by (seed, keys...). Used for per-run,
  /// per-round, per-worker substreams so draw order never depends on
  /// scheduling.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n), n > 0 (rejection sampling, unbiased).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stream roles, kept distinct so that gradient noise and compressor
/// randomness never share draws.
enum class StreamRole : std::uint64_t {
  kGradient = 1,
  kWorkerCompressor = 2,
  kServerCompressor = 3,
  kEnsemble = 4,
  kProblem = 5,
};

}  // namespace efsgd
