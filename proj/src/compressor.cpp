#include "efsgd/compressor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace efsgd {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Relative slack for the deterministic contract, covering rounding in the
// ratio itself.
constexpr double kDeterministicSlack = 1e-12;

void require_k(std::size_t k, std::size_t dim) {
  if (k > dim) {
    throw std::invalid_argument("compress: k = " + std::to_string(k) + " exceeds dimension " + std::to_string(dim));
  }
}

}  // namespace

Compressor::Compressor(Kind kind, double declared_delta) : kind_(std::move(kind)), declared_delta_(declared_delta) {
  if (!(declared_delta > 0.0 && declared_delta <= 1.0)) {
    throw std::invalid_argument("compressor: declared delta must lie in (0, 1]");
  }
  std::visit(Overloaded{
                 [](const Scaling& s) {
                   if (!(s.c > 0.0) || !std::isfinite(s.c)) throw std::invalid_argument("scaling compressor: c must be positive");
                 },
                 [](const TopK& t) {
                   if (t.k == 0) throw std::invalid_argument("top-k compressor: k must be >= 1");
                 },
                 [](const RandomSparsify& r) {
                   if (r.k == 0) throw std::invalid_argument("random-sparsify compressor: k must be >= 1");
                 },
                 [](const Identity&) {},
             },
             kind_);
}

Compressor Compressor::scaling(double c, double declared_delta) { return Compressor(Scaling{c}, declared_delta); }
Compressor Compressor::top_k(std::size_t k, double declared_delta) { return Compressor(TopK{k}, declared_delta); }
Compressor Compressor::random_sparsify(std::size_t k, double declared_delta, bool rescale) {
  return Compressor(RandomSparsify{k, rescale}, declared_delta);
}
Compressor Compressor::identity(double declared_delta) { return Compressor(Identity{}, declared_delta); }

double Compressor::max_admissible_delta(std::size_t dim) const {
  return std::visit(Overloaded{
                        [](const Scaling& s) {
                          const double r = 1.0 / s.c - 1.0;
                          return 1.0 - r * r;
                        },
                        [&](const TopK& t) { return static_cast<double>(t.k) / static_cast<double>(dim); },
                        [&](const RandomSparsify& r) {
                          const double frac = static_cast<double>(r.k) / static_cast<double>(dim);
                          return r.rescale ? 2.0 - 1.0 / frac : frac;
                        },
                        [](const Identity&) { return 1.0; },
                    },
                    kind_);
}

std::string Compressor::describe() const {
  const std::string body = std::visit(
      Overloaded{
          [](const Scaling& s) { return fmt::format("scaling:{}", s.c); },
          [](const TopK& t) { return fmt::format("topk:{}", t.k); },
          [](const RandomSparsify& r) { return fmt::format("{}:{}", r.rescale ? "randk-unbiased" : "randk", r.k); },
          [](const Identity&) { return std::string("identity"); },
      },
      kind_);
  return fmt::format("{}@{}", body, declared_delta_);
}

ParamVector compress(const Compressor& c, const ParamVector& x, Rng& rng) {
  return std::visit(Overloaded{
                        [&](const Compressor::Scaling& s) { return x / s.c; },
                        [&](const Compressor::TopK& t) {
                          require_k(t.k, x.dim());
                          std::vector<std::size_t> order(x.dim());
                          std::iota(order.begin(), order.end(), std::size_t{0});
                          std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                            return std::abs(x[a]) > std::abs(x[b]);
                          });
                          ParamVector out(x.dim());
                          for (std::size_t j = 0; j < t.k; ++j) out[order[j]] = x[order[j]];
                          return out;
                        },
                        [&](const Compressor::RandomSparsify& r) {
                          require_k(r.k, x.dim());
                          const std::size_t d = x.dim();
                          std::vector<std::size_t> idx(d);
                          std::iota(idx.begin(), idx.end(), std::size_t{0});
                          // partial Fisher-Yates: the first k slots are a uniform k-subset
                          for (std::size_t j = 0; j < r.k; ++j) {
                            const std::size_t pick = j + static_cast<std::size_t>(rng.below(d - j));
                            std::swap(idx[j], idx[pick]);
                          }
                          const double scale = r.rescale ? static_cast<double>(d) / static_cast<double>(r.k) : 1.0;
                          ParamVector out(d);
                          for (std::size_t j = 0; j < r.k; ++j) out[idx[j]] = scale * x[idx[j]];
                          return out;
                        },
                        [&](const Compressor::Identity&) { return x; },
                    },
                    c.kind());
}

ContractReport check_contract(const Compressor& c, std::span<const ParamVector> samples, int trials, Rng& rng) {
  if (samples.empty()) throw std::invalid_argument("check_contract: no samples");
  if (trials < 1) throw std::invalid_argument("check_contract: trials must be >= 1");

  ContractReport report;
  report.randomized = c.is_randomized();
  report.allowed_ratio = 1.0 - c.declared_delta();

  const int reps = report.randomized ? trials : 1;
  for (const ParamVector& x : samples) {
    const double xx = squared_norm(x);
    if (xx == 0.0) throw std::invalid_argument("check_contract: zero-norm sample");
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) acc += squared_norm(compress(c, x, rng) - x) / xx;
    report.measured_ratio = std::max(report.measured_ratio, acc / reps);
  }

  report.threshold = report.randomized ? report.allowed_ratio * (1.0 + 3.0 / std::sqrt(static_cast<double>(trials)))
                                       : report.allowed_ratio * (1.0 + kDeterministicSlack);
  report.passes = report.measured_ratio <= report.threshold;
  return report;
}

}  // namespace efsgd
