#include "efsgd/schedule.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace efsgd {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Schedule Schedule::constant(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("constant schedule: eta must be positive");
  return Schedule(Constant{eta});
}

Schedule Schedule::corollary2(int workers, std::int64_t rounds) {
  if (workers < 1) throw std::invalid_argument("corollary2 schedule: M must be >= 1");
  if (rounds < 1) throw std::invalid_argument("corollary2 schedule: T must be >= 1");
  return Schedule(Corollary2{workers, rounds});
}

Schedule Schedule::custom(std::vector<double> table) {
  if (table.empty()) throw std::invalid_argument("custom schedule: empty table");
  for (double v : table) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("custom schedule: entries must be positive");
  }
  return Schedule(Custom{std::move(table)});
}

std::string Schedule::describe() const {
  return std::visit(Overloaded{
                        [](const Constant& c) { return fmt::format("constant:{}", c.eta); },
                        [](const CounterEx1&) { return std::string("counterex1"); },
                        [](const CounterEx2&) { return std::string("counterex2"); },
                        [](const CounterEx3&) { return std::string("counterex3"); },
                        [](const Corollary2& c) { return fmt::format("corollary2:{}:{}", c.workers, c.rounds); },
                        [](const Custom& c) { return fmt::format("custom:{}", fmt::join(c.table, ";")); },
                    },
                    kind_);
}

std::int64_t Schedule::horizon() const {
  if (const auto* c = std::get_if<Custom>(&kind_)) return static_cast<std::int64_t>(c->table.size());
  return -1;
}

double eta(const Schedule& schedule, std::int64_t t) {
  if (t < -1) throw std::out_of_range("eta: t must be >= -1");
  if (t == -1) return 0.0;
  const double td = static_cast<double>(t);
  return std::visit(Overloaded{
                        [](const Schedule::Constant& c) { return c.eta; },
                        [&](const Schedule::CounterEx1&) { return 1.0 / (48.0 * td + 2.0); },
                        [&](const Schedule::CounterEx2&) { return 0.75 / (26.0 * td + 2.0); },
                        [&](const Schedule::CounterEx3&) { return 1.5 / (48.0 * td + 2.0); },
                        [&](const Schedule::Corollary2& c) {
                          const double T = static_cast<double>(c.rounds);
                          return 1.0 / (std::pow((td + 1.0) * T, 0.25) / std::sqrt(static_cast<double>(c.workers)) +
                                        std::cbrt(T));
                        },
                        [&](const Schedule::Custom& c) {
                          if (t >= static_cast<std::int64_t>(c.table.size())) {
                            throw std::out_of_range("eta: custom schedule has no entry for t = " + std::to_string(t));
                          }
                          return c.table[static_cast<std::size_t>(t)];
                        },
                    },
                    schedule.kind());
}

double eta_ratio(const Schedule& schedule, std::int64_t t) {
  if (t < 0) throw std::out_of_range("eta_ratio: t must be >= 0");
  const double current = eta(schedule, t);
  if (current == 0.0) throw std::domain_error("eta_ratio: eta_t is zero");
  if (t == 0) return 0.0;
  return eta(schedule, t - 1) / current;
}

std::vector<double> eta_table(const Schedule& schedule, std::int64_t count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t t = 0; t < count; ++t) out.push_back(eta(schedule, t));
  return out;
}

bool is_non_decreasing(const Schedule& schedule, std::int64_t count) {
  for (std::int64_t t = 1; t < count; ++t) {
    if (eta(schedule, t) < eta(schedule, t - 1)) return false;
  }
  return true;
}

}  // namespace efsgd
