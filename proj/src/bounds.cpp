#include "efsgd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace efsgd {
namespace {

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
}

void require_positive_eta(double e, std::int64_t t) {
  if (!(e > 0.0)) throw std::domain_error("step size eta_" + std::to_string(t) + " must be positive");
}

double single_coeff(double delta, double G) { return 2.0 * (1.0 - delta) * (2.0 - delta) * G * G / delta; }

double double_coeff(double delta, double G) {
  const double two_minus = 2.0 - delta;
  return 4.0 * (1.0 - delta) * two_minus * two_minus * two_minus * G * G / (delta * delta);
}

// Checks 0 < eta_t < 3/(2L) for t < T and returns the weight denominator.
double weight_denominator(const std::vector<double>& etas, double L) {
  double total = 0.0;
  for (std::size_t t = 0; t < etas.size(); ++t) {
    const double e = etas[t];
    require_positive_eta(e, static_cast<std::int64_t>(t));
    if (L > 0.0 && !(e < 1.5 / L)) {
      throw std::domain_error("step-size condition violated: eta_" + std::to_string(t) + " >= 3/(2L)");
    }
    total += e * (3.0 - 2.0 * L * e);
  }
  return total;
}

void require_inputs(const BoundInputs& in) {
  require_delta(in.delta);
  if (in.M < 1) throw std::invalid_argument("bound inputs: M must be >= 1");
  if (in.T < 1) throw std::invalid_argument("bound inputs: T must be >= 1");
  if (!(in.L >= 0.0) || !(in.G >= 0.0) || !(in.sigma >= 0.0)) {
    throw std::invalid_argument("bound inputs: L, G, sigma must be non-negative");
  }
}

// Shared first two terms.
void fill_leading_terms(const BoundInputs& in, const std::vector<double>& etas, ConvergenceBound& out) {
  out.denominator = weight_denominator(etas, in.L);
  double sq = 0.0;
  for (double e : etas) sq += e * e;
  out.gap_term = 4.0 * in.f_gap / out.denominator;
  out.noise_term = 2.0 * in.L * in.sigma * in.sigma / static_cast<double>(in.M) * sq / out.denominator;
}

}  // namespace

double lemma_a_bound(double delta, double G) {
  require_delta(delta);
  const double d2 = delta * delta;
  return 8.0 * (1.0 - delta) * G * G / d2 * (1.0 + 16.0 / d2);
}

double theorem2_error_bound_naive(const Schedule& schedule, double delta, double G, std::int64_t t) {
  require_delta(delta);
  if (t < 0) throw std::out_of_range("theorem2_error_bound: t must be >= 0");
  const double alpha = 1.0 - delta / 2.0;
  std::vector<double> etas = eta_table(schedule, t + 1);
  for (std::int64_t s = 0; s <= t; ++s) require_positive_eta(etas[static_cast<std::size_t>(s)], s);
  const double et2 = etas[static_cast<std::size_t>(t)] * etas[static_cast<std::size_t>(t)];
  auto eta_sq = [&](std::int64_t s) { return etas[static_cast<std::size_t>(s)] * etas[static_cast<std::size_t>(s)]; };

  double single = 0.0;
  for (std::int64_t k = 0; k <= t; ++k) single += eta_sq(t - k) / et2 * std::pow(alpha, static_cast<double>(k));

  double dbl = 0.0;
  for (std::int64_t j = 0; j <= t; ++j) {
    double inner = 0.0;
    for (std::int64_t k = 0; k <= j; ++k) inner += eta_sq(j - k) / et2 * std::pow(alpha, static_cast<double>(k));
    dbl += std::pow(alpha, static_cast<double>(t - j)) * inner;
  }
  return single_coeff(delta, G) * single + double_coeff(delta, G) * dbl;
}

Theorem2Sums::Theorem2Sums(const Schedule& schedule, double delta)
    : schedule_(schedule), delta_(delta), alpha_(1.0 - delta / 2.0) {
  require_delta(delta);
}

std::int64_t Theorem2Sums::advance() {
  ++t_;
  const double current = eta(schedule_, t_);
  require_positive_eta(current, t_);
  if (t_ == 0) {
    a_ = 1.0;
    b_ = 1.0;
  } else {
    const double r = eta(schedule_, t_ - 1) / current;
    const double scale = alpha_ * r * r;
    a_ = scale * a_ + 1.0;
    b_ = scale * b_ + a_;
  }
  return t_;
}

double Theorem2Sums::bound(double G) const {
  if (t_ < 0) throw std::logic_error("Theorem2Sums: advance() not called");
  return single_coeff(delta_, G) * a_ + double_coeff(delta_, G) * b_;
}

double theorem2_error_bound(const Schedule& schedule, double delta, double G, std::int64_t t) {
  if (t < 0) throw std::out_of_range("theorem2_error_bound: t must be >= 0");
  Theorem2Sums sums(schedule, delta);
  while (sums.t() < t) sums.advance();
  return sums.bound(G);
}

std::vector<double> theorem2_error_bounds(const Schedule& schedule, double delta, double G, std::int64_t count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  Theorem2Sums sums(schedule, delta);
  for (std::int64_t t = 0; t < count; ++t) {
    sums.advance();
    out.push_back(sums.bound(G));
  }
  return out;
}

double remark1_u(double delta, double G, double eta0, double eta1) {
  require_delta(delta);
  if (!(eta1 > 0.0)) throw std::domain_error("remark1_u: eta1 must be positive");
  const double r2 = (eta0 * eta0) / (eta1 * eta1);
  const double half = 1.0 - delta / 2.0;
  return single_coeff(delta, G) * (1.0 + r2 * half) + double_coeff(delta, G) * (1.0 + 2.0 * r2 * half);
}

ConvergenceBound theorem1_rhs(const BoundInputs& in) {
  require_inputs(in);
  const std::vector<double> etas = eta_table(in.schedule, in.T);
  ConvergenceBound out;
  fill_leading_terms(in, etas, out);

  const double alpha = in.alpha();
  const double l2 = in.L * in.L;
  // Running A_{t-1}, B_{t-1}; multiplied back by eta_{t-1}^2 per summand.
  double a = 0.0;
  double b = 0.0;
  double single = 0.0;
  double dbl = 0.0;
  for (std::size_t t = 1; t < etas.size(); ++t) {
    const double prev = etas[t - 1];
    if (t == 1) {
      a = 1.0;
      b = 1.0;
    } else {
      const double r = etas[t - 2] / prev;
      const double scale = alpha * r * r;
      a = scale * a + 1.0;
      b = scale * b + a;
    }
    const double w = etas[t] * prev * prev;
    single += w * a;
    dbl += w * b;
  }
  out.error_term_single = 2.0 * l2 * single_coeff(in.delta, in.G) * 2.0 * single / out.denominator;
  out.error_term_double = 4.0 * l2 * double_coeff(in.delta, in.G) * dbl / out.denominator;
  out.total = out.gap_term + out.noise_term + out.error_term_single + out.error_term_double;
  return out;
}

ConvergenceBound theorem1_rhs_naive(const BoundInputs& in) {
  require_inputs(in);
  const std::vector<double> etas = eta_table(in.schedule, in.T);
  ConvergenceBound out;
  fill_leading_terms(in, etas, out);

  const double alpha = in.alpha();
  const double d = in.delta;
  const double g2l2 = in.G * in.G * in.L * in.L;
  auto at = [&](std::int64_t s) { return etas[static_cast<std::size_t>(s)]; };
  const auto T = static_cast<std::int64_t>(etas.size());

  double single = 0.0;
  double dbl = 0.0;
  for (std::int64_t t = 1; t < T; ++t) {
    const double prev2 = at(t - 1) * at(t - 1);
    double s1 = 0.0;
    for (std::int64_t k = 0; k <= t - 1; ++k) s1 += at(t - 1 - k) * at(t - 1 - k) / prev2 * std::pow(alpha, static_cast<double>(k));
    double s2 = 0.0;
    for (std::int64_t j = 0; j <= t - 1; ++j) {
      double inner = 0.0;
      for (std::int64_t k = 0; k <= j; ++k) inner += at(j - k) * at(j - k) / prev2 * std::pow(alpha, static_cast<double>(k));
      s2 += std::pow(alpha, static_cast<double>(t - 1 - j)) * inner;
    }
    single += at(t) * prev2 * s1;
    dbl += at(t) * prev2 * s2;
  }
  out.error_term_single = 8.0 * (1.0 - d) * (2.0 - d) * g2l2 / (d * out.denominator) * single;
  out.error_term_double = 16.0 * (1.0 - d) * std::pow(2.0 - d, 3.0) * g2l2 / (d * d * out.denominator) * dbl;
  out.total = out.gap_term + out.noise_term + out.error_term_single + out.error_term_double;
  return out;
}

ConvergenceBound theorem_a_rhs(const BoundInputs& in) {
  require_inputs(in);
  const std::vector<double> etas = eta_table(in.schedule, in.T);
  ConvergenceBound out;
  fill_leading_terms(in, etas, out);
  double sum = 0.0;
  for (std::size_t t = 1; t < etas.size(); ++t) sum += etas[t] * etas[t - 1] * etas[t - 1];
  const double d2 = in.delta * in.delta;
  const double coeff = 32.0 * in.L * in.L * (1.0 - in.delta) * in.G * in.G / d2 * (1.0 + 16.0 / d2);
  out.error_term_single = coeff * sum / out.denominator;
  out.total = out.gap_term + out.noise_term + out.error_term_single;
  return out;
}

Corollary2Bound corollary2_rhs(int M, std::int64_t T, double f_gap, double L, double sigma, double delta, double G) {
  require_delta(delta);
  if (M < 1 || T < 1) throw std::invalid_argument("corollary2_rhs: M and T must be >= 1");
  Corollary2Bound out;
  const double md = static_cast<double>(M);
  const double td = static_cast<double>(T);
  out.prefactor = 2.0 * (1.0 / std::sqrt(md * td) + std::pow(td, -2.0 / 3.0));
  const double d2 = delta * delta;
  const double bracket =
      f_gap + L * sigma * sigma + 4.0 * (1.0 - delta) * (2.0 - delta) * G * G * L * L / d2 * (1.0 + 4.0 / d2);
  out.value = out.prefactor * bracket;
  out.threshold_met = td >= 16.0 * std::pow(L, 4.0) * md * md;
  return out;
}

double lemma2_closed_form(std::span<const double> alphas, std::span<const double> betas, std::int64_t t) {
  if (t < 0 || static_cast<std::size_t>(t) >= betas.size() || static_cast<std::size_t>(t) >= alphas.size()) {
    throw std::out_of_range("lemma2_closed_form: t outside the sequences");
  }
  double value = betas[static_cast<std::size_t>(t)];
  for (std::int64_t j = 1; j <= t; ++j) {
    double prod = 1.0;
    for (std::int64_t i = j; i <= t; ++i) prod *= alphas[static_cast<std::size_t>(i)];
    value += prod * betas[static_cast<std::size_t>(j - 1)];
  }
  return value;
}

std::vector<double> lemma2_iterate(std::span<const double> alphas, std::span<const double> betas) {
  if (alphas.size() != betas.size()) throw std::invalid_argument("lemma2_iterate: length mismatch");
  std::vector<double> out;
  out.reserve(alphas.size());
  double a = 0.0;
  for (std::size_t s = 0; s < alphas.size(); ++s) {
    a = alphas[s] * a + betas[s];
    out.push_back(a);
  }
  return out;
}

}  // namespace efsgd
