#include "efsgd/problem.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace efsgd {
namespace {

double sigmoid_value(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Columns of a random orthogonal matrix via twice-applied modified
// Gram-Schmidt on Gaussian columns.
std::vector<ParamVector> random_orthonormal_basis(std::size_t d, Rng& rng) {
  std::vector<ParamVector> q;
  q.reserve(d);
  while (q.size() < d) {
    ParamVector v(d);
    for (double& e : v) e = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (const ParamVector& u : q) v.add_scaled(-dot(u, v), u);
    }
    const double n = norm(v);
    if (n < 1e-8) continue;
    q.push_back(v / n);
  }
  return q;
}

}  // namespace

Problem Problem::linear_quarter() {
  Problem p;
  p.kind_ = ProblemKind::kLinearQuarter;
  p.smoothness_ = 0.0;
  p.sigma_ = 0.0;
  p.omega_ = 0.25;
  p.g_ = 0.25;
  p.f_star_ = -0.25;
  return p;
}

Problem Problem::quadratic() {
  Problem p;
  p.kind_ = ProblemKind::kQuadratic;
  p.smoothness_ = 2.0;
  p.sigma_ = 0.0;
  p.omega_ = 2.0;
  p.g_ = 2.0;
  p.f_star_ = 0.0;
  return p;
}

Problem Problem::sigmoid() {
  Problem p;
  p.kind_ = ProblemKind::kSigmoid;
  p.smoothness_ = 1.0;
  p.sigma_ = 0.0;
  p.omega_ = 0.25;
  p.g_ = 0.25;
  p.f_star_ = 0.0;
  return p;
}

Problem Problem::synthetic_quadratic(const SyntheticQuadraticSpec& spec) {
  if (spec.dim == 0) throw std::invalid_argument("synthetic quadratic: dim must be positive");
  if (!(spec.lambda_min >= 0.0) || !(spec.lambda_max >= spec.lambda_min) || !(spec.lambda_max > 0.0)) {
    throw std::invalid_argument("synthetic quadratic: need 0 <= lambda_min <= lambda_max, lambda_max > 0");
  }
  if (!(spec.sigma >= 0.0)) throw std::invalid_argument("synthetic quadratic: sigma must be >= 0");
  if (!(spec.budget > 0.0)) throw std::invalid_argument("synthetic quadratic: budget must be positive");

  const std::size_t d = spec.dim;
  Rng rng = Rng::substream(spec.seed, {static_cast<std::uint64_t>(StreamRole::kProblem), d});

  auto data = std::make_shared<QuadraticData>();
  data->spectrum.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    data->spectrum[i] = d == 1 ? spec.lambda_max
                               : spec.lambda_max - (spec.lambda_max - spec.lambda_min) * static_cast<double>(i) /
                                                       static_cast<double>(d - 1);
  }
  const std::vector<ParamVector> q = random_orthonormal_basis(d, rng);

  data->a.assign(d * d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const double lam = data->spectrum[k];
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) data->a[r * d + c] += lam * q[k][r] * q[k][c];
    }
  }
  // exact symmetry regardless of summation rounding
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r + 1; c < d; ++c) data->a[c * d + r] = data->a[r * d + c];
  }

  data->b = ParamVector(d);
  for (double& e : data->b) e = rng.uniform(-spec.b_scale, spec.b_scale);
  double f_star = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double proj = dot(q[k], data->b);
    if (data->spectrum[k] == 0.0) {
      // keep f bounded below: no linear pull along the null space
      data->b.add_scaled(-proj, q[k]);
    } else {
      f_star -= 0.5 * proj * proj / data->spectrum[k];
    }
  }
  data->budget = spec.budget;

  Problem p;
  p.kind_ = ProblemKind::kSyntheticQuadratic;
  p.dim_ = d;
  p.smoothness_ = spec.lambda_max;
  p.sigma_ = spec.sigma;
  p.omega_ = spec.lambda_max * spec.budget + norm(data->b);
  p.g_ = std::sqrt(p.sigma_ * p.sigma_ + p.omega_ * p.omega_);
  p.f_star_ = f_star;
  p.quad_ = std::move(data);
  return p;
}

std::string Problem::describe() const {
  switch (kind_) {
    case ProblemKind::kLinearQuarter: return "linear_quarter";
    case ProblemKind::kQuadratic: return "quadratic";
    case ProblemKind::kSigmoid: return "sigmoid";
    case ProblemKind::kSyntheticQuadratic: {
      std::ostringstream os;
      os << "synthetic_quadratic:d=" << dim_;
      return os.str();
    }
  }
  return "unknown";
}

void Problem::check_input(const ParamVector& x) const {
  if (x.dim() != dim_) {
    throw std::invalid_argument("problem " + describe() + ": expected dimension " + std::to_string(dim_) + ", got " +
                                std::to_string(x.dim()));
  }
  if (!x.all_finite()) throw std::domain_error("problem " + describe() + ": non-finite input");
}

double Problem::loss(const ParamVector& x) const {
  check_input(x);
  switch (kind_) {
    case ProblemKind::kLinearQuarter: return 0.25 * x[0];
    case ProblemKind::kQuadratic: return x[0] * x[0];
    case ProblemKind::kSigmoid: return sigmoid_value(x[0]);
    case ProblemKind::kSyntheticQuadratic: {
      const std::size_t d = dim_;
      double quad = 0.0;
      for (std::size_t r = 0; r < d; ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < d; ++c) row += quad_->a[r * d + c] * x[c];
        quad += x[r] * row;
      }
      return 0.5 * quad - dot(quad_->b, x);
    }
  }
  return 0.0;
}

ParamVector Problem::grad(const ParamVector& x) const {
  check_input(x);
  switch (kind_) {
    case ProblemKind::kLinearQuarter: return ParamVector{0.25};
    case ProblemKind::kQuadratic: return ParamVector{2.0 * x[0]};
    case ProblemKind::kSigmoid: {
      const double s = sigmoid_value(x[0]);
      return ParamVector{s * (1.0 - s)};
    }
    case ProblemKind::kSyntheticQuadratic: {
      const std::size_t d = dim_;
      ParamVector g(d);
      for (std::size_t r = 0; r < d; ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < d; ++c) row += quad_->a[r * d + c] * x[c];
        g[r] = row - quad_->b[r];
      }
      return g;
    }
  }
  return x;
}

ParamVector Problem::stochastic_grad(const ParamVector& x, Rng& rng) const {
  ParamVector g = grad(x);
  if (sigma_ > 0.0) {
    const double radius = sigma_ / std::sqrt(static_cast<double>(dim_));
    for (double& e : g) e += rng.uniform(-radius, radius);
  }
  return g;
}

bool Problem::in_domain(const ParamVector& x) const {
  switch (kind_) {
    case ProblemKind::kLinearQuarter:
    case ProblemKind::kQuadratic: return std::abs(x[0]) <= 1.0;
    case ProblemKind::kSigmoid: return true;
    case ProblemKind::kSyntheticQuadratic: return norm(x) <= quad_->budget;
  }
  return true;
}

const std::vector<double>& Problem::matrix() const {
  if (!quad_) throw std::logic_error("matrix(): not a synthetic quadratic");
  return quad_->a;
}

const ParamVector& Problem::linear_term() const {
  if (!quad_) throw std::logic_error("linear_term(): not a synthetic quadratic");
  return quad_->b;
}

const std::vector<double>& Problem::spectrum() const {
  if (!quad_) throw std::logic_error("spectrum(): not a synthetic quadratic");
  return quad_->spectrum;
}

}  // namespace efsgd
