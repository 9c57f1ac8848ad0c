#include "efsgd/vector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace efsgd {

ParamVector::ParamVector(std::size_t dim) : entries_(dim, 0.0) {
  if (dim == 0) throw std::invalid_argument("ParamVector: dimension must be positive");
}

ParamVector::ParamVector(std::initializer_list<double> values) : entries_(values) {
  if (entries_.empty()) throw std::invalid_argument("ParamVector: dimension must be positive");
}

ParamVector::ParamVector(std::vector<double> values) : entries_(std::move(values)) {
  if (entries_.empty()) throw std::invalid_argument("ParamVector: dimension must be positive");
}

ParamVector ParamVector::filled(std::size_t dim, double value) {
  ParamVector v(dim);
  std::fill(v.entries_.begin(), v.entries_.end(), value);
  return v;
}

bool ParamVector::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(), [](double x) { return std::isfinite(x); });
}

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  require_same_dim(*this, other, "operator+=");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  require_same_dim(*this, other, "operator-=");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double scale) {
  for (double& x : entries_) x *= scale;
  return *this;
}

ParamVector& ParamVector::operator/=(double scale) {
  for (double& x : entries_) x /= scale;
  return *this;
}

ParamVector& ParamVector::add_scaled(double scale, const ParamVector& other) {
  require_same_dim(*this, other, "add_scaled");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += scale * other.entries_[i];
  return *this;
}

ParamVector operator+(ParamVector lhs, const ParamVector& rhs) { return lhs += rhs; }
ParamVector operator-(ParamVector lhs, const ParamVector& rhs) { return lhs -= rhs; }
ParamVector operator*(double scale, ParamVector v) { return v *= scale; }
ParamVector operator/(ParamVector v, double scale) { return v /= scale; }

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const ParamVector& v) { return dot(v, v); }

double norm(const ParamVector& v) { return std::sqrt(squared_norm(v)); }

double max_abs(const ParamVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

ParamVector mean_vector(std::span<const ParamVector> vs) {
  if (vs.empty()) throw std::invalid_argument("mean_vector: empty list");
  ParamVector sum = vs.front();
  for (std::size_t i = 1; i < vs.size(); ++i) {
    require_same_dim(sum, vs[i], "mean_vector");
    sum += vs[i];
  }
  sum /= static_cast<double>(vs.size());
  return sum;
}

}  // namespace efsgd
