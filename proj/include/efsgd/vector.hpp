#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace efsgd {

/// Dense point in R^d. Every vector quantity of the algorithm (iterates,
/// gradients, corrected gradients, errors, compressed messages) uses this type.
class ParamVector {
 public:
  ParamVector() = default;
  /// Zero vector of dimension `dim`; rejects dim == 0.
  explicit ParamVector(std::size_t dim);
  ParamVector(std::initializer_list<double> values);
  explicit ParamVector(std::vector<double> values);

  static ParamVector filled(std::size_t dim, double value);

  std::size_t dim() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double& operator[](std::size_t i) { return entries_[i]; }
  double operator[](std::size_t i) const { return entries_[i]; }

  std::span<double> span() { return entries_; }
  std::span<const double> span() const { return entries_; }
  const std::vector<double>& values() const { return entries_; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool all_finite() const;

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double scale);
  ParamVector& operator/=(double scale);

  /// this += scale * other
  ParamVector& add_scaled(double scale, const ParamVector& other);

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> entries_;
};

ParamVector operator+(ParamVector lhs, const ParamVector& rhs);
ParamVector operator-(ParamVector lhs, const ParamVector& rhs);
ParamVector operator*(double scale, ParamVector v);
ParamVector operator/(ParamVector v, double scale);

double dot(const ParamVector& a, const ParamVector& b);
double squared_norm(const ParamVector& v);
double norm(const ParamVector& v);
double max_abs(const ParamVector& v);

/// Componentwise mean. Sums in ascending list order, then divides by the
/// count, so results are bit-reproducible regardless of how the list was
/// produced.
ParamVector mean_vector(std::span<const ParamVector> vs);

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* what);

}  // namespace efsgd
