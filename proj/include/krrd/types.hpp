#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <numeric>
#include <vector>

#include "krrd/errors.hpp"

namespace krrd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Per-coordinate derivative orders beta; |beta| is the total order.
class MultiIndex {
 public:
  MultiIndex() : orders_{0} {}
  MultiIndex(std::initializer_list<int> orders) : orders_(orders) { validate(); }
  explicit MultiIndex(std::vector<int> orders) : orders_(std::move(orders)) { validate(); }

  static MultiIndex zero(int dim) { return MultiIndex(std::vector<int>(dim, 0)); }
  /// One-dimensional order-k index.
  static MultiIndex uni(int k) { return MultiIndex({k}); }

  int dim() const { return static_cast<int>(orders_.size()); }
  int order() const { return std::accumulate(orders_.begin(), orders_.end(), 0); }
  int operator[](int i) const { return orders_[static_cast<std::size_t>(i)]; }
  bool is_zero() const { return order() == 0; }
  const std::vector<int>& orders() const { return orders_; }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  void validate() const {
    if (orders_.empty()) throw InvalidArgument("MultiIndex needs at least one coordinate");
    for (int o : orders_)
      if (o < 0) throw InvalidArgument("derivative orders must be non-negative");
  }

  std::vector<int> orders_;
};

inline Vector point1(double x) {
  Vector v(1);
  v << x;
  return v;
}

}  // namespace krrd
