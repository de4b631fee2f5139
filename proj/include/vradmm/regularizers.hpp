#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "vradmm/vec.hpp"

namespace vradmm {

// Convex, possibly nonsmooth penalty g with a scaled proximal map
//   prox(w, r) = argmin_y (r/2)||y - w||^2 + g(y)
// and an evaluable minimal-subgradient distance
//   min_subgrad_dist_sq(y, t) = dist(t, dg(y))^2.
class Regularizer {
 public:
  enum class Kind { Zero, L1, Nuclear };

  static Regularizer zero();
  static Regularizer l1(double lambda);
  static Regularizer nuclear(double lambda, std::size_t rows, std::size_t cols);

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::string name() const;

  double value(std::span<const double> y) const;
  Vector prox(std::span<const double> w, double r) const;
  double min_subgrad_dist_sq(std::span<const double> y, std::span<const double> t) const;

 private:
  Regularizer(Kind kind, double lambda, std::size_t rows, std::size_t cols)
      : kind_(kind), lambda_(lambda), rows_(rows), cols_(cols) {}

  Kind kind_;
  double lambda_ = 0.0;
  std::size_t rows_ = 0, cols_ = 0;  // Nuclear only
};

}  // namespace vradmm
