#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "vradmm/vec.hpp"

namespace vradmm {

// Abstract linear map R^cols -> R^rows. Implementations never materialize
// products they can apply structurally (stacks, scaled identities,
// Kronecker lifts).
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  // out += coef * (op . v)
  void apply_add(std::span<const double> v, double coef, Vector& out) const;
  // out += coef * (op^T . u)
  void apply_transpose_add(std::span<const double> u, double coef, Vector& out) const;

  Vector apply(std::span<const double> v) const;
  Vector apply_transpose(std::span<const double> u) const;

  // Dense row-major materialization (rows x cols); used by the spectral
  // routines and small-scale oracles only.
  std::vector<double> to_dense() const;

 protected:
  LinearOperator(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}
  virtual void do_apply_add(std::span<const double> v, double coef, Vector& out) const = 0;
  virtual void do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const = 0;

  std::size_t rows_;
  std::size_t cols_;
};

using LinOpPtr = std::shared_ptr<const LinearOperator>;

class DenseOperator final : public LinearOperator {
 public:
  DenseOperator(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  const std::vector<double>& data() const { return a_; }

 protected:
  void do_apply_add(std::span<const double> v, double coef, Vector& out) const override;
  void do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const override;

 private:
  std::vector<double> a_;
};

// Compressed sparse rows.
class SparseOperator final : public LinearOperator {
 public:
  SparseOperator(std::size_t rows, std::size_t cols, std::vector<std::size_t> indptr,
                 std::vector<std::uint32_t> indices, std::vector<double> values);

  static SparseOperator from_triplets(std::size_t rows, std::size_t cols,
                                      const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& t);

 protected:
  void do_apply_add(std::span<const double> v, double coef, Vector& out) const override;
  void do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const override;

 private:
  std::vector<std::size_t> indptr_;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

class ScaledIdentity final : public LinearOperator {
 public:
  ScaledIdentity(std::size_t dim, double scale) : LinearOperator(dim, dim), scale_(scale) {}
  double scale() const { return scale_; }

 protected:
  void do_apply_add(std::span<const double> v, double coef, Vector& out) const override;
  void do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const override;

 private:
  double scale_;
};

// Vertical stack [P0; P1; ...]; all parts share the column count.
class StackedOperator final : public LinearOperator {
 public:
  explicit StackedOperator(std::vector<LinOpPtr> parts);
  const std::vector<LinOpPtr>& parts() const { return parts_; }

 protected:
  void do_apply_add(std::span<const double> v, double coef, Vector& out) const override;
  void do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const override;

 private:
  std::vector<LinOpPtr> parts_;
};

// inner (x) I_block, acting on matrix-shaped variables stored row-major:
// a variable X with inner_cols row-blocks of length `block` maps to
// inner_rows row-blocks, out_i = sum_j inner(i,j) X_j. This is how the
// small constraint matrices of matrix-variable problems lift to flat
// vectors without duplicating any solver code.
class KroneckerLift final : public LinearOperator {
 public:
  KroneckerLift(std::size_t inner_rows, std::size_t inner_cols, std::vector<double> inner_row_major,
                std::size_t block);
  std::size_t inner_rows() const { return inner_rows_; }
  std::size_t inner_cols() const { return inner_cols_; }
  std::size_t block() const { return block_; }
  const std::vector<double>& inner() const { return inner_; }

 protected:
  void do_apply_add(std::span<const double> v, double coef, Vector& out) const override;
  void do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const override;

 private:
  std::size_t inner_rows_, inner_cols_;
  std::vector<double> inner_;
  std::size_t block_;
};

// Smallest and largest eigenvalues of op^T op. Exact shortcut paths for
// scaled identities and Kronecker lifts; otherwise a dense symmetric
// eigensolve on the materialized Gram matrix, capped at `max_cols`
// columns (larger problems must supply their spectra in the config).
struct SpectralExtremes {
  double sigma_min_sq;
  double sigma_max_sq;
};

SpectralExtremes spectral_extremes(const LinearOperator& op, double tol = 1e-12,
                                   std::size_t max_cols = 2048);

}  // namespace vradmm
