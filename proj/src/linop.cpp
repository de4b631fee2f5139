#include "vradmm/linop.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>

#include "vradmm/eig.hpp"
#include "vradmm/errors.hpp"

namespace vradmm {

void LinearOperator::apply_add(std::span<const double> v, double coef, Vector& out) const {
  if (v.size() != cols_) throw std::invalid_argument("LinearOperator::apply: dimension mismatch");
  if (out.size() != rows_) throw std::invalid_argument("LinearOperator::apply: bad output size");
  do_apply_add(v, coef, out);
}

void LinearOperator::apply_transpose_add(std::span<const double> u, double coef, Vector& out) const {
  if (u.size() != rows_) throw std::invalid_argument("LinearOperator::apply_transpose: dimension mismatch");
  if (out.size() != cols_) throw std::invalid_argument("LinearOperator::apply_transpose: bad output size");
  do_apply_transpose_add(u, coef, out);
}

Vector LinearOperator::apply(std::span<const double> v) const {
  Vector out(rows_, 0.0);
  apply_add(v, 1.0, out);
  return out;
}

Vector LinearOperator::apply_transpose(std::span<const double> u) const {
  Vector out(cols_, 0.0);
  apply_transpose_add(u, 1.0, out);
  return out;
}

std::vector<double> LinearOperator::to_dense() const {
  std::vector<double> dense(rows_ * cols_, 0.0);
  Vector e(cols_, 0.0);
  Vector col(rows_);
  for (std::size_t j = 0; j < cols_; ++j) {
    e[j] = 1.0;
    std::fill(col.begin(), col.end(), 0.0);
    apply_add(e, 1.0, col);
    for (std::size_t i = 0; i < rows_; ++i) dense[i * cols_ + j] = col[i];
    e[j] = 0.0;
  }
  return dense;
}

DenseOperator::DenseOperator(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : LinearOperator(rows, cols), a_(std::move(row_major)) {
  if (a_.size() != rows * cols) throw std::invalid_argument("DenseOperator: bad buffer size");
}

void DenseOperator::do_apply_add(std::span<const double> v, double coef, Vector& out) const {
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    const double* row = a_.data() + i * cols_;
    for (std::size_t j = 0; j < cols_; ++j) s += row[j] * v[j];
    out[i] += coef * s;
  }
}

void DenseOperator::do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const {
  for (std::size_t i = 0; i < rows_; ++i) {
    const double ui = coef * u[i];
    if (ui == 0.0) continue;
    const double* row = a_.data() + i * cols_;
    for (std::size_t j = 0; j < cols_; ++j) out[j] += ui * row[j];
  }
}

SparseOperator::SparseOperator(std::size_t rows, std::size_t cols, std::vector<std::size_t> indptr,
                               std::vector<std::uint32_t> indices, std::vector<double> values)
    : LinearOperator(rows, cols),
      indptr_(std::move(indptr)),
      indices_(std::move(indices)),
      values_(std::move(values)) {
  if (indptr_.size() != rows + 1 || indices_.size() != values_.size() || indptr_.back() != values_.size())
    throw std::invalid_argument("SparseOperator: inconsistent CSR arrays");
  for (std::uint32_t j : indices_)
    if (j >= cols) throw std::invalid_argument("SparseOperator: column index out of range");
}

SparseOperator SparseOperator::from_triplets(
    std::size_t rows, std::size_t cols,
    const std::vector<std::tuple<std::uint32_t, std::uint32_t, double>>& t) {
  std::vector<std::size_t> indptr(rows + 1, 0);
  for (const auto& [i, j, v] : t) {
    (void)j;
    (void)v;
    if (i >= rows) throw std::invalid_argument("SparseOperator: row index out of range");
    ++indptr[i + 1];
  }
  for (std::size_t i = 0; i < rows; ++i) indptr[i + 1] += indptr[i];
  std::vector<std::uint32_t> indices(t.size());
  std::vector<double> values(t.size());
  std::vector<std::size_t> cursor(indptr.begin(), indptr.end() - 1);
  for (const auto& [i, j, v] : t) {
    indices[cursor[i]] = j;
    values[cursor[i]] = v;
    ++cursor[i];
  }
  return SparseOperator(rows, cols, std::move(indptr), std::move(indices), std::move(values));
}

void SparseOperator::do_apply_add(std::span<const double> v, double coef, Vector& out) const {
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t k = indptr_[i]; k < indptr_[i + 1]; ++k) s += values_[k] * v[indices_[k]];
    out[i] += coef * s;
  }
}

void SparseOperator::do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const {
  for (std::size_t i = 0; i < rows_; ++i) {
    const double ui = coef * u[i];
    if (ui == 0.0) continue;
    for (std::size_t k = indptr_[i]; k < indptr_[i + 1]; ++k) out[indices_[k]] += ui * values_[k];
  }
}

void ScaledIdentity::do_apply_add(std::span<const double> v, double coef, Vector& out) const {
  const double a = coef * scale_;
  for (std::size_t i = 0; i < rows_; ++i) out[i] += a * v[i];
}

void ScaledIdentity::do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const {
  const double a = coef * scale_;
  for (std::size_t i = 0; i < rows_; ++i) out[i] += a * u[i];
}

namespace {
std::size_t stacked_rows(const std::vector<LinOpPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("StackedOperator: no parts");
  std::size_t r = 0;
  for (const auto& p : parts) {
    if (p->cols() != parts.front()->cols())
      throw std::invalid_argument("StackedOperator: column mismatch between parts");
    r += p->rows();
  }
  return r;
}
}  // namespace

StackedOperator::StackedOperator(std::vector<LinOpPtr> parts)
    : LinearOperator(stacked_rows(parts), parts.front()->cols()), parts_(std::move(parts)) {}

void StackedOperator::do_apply_add(std::span<const double> v, double coef, Vector& out) const {
  std::size_t offset = 0;
  Vector chunk;
  for (const auto& p : parts_) {
    chunk.assign(p->rows(), 0.0);
    p->apply_add(v, coef, chunk);
    for (std::size_t i = 0; i < chunk.size(); ++i) out[offset + i] += chunk[i];
    offset += p->rows();
  }
}

void StackedOperator::do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const {
  std::size_t offset = 0;
  for (const auto& p : parts_) {
    p->apply_transpose_add(u.subspan(offset, p->rows()), coef, out);
    offset += p->rows();
  }
}

KroneckerLift::KroneckerLift(std::size_t inner_rows, std::size_t inner_cols,
                             std::vector<double> inner_row_major, std::size_t block)
    : LinearOperator(inner_rows * block, inner_cols * block),
      inner_rows_(inner_rows),
      inner_cols_(inner_cols),
      inner_(std::move(inner_row_major)),
      block_(block) {
  if (inner_.size() != inner_rows * inner_cols)
    throw std::invalid_argument("KroneckerLift: bad inner buffer size");
  if (block == 0) throw std::invalid_argument("KroneckerLift: zero block size");
}

void KroneckerLift::do_apply_add(std::span<const double> v, double coef, Vector& out) const {
  for (std::size_t i = 0; i < inner_rows_; ++i) {
    for (std::size_t j = 0; j < inner_cols_; ++j) {
      const double a = coef * inner_[i * inner_cols_ + j];
      if (a == 0.0) continue;
      const double* src = v.data() + j * block_;
      double* dst = out.data() + i * block_;
      for (std::size_t k = 0; k < block_; ++k) dst[k] += a * src[k];
    }
  }
}

void KroneckerLift::do_apply_transpose_add(std::span<const double> u, double coef, Vector& out) const {
  for (std::size_t i = 0; i < inner_rows_; ++i) {
    for (std::size_t j = 0; j < inner_cols_; ++j) {
      const double a = coef * inner_[i * inner_cols_ + j];
      if (a == 0.0) continue;
      const double* src = u.data() + i * block_;
      double* dst = out.data() + j * block_;
      for (std::size_t k = 0; k < block_; ++k) dst[k] += a * src[k];
    }
  }
}

SpectralExtremes spectral_extremes(const LinearOperator& op, double tol, std::size_t max_cols) {
  if (const auto* si = dynamic_cast<const ScaledIdentity*>(&op)) {
    const double s2 = si->scale() * si->scale();
    return {s2, s2};
  }
  if (const auto* kl = dynamic_cast<const KroneckerLift*>(&op)) {
    // eig((M (x) I)^T (M (x) I)) = eig(M^T M), each with multiplicity block.
    DenseOperator inner(kl->inner_rows(), kl->inner_cols(), kl->inner());
    return spectral_extremes(inner, tol, max_cols);
  }
  const std::size_t n = op.cols();
  if (n > max_cols)
    throw CapabilityError(
        "spectral_extremes: operator has " + std::to_string(n) + " columns, above the dense "
        "eigensolver cap of " + std::to_string(max_cols) +
        "; supply sigmaA_min/sigmaA_max in the configuration instead");
  const std::vector<double> dense = op.to_dense();
  const std::size_t m = op.rows();
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = dense.data() + i * n;
    for (std::size_t a = 0; a < n; ++a) {
      if (row[a] == 0.0) continue;
      for (std::size_t b = a; b < n; ++b) gram[a * n + b] += row[a] * row[b];
    }
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < a; ++b) gram[a * n + b] = gram[b * n + a];
  const std::vector<double> eig = sym_eigenvalues(std::move(gram), n, tol);
  return {std::max(eig.front(), 0.0), std::max(eig.back(), 0.0)};
}

}  // namespace vradmm
