#pragma once

#include <cstddef>
#include <vector>

#include "vradmm/vec.hpp"

namespace vradmm {

// Eigenvalues of a symmetric n-by-n matrix (row-major), ascending.
// Cyclic Jacobi; tol is relative to the Frobenius norm.
std::vector<double> sym_eigenvalues(std::vector<double> a, std::size_t n, double tol = 1e-13);

// Thin SVD, a = sum_i s[i] * u[i] v[i]^T with s descending and
// r = min(rows, cols) triples. Columns with zero singular value get a
// zero u column. One-sided Jacobi on the shorter side.
struct SvdThin {
  std::vector<Vector> u;  // r columns, each of length rows
  std::vector<Vector> v;  // r columns, each of length cols
  std::vector<double> s;  // descending, >= 0
};

SvdThin svd_thin(const std::vector<double>& a_rowmajor, std::size_t rows, std::size_t cols);

}  // namespace vradmm
