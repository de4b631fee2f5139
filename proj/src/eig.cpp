#include "vradmm/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vradmm {

namespace {

double off_diagonal_norm(const std::vector<double>& a, std::size_t n) {
  double s = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) s += a[p * n + q] * a[p * n + q];
  return std::sqrt(2.0 * s);
}

}  // namespace

std::vector<double> sym_eigenvalues(std::vector<double> a, std::size_t n, double tol) {
  if (a.size() != n * n) throw std::invalid_argument("sym_eigenvalues: bad buffer size");
  if (n == 0) return {};
  if (n == 1) return {a[0]};

  double frob = 0.0;
  for (double x : a) frob += x * x;
  frob = std::sqrt(frob);
  const double stop = tol * std::max(frob, 1e-300);

  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a, n) <= stop) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

SvdThin svd_thin(const std::vector<double>& a_rowmajor, std::size_t rows, std::size_t cols) {
  if (a_rowmajor.size() != rows * cols) throw std::invalid_argument("svd_thin: bad buffer size");
  if (rows < cols) {
    // Work on the transpose so the rotated side is the short one.
    std::vector<double> at(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) at[j * rows + i] = a_rowmajor[i * cols + j];
    SvdThin t = svd_thin(at, cols, rows);
    std::swap(t.u, t.v);
    return t;
  }

  const std::size_t m = rows, n = cols;
  std::vector<Vector> col(n, Vector(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j][i] = a_rowmajor[i * n + j];
  std::vector<Vector> v(n, Vector(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  constexpr int kMaxSweeps = 64;
  constexpr double kTol = 1e-14;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = vec::norm_sq(col[p]);
        const double beta = vec::norm_sq(col[q]);
        const double gamma = vec::dot(col[p], col[q]);
        if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = col[p][i], xq = col[q][i];
          col[p][i] = c * xp - s * xq;
          col[q][i] = s * xp + c * xq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double xp = v[p][i], xq = v[q][i];
          v[p][i] = c * xp - s * xq;
          v[q][i] = s * xp + c * xq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = vec::norm(col[j]);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  SvdThin out;
  out.u.resize(n);
  out.v.resize(n);
  out.s.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.s[j] = norms[src];
    out.v[j] = v[src];
    if (norms[src] > 0.0) {
      out.u[j] = col[src];
      vec::scale(out.u[j], 1.0 / norms[src]);
    } else {
      out.u[j] = Vector(m, 0.0);
    }
  }
  return out;
}

}  // namespace vradmm
