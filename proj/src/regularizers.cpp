#include "vradmm/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vradmm/eig.hpp"

namespace vradmm {

namespace {
// Singular values below this fraction of the largest are treated as zero
// when splitting the nuclear-norm subdifferential at the kink.
constexpr double kRankCutoff = 1e-10;
}  // namespace

Regularizer Regularizer::zero() { return Regularizer(Kind::Zero, 0.0, 0, 0); }

Regularizer Regularizer::l1(double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("Regularizer::l1: lambda must be >= 0");
  return Regularizer(Kind::L1, lambda, 0, 0);
}

Regularizer Regularizer::nuclear(double lambda, std::size_t rows, std::size_t cols) {
  if (lambda < 0.0) throw std::invalid_argument("Regularizer::nuclear: lambda must be >= 0");
  if (rows == 0 || cols == 0) throw std::invalid_argument("Regularizer::nuclear: empty shape");
  return Regularizer(Kind::Nuclear, lambda, rows, cols);
}

std::string Regularizer::name() const {
  switch (kind_) {
    case Kind::Zero: return "zero";
    case Kind::L1: return "l1";
    case Kind::Nuclear: return "nuclear";
  }
  return "?";
}

double Regularizer::value(std::span<const double> y) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::L1: {
      double s = 0.0;
      for (double v : y) s += std::abs(v);
      return lambda_ * s;
    }
    case Kind::Nuclear: {
      if (y.size() != rows_ * cols_)
        throw std::invalid_argument("Regularizer::value: nuclear shape mismatch");
      const SvdThin svd = svd_thin(std::vector<double>(y.begin(), y.end()), rows_, cols_);
      double s = 0.0;
      for (double sv : svd.s) s += sv;
      return lambda_ * s;
    }
  }
  return 0.0;
}

Vector Regularizer::prox(std::span<const double> w, double r) const {
  if (r <= 0.0) throw std::invalid_argument("Regularizer::prox: r must be > 0");
  switch (kind_) {
    case Kind::Zero:
      return Vector(w.begin(), w.end());
    case Kind::L1: {
      const double thr = lambda_ / r;
      Vector out(w.size());
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double a = std::abs(w[i]) - thr;
        out[i] = a > 0.0 ? (w[i] > 0.0 ? a : -a) : 0.0;
      }
      return out;
    }
    case Kind::Nuclear: {
      if (w.size() != rows_ * cols_)
        throw std::invalid_argument("Regularizer::prox: nuclear shape mismatch");
      const double thr = lambda_ / r;
      const SvdThin svd = svd_thin(std::vector<double>(w.begin(), w.end()), rows_, cols_);
      Vector out(rows_ * cols_, 0.0);
      for (std::size_t k = 0; k < svd.s.size(); ++k) {
        const double sv = svd.s[k] - thr;
        if (sv <= 0.0) continue;
        for (std::size_t i = 0; i < rows_; ++i)
          for (std::size_t j = 0; j < cols_; ++j) out[i * cols_ + j] += sv * svd.u[k][i] * svd.v[k][j];
      }
      return out;
    }
  }
  return {};
}

double Regularizer::min_subgrad_dist_sq(std::span<const double> y, std::span<const double> t) const {
  if (y.size() != t.size()) throw std::invalid_argument("min_subgrad_dist_sq: size mismatch");
  switch (kind_) {
    case Kind::Zero:
      return vec::norm_sq(t);
    case Kind::L1: {
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0) {
          const double g = lambda_ * (y[i] > 0.0 ? 1.0 : -1.0);
          const double d = g - t[i];
          s += d * d;
        } else {
          const double d = std::max(std::abs(t[i]) - lambda_, 0.0);
          s += d * d;
        }
      }
      return s;
    }
    case Kind::Nuclear: {
      if (y.size() != rows_ * cols_)
        throw std::invalid_argument("min_subgrad_dist_sq: nuclear shape mismatch");
      // dg(Y) = { lambda (U V^T + W) : U^T W = 0, W V = 0, ||W||_2 <= 1 }
      // with U, V from the thin SVD restricted to nonzero singular values.
      // Distance from T decomposes into the part of D = T - lambda U V^T
      // outside the admissible subspace plus the spectral excess over
      // lambda inside it.
      const SvdThin svd = svd_thin(std::vector<double>(y.begin(), y.end()), rows_, cols_);
      const double cutoff = svd.s.empty() ? 0.0 : kRankCutoff * svd.s.front();
      std::size_t rank = 0;
      while (rank < svd.s.size() && svd.s[rank] > cutoff) ++rank;

      std::vector<double> d(rows_ * cols_);
      for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) {
          double uv = 0.0;
          for (std::size_t k = 0; k < rank; ++k) uv += svd.u[k][i] * svd.v[k][j];
          d[i * cols_ + j] = t[i * cols_ + j] - lambda_ * uv;
        }

      // Dc = (I - U U^T) D (I - V V^T)
      std::vector<double> dc(d);
      if (rank > 0) {
        // subtract U (U^T D): rows projection
        std::vector<double> utd(rank * cols_, 0.0);
        for (std::size_t k = 0; k < rank; ++k)
          for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) utd[k * cols_ + j] += svd.u[k][i] * d[i * cols_ + j];
        for (std::size_t k = 0; k < rank; ++k)
          for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) dc[i * cols_ + j] -= svd.u[k][i] * utd[k * cols_ + j];
        // subtract (Dc V) V^T: column projection of the row-projected part
        std::vector<double> dcv(rows_ * rank, 0.0);
        for (std::size_t k = 0; k < rank; ++k)
          for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) dcv[i * rank + k] += dc[i * cols_ + j] * svd.v[k][j];
        for (std::size_t k = 0; k < rank; ++k)
          for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) dc[i * cols_ + j] -= dcv[i * rank + k] * svd.v[k][j];
      }

      const double total_sq = vec::norm_sq(d);
      const double inside_sq = vec::norm_sq(dc);
      const SvdThin dsvd = svd_thin(dc, rows_, cols_);
      double excess = 0.0;
      for (double sv : dsvd.s) {
        const double e = std::max(sv - lambda_, 0.0);
        excess += e * e;
      }
      return std::max(total_sq - inside_sq, 0.0) + excess;
    }
  }
  return 0.0;
}

}  // namespace vradmm
