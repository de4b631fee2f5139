#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vradmm/problem.hpp"

namespace vradmm {

// L_rho = f + sum_j g_j - <z, res> + (rho/2) ||res||^2 with
// res = A x + sum_j B_j y_j - c.
double augmented_lagrangian(const CompositeProblem& problem, const Vector& x,
                            const std::vector<Vector>& ys, const Vector& z, double rho);

// Exact minimal-subgradient distances of the Lagrangian at (x, y, z),
// split block by block. total_sq is the sum of all parts and vanishes
// exactly at a KKT point.
struct StationarityReport {
  double grad_block_sq = 0.0;          // ||A^T z - grad f(x)||^2
  std::vector<double> y_block_sq;      // dist(B_j^T z, dg_j(y_j))^2
  double feasibility_sq = 0.0;         // ||A x + sum B_j y_j - c||^2
  double total_sq = 0.0;
};

StationarityReport stationarity_sq(const CompositeProblem& problem, const Vector& x,
                                   const std::vector<Vector>& ys, const Vector& z);

// Start of the refresh period containing iteration k.
inline std::size_t period_start(std::size_t k, std::size_t q) { return (k / q) * q; }

// theta_k for the recursive estimator:
//   ||x_{k+1}-x_k||^2 + ||x_k-x_{k-1}||^2
//   + (1/q) sum_{i=pstart(k)}^{k} ||x_{i+1}-x_i||^2 + sum_j ||y_j^k-y_j^{k+1}||^2
// dxsq[i] = ||x_{i+1}-x_i||^2 must cover the current period.
double theta_spider(std::span<const double> dxsq, std::size_t k, std::size_t q, double dysq);

// Snapshot form: the period sum is replaced by (1/b)(||x_t - xs||^2 +
// ||x_{t-1} - xs||^2); the caller supplies both snapshot distances.
double theta_snapshot(std::span<const double> dxsq, std::size_t k, std::size_t b, double snap_dist_sq,
                      double snap_dist_sq_prev, double dysq);

// Central-difference gradient validation; returns the max relative error
// over coordinates.
double finite_diff_check(const SmoothLoss& loss, const Vector& x, double h);

// Lyapunov bookkeeping. The default coefficients drop the constraint
// conditioning number; the variants behind use_kappa_A multiply the G
// terms by kappa_A.
struct LyapunovCoeffs {
  double dx;   // multiplies ||x_k - x_{k-1}||^2
  double sum;  // multiplies the period / snapshot / table history term
};

LyapunovCoeffs spider_lyapunov_coeffs(const DerivedSpectra& sp, std::size_t b, bool use_kappa_A = false);

// Gamma^s_t coefficients: dx term plus 9L^2/(sA rho b) on ||x_{t-1}-xs||^2.
LyapunovCoeffs svrg_lyapunov_coeffs(const DerivedSpectra& sp, std::size_t b);

// c_{t} for t = 0..M+1 (index t; c[0] unused, c[M+1] = 0), with
// c_t = 18L^2/(sA rho b) + L/b + (1+beta) c_{t+1} and beta = 1/M.
std::vector<double> svrg_c_schedule(std::size_t M, std::size_t b, const DerivedSpectra& sp);

// c_t for t = 0..T (c[T] = 0), with the (1-p)(1+beta) recursion,
// beta = b/(4n) and p = 1 - (1 - 1/n)^b.
std::vector<double> saga_c_schedule(std::size_t T, std::size_t n, std::size_t b,
                                    const DerivedSpectra& sp);

double saga_hit_probability(std::size_t n, std::size_t b);

// w = 12 delta^2 max{1, 6 / (sigmaA_min rho^2)} for the online rate bound.
// The gradient-norm bound delta is never constructed, so this uses the
// trajectory estimate recorded by the solver and is a report, not a bound.
double online_w_estimate(const DerivedSpectra& sp);

}  // namespace vradmm
