#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vradmm/estimators.hpp"
#include "vradmm/problem.hpp"

namespace vradmm {

struct TraceRecord {
  std::size_t iter = 0;
  std::size_t epoch = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double aug_lagrangian = std::numeric_limits<double>::quiet_NaN();
  double residual = 0.0;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double stationarity = std::numeric_limits<double>::quiet_NaN();  // NaN = not recorded
  double lyapunov = std::numeric_limits<double>::quiet_NaN();     // NaN = not recorded
  std::uint64_t ifo = 0;
  double seconds = 0.0;
  // step sizes feeding the theta surrogate; not part of the CSV schema
  double dx_sq = 0.0;
  double dy_sq = 0.0;
};

struct Trace {
  SolverKind kind = SolverKind::Deterministic;
  HyperParams hp;  // resolved counts
  DerivedSpectra spectra;
  std::vector<std::string> notes;
  double lyapunov_initial = std::numeric_limits<double>::quiet_NaN();
  std::vector<TraceRecord> records;
  Vector x;
  std::vector<Vector> y;
  Vector z;
  std::uint64_t ifo_total = 0;
};

struct RunOptions {
  bool record_stationarity = false;
  bool record_lyapunov = false;
  bool use_kappa_A = false;         // conditioning-aware Lyapunov coefficients
  bool check_x_optimality = false;  // assert the linearized first-order condition per step
  bool uniform_random_output = false;
  std::optional<double> theta_stop;  // finish early once theta_k falls below this
  std::function<void(const TraceRecord&)> callback;
};

// Executes exactly K (or S*M) iterations of
//   estimator -> y blocks in ascending j -> x update -> z update
// and emits one TraceRecord per iteration.
Trace run(const CompositeProblem& problem, const HyperParams& hp, SolverKind kind,
          const RunOptions& options = {});

// Single-step operations; the run loop uses the same formulas.
Vector update_y_block(const CompositeProblem& problem, const DerivedSpectra& sp, const Vector& x,
                      const std::vector<Vector>& ys, const Vector& z, std::size_t j);
Vector update_x(const CompositeProblem& problem, const DerivedSpectra& sp, const Vector& x,
                const std::vector<Vector>& ys, const Vector& z, const Vector& v);
Vector update_z(const CompositeProblem& problem, const DerivedSpectra& sp, const Vector& x,
                const std::vector<Vector>& ys, const Vector& z);

// || v + (G/eta)(x_new - x_old) - A^T z + rho A^T (A x_new + sum B y - c) ||,
// the first-order condition of the linearized x subproblem.
double x_update_optimality_residual(const CompositeProblem& problem, const DerivedSpectra& sp,
                                    const Vector& x_old, const Vector& x_new,
                                    const std::vector<Vector>& ys, const Vector& z, const Vector& v);

// Row-by-row equality of the numeric trace columns, ignoring wall time.
bool traces_identical(const Trace& a, const Trace& b);

}  // namespace vradmm
