#pragma once

#include <cstdint>
#include <vector>

#include "vradmm/losses.hpp"
#include "vradmm/rng.hpp"
#include "vradmm/vec.hpp"

namespace vradmm {

// Counts individual per-sample gradient evaluations. A full pass adds n,
// a size-b minibatch evaluated at one point adds b, at two points 2b.
// Stored-table lookups cost nothing.
class IfoCounter {
 public:
  std::uint64_t count() const { return count_; }
  void add(std::uint64_t evals) { count_ += evals; }
  void reset() { count_ = 0; }

 private:
  std::uint64_t count_ = 0;
};

// Recursive variance-reduced estimator: exact full gradient every q-th
// iteration, gradient-difference recursion in between.
struct SpiderState {
  Vector v_prev;
  Vector x_prev;
  std::size_t k = 0;
  std::size_t q = 1;
  std::size_t b = 1;
};

Vector spider_step(SpiderState& state, const SmoothLoss& loss, const Vector& x, SeededRng& rng,
                   IfoCounter& ifo);

// Online variant: the refresh averages b1 fresh samples, the recursion
// draws b2 = sqrt(b1) fresh samples for both points.
struct SpiderOnlineState {
  Vector v_prev;
  Vector x_prev;
  std::size_t k = 0;
  std::size_t q = 1;
  std::size_t b1 = 1;
  std::size_t b2 = 1;
  SampleSet scratch;
};

Vector spider_online_step(SpiderOnlineState& state, const SampleStream& stream, const Vector& x,
                          SeededRng& rng, IfoCounter& ifo);

// Snapshot-based estimator; refresh every M inner iterations, carrying the
// last inner iterate over as the next snapshot.
struct SvrgState {
  Vector x_snapshot;
  Vector full_grad_snapshot;
  std::size_t epoch = 0;   // 1-based after the first refresh
  std::size_t inner = 0;   // position within the current epoch
  std::size_t M = 1;
  std::size_t b = 1;
};

Vector svrg_step(SvrgState& state, const SmoothLoss& loss, const Vector& x, SeededRng& rng,
                 IfoCounter& ifo);

// Per-sample gradient table. Stored gradients make table references free
// in IFO terms; reference points are kept alongside for the diagnostics
// that need table distances. Duplicate indices in one minibatch apply
// sequentially, so the last write wins and phi stays the exact table mean.
struct SagaState {
  std::vector<Vector> grad_table;
  std::vector<Vector> point_table;
  Vector phi;
  std::size_t b = 1;
  bool initialized = false;

  void init(const SmoothLoss& loss, const Vector& x0, IfoCounter& ifo);
  double mean_point_dist_sq(const Vector& x) const;  // (1/n) sum_i ||x - u_i||^2
  double table_mean_drift() const;                   // || mean(table) - phi ||
};

Vector saga_step(SagaState& state, const SmoothLoss& loss, const Vector& x, SeededRng& rng,
                 IfoCounter& ifo);

// Closed-form IFO totals after the full iteration budget.
std::uint64_t ifo_total_deterministic(std::size_t K, std::size_t n);
std::uint64_t ifo_total_spider(std::size_t K, std::size_t n, std::size_t q, std::size_t b);
std::uint64_t ifo_total_spider_online(std::size_t K, std::size_t q, std::size_t b1, std::size_t b2);
std::uint64_t ifo_total_svrg(std::size_t S, std::size_t M, std::size_t n, std::size_t b);
std::uint64_t ifo_total_saga(std::size_t T, std::size_t n, std::size_t b);
std::uint64_t ifo_total_sgd(std::size_t K, std::size_t b);

}  // namespace vradmm
