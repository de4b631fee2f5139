#include "vradmm/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace vradmm {

Vector spider_step(SpiderState& state, const SmoothLoss& loss, const Vector& x, SeededRng& rng,
                   IfoCounter& ifo) {
  const std::size_t n = loss.num_samples();
  Vector v;
  if (state.k % state.q == 0) {
    loss.full_grad(x, v);
    ifo.add(n);
  } else {
    const auto idx = sample_minibatch(rng, n, state.b);
    Vector g_new, g_old;
    loss.grad(x, idx, g_new);
    loss.grad(state.x_prev, idx, g_old);
    ifo.add(2 * state.b);
    v = state.v_prev;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += g_new[i] - g_old[i];
  }
  state.x_prev = x;
  state.v_prev = v;
  ++state.k;
  return v;
}

Vector spider_online_step(SpiderOnlineState& state, const SampleStream& stream, const Vector& x,
                          SeededRng& rng, IfoCounter& ifo) {
  if (state.b1 < 1) throw std::invalid_argument("spider_online_step: b1 must be >= 1");
  Vector v;
  if (state.k % state.q == 0) {
    stream.draw(rng, state.b1, state.scratch);
    stream.batch_grad(state.scratch, x, v);
    ifo.add(state.b1);
  } else {
    stream.draw(rng, state.b2, state.scratch);
    Vector g_new, g_old;
    stream.batch_grad(state.scratch, x, g_new);
    stream.batch_grad(state.scratch, state.x_prev, g_old);
    ifo.add(2 * state.b2);
    v = state.v_prev;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += g_new[i] - g_old[i];
  }
  state.x_prev = x;
  state.v_prev = v;
  ++state.k;
  return v;
}

Vector svrg_step(SvrgState& state, const SmoothLoss& loss, const Vector& x, SeededRng& rng,
                 IfoCounter& ifo) {
  const std::size_t n = loss.num_samples();
  if (state.inner == 0) {
    state.x_snapshot = x;
    loss.full_grad(x, state.full_grad_snapshot);
    ifo.add(n);
    ++state.epoch;
  }
  const auto idx = sample_minibatch(rng, n, state.b);
  Vector g_new, g_snap;
  loss.grad(x, idx, g_new);
  loss.grad(state.x_snapshot, idx, g_snap);
  ifo.add(2 * state.b);
  Vector v = state.full_grad_snapshot;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += g_new[i] - g_snap[i];
  state.inner = (state.inner + 1) % state.M;
  return v;
}

void SagaState::init(const SmoothLoss& loss, const Vector& x0, IfoCounter& ifo) {
  const std::size_t n = loss.num_samples();
  grad_table.assign(n, Vector());
  point_table.assign(n, x0);
  phi.assign(loss.dim(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    loss.sample_grad(static_cast<std::uint32_t>(i), x0, grad_table[i]);
    vec::axpy(1.0 / static_cast<double>(n), grad_table[i], phi);
  }
  ifo.add(n);
  initialized = true;
}

double SagaState::mean_point_dist_sq(const Vector& x) const {
  double s = 0.0;
  for (const auto& u : point_table) s += vec::dist_sq(x, u);
  return s / static_cast<double>(point_table.size());
}

double SagaState::table_mean_drift() const {
  Vector mean(phi.size(), 0.0);
  for (const auto& g : grad_table) vec::axpy(1.0 / static_cast<double>(grad_table.size()), g, mean);
  return std::sqrt(vec::dist_sq(mean, phi));
}

Vector saga_step(SagaState& state, const SmoothLoss& loss, const Vector& x, SeededRng& rng,
                 IfoCounter& ifo) {
  if (!state.initialized) throw std::logic_error("saga_step: state not initialized");
  const std::size_t n = loss.num_samples();
  const auto idx = sample_minibatch(rng, n, state.b);

  // v = (1/b) sum_{i in I} (grad f_i(x) - g_i) + phi, with the table frozen.
  Vector v = state.phi;
  std::vector<Vector> fresh(idx.size());
  const double w = 1.0 / static_cast<double>(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    loss.sample_grad(idx[j], x, fresh[j]);
    vec::axpy(w, fresh[j], v);
    vec::axpy(-w, state.grad_table[idx[j]], v);
  }
  ifo.add(idx.size());

  // Sequential table writes in draw order; a duplicate's second pass sees
  // the already-updated entry and contributes zero drift to phi.
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const std::uint32_t i = idx[j];
    vec::axpy(inv_n, fresh[j], state.phi);
    vec::axpy(-inv_n, state.grad_table[i], state.phi);
    state.grad_table[i] = fresh[j];
    state.point_table[i] = x;
  }
  return v;
}

std::uint64_t ifo_total_deterministic(std::size_t K, std::size_t n) {
  return static_cast<std::uint64_t>(K) * n;
}

std::uint64_t ifo_total_spider(std::size_t K, std::size_t n, std::size_t q, std::size_t b) {
  const std::uint64_t refreshes = (K + q - 1) / q;  // iterations with k % q == 0
  return refreshes * n + 2ull * b * (K - refreshes);
}

std::uint64_t ifo_total_spider_online(std::size_t K, std::size_t q, std::size_t b1, std::size_t b2) {
  const std::uint64_t refreshes = (K + q - 1) / q;
  return refreshes * b1 + 2ull * b2 * (K - refreshes);
}

std::uint64_t ifo_total_svrg(std::size_t S, std::size_t M, std::size_t n, std::size_t b) {
  return static_cast<std::uint64_t>(S) * (n + 2ull * b * M);
}

std::uint64_t ifo_total_saga(std::size_t T, std::size_t n, std::size_t b) {
  return static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(T) * b;
}

std::uint64_t ifo_total_sgd(std::size_t K, std::size_t b) {
  return static_cast<std::uint64_t>(K) * b;
}

}  // namespace vradmm
