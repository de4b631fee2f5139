#include "vradmm/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "vradmm/diagnostics.hpp"
#include "vradmm/errors.hpp"
#include "vradmm/rng.hpp"

namespace vradmm {

namespace {

// w_j = (1/r_j)(H_j y_j - rho B_j^T ctilde + B_j^T z) collapses to
// w_j = y_j - (rho / r_j) B_j^T (s - z / rho) with
// s = A x + sum_i B_i y_i - c built from the current Gauss-Seidel state,
// because H_j = r_j I - rho B_j^T B_j is applied by its defining formula.
Vector y_prox_point(const ProblemBlock& block, double r_j, double rho, const Vector& y_j,
                    const Vector& s, const Vector& z) {
  Vector shifted(s);
  vec::axpy(-1.0 / rho, z, shifted);
  Vector w = y_j;
  block.op->apply_transpose_add(shifted, -rho / r_j, w);
  return w;
}

Vector gauss_seidel_state(const CompositeProblem& problem, const Vector& x,
                          const std::vector<Vector>& ys) {
  Vector s(problem.residual_dim(), 0.0);
  problem.constraint->apply_add(x, 1.0, s);
  for (std::size_t j = 0; j < problem.blocks.size(); ++j)
    problem.blocks[j].op->apply_add(ys[j], 1.0, s);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] -= problem.offset[i];
  return s;
}

}  // namespace

Vector update_y_block(const CompositeProblem& problem, const DerivedSpectra& sp, const Vector& x,
                      const std::vector<Vector>& ys, const Vector& z, std::size_t j) {
  const Vector s = gauss_seidel_state(problem, x, ys);
  const Vector w = y_prox_point(problem.blocks[j], sp.r_blocks[j], sp.rho, ys[j], s, z);
  return problem.blocks[j].reg.prox(w, sp.r_blocks[j]);
}

Vector update_x(const CompositeProblem& problem, const DerivedSpectra& sp, const Vector& x,
                const std::vector<Vector>& ys, const Vector& z, const Vector& v) {
  Vector s = gauss_seidel_state(problem, x, ys);
  vec::axpy(-1.0 / sp.rho, z, s);
  Vector out = x;
  Vector step = v;
  problem.constraint->apply_transpose_add(s, sp.rho, step);
  vec::axpy(-sp.eta / sp.r, step, out);
  return out;
}

Vector update_z(const CompositeProblem& problem, const DerivedSpectra& sp, const Vector& x,
                const std::vector<Vector>& ys, const Vector& z) {
  const Vector res = gauss_seidel_state(problem, x, ys);
  Vector out = z;
  vec::axpy(-sp.rho, res, out);
  return out;
}

double x_update_optimality_residual(const CompositeProblem& problem, const DerivedSpectra& sp,
                                    const Vector& x_old, const Vector& x_new,
                                    const std::vector<Vector>& ys, const Vector& z, const Vector& v) {
  // (G/eta) w = (r w - rho eta A^T A w) / eta
  Vector w = vec::sub(x_new, x_old);
  Vector g = v;
  vec::axpy(sp.r / sp.eta, w, g);
  const Vector aw = problem.constraint->apply(w);
  problem.constraint->apply_transpose_add(aw, -sp.rho, g);
  problem.constraint->apply_transpose_add(z, -1.0, g);
  const Vector res = gauss_seidel_state(problem, x_new, ys);
  problem.constraint->apply_transpose_add(res, sp.rho, g);
  return vec::norm(g);
}

bool traces_identical(const Trace& a, const Trace& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const TraceRecord& ra = a.records[i];
    const TraceRecord& rb = b.records[i];
    const auto same = [](double x, double y) {
      return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    if (ra.iter != rb.iter || ra.epoch != rb.epoch || ra.ifo != rb.ifo) return false;
    if (!same(ra.objective, rb.objective) || !same(ra.aug_lagrangian, rb.aug_lagrangian) ||
        !same(ra.residual, rb.residual) || !same(ra.theta, rb.theta) ||
        !same(ra.stationarity, rb.stationarity))
      return false;
  }
  return true;
}

Trace run(const CompositeProblem& problem, const HyperParams& hp_in, SolverKind kind,
          const RunOptions& options) {
  problem.validate();
  const std::size_t n = problem.has_finite_sum() ? problem.loss->num_samples() : 0;
  if (kind != SolverKind::SpiderOnline && !problem.has_finite_sum())
    throw HyperparamError("finite-sum solver on a streaming-only problem");
  if (kind == SolverKind::SpiderOnline && !problem.stream)
    throw HyperparamError("online solver requires a sample stream");

  Trace trace;
  trace.kind = kind;
  trace.hp = resolve_defaults(hp_in, kind, n);
  trace.spectra = derive_hyperparams(problem, trace.hp, kind);
  const HyperParams& hp = trace.hp;
  const DerivedSpectra& sp = trace.spectra;

  const std::size_t total_iters = kind == SolverKind::Svrg ? hp.S * hp.M : hp.K;
  const std::size_t d = problem.x_dim();
  const std::size_t m = problem.num_blocks();
  const std::size_t l = problem.residual_dim();

  if (kind == SolverKind::Sgd)
    trace.notes.push_back(
        "sgd baseline: plain minibatch gradient with eta scaled to 0.1x the recursive-estimator "
        "step; schedule is not taken from the source method");

  SeededRng rng(hp.seed, 0);
  Vector x(d);
  rng.fill_normal(x);
  std::vector<Vector> ys(m);
  for (std::size_t j = 0; j < m; ++j) {
    ys[j].assign(problem.blocks[j].op->cols(), 0.0);
    rng.fill_normal(ys[j]);
  }
  Vector z(l, 0.0);

  IfoCounter ifo;
  SpiderState spider;
  SpiderOnlineState online;
  SvrgState svrg;
  SagaState saga;
  SampleSet eval_batch;
  switch (kind) {
    case SolverKind::Spider:
      spider.q = hp.q;
      spider.b = hp.b;
      break;
    case SolverKind::Deterministic:
      spider.q = 1;  // refresh every step; no draws ever happen
      spider.b = 1;
      break;
    case SolverKind::SpiderOnline: {
      online.q = hp.q;
      online.b1 = hp.b1;
      online.b2 = hp.b2;
      if (hp.b2 * hp.b2 != hp.b1)
        trace.notes.push_back("warning: b1 = " + std::to_string(hp.b1) +
                              " is not a perfect square; b2 normalized to round(sqrt(b1)) = " +
                              std::to_string(hp.b2));
      SeededRng eval_rng(hp.seed, 1);
      problem.stream->draw(eval_rng, 256, eval_batch);
      trace.notes.push_back("stream: " + problem.stream->description());
      trace.notes.push_back("online objective estimated on a fixed 256-sample evaluation batch");
      break;
    }
    case SolverKind::Svrg:
      svrg.M = hp.M;
      svrg.b = hp.b;
      break;
    case SolverKind::Saga:
      saga.b = hp.b;
      saga.init(*problem.loss, x, ifo);
      break;
    case SolverKind::Sgd:
      break;
  }

  const bool finite = problem.has_finite_sum();
  if (options.record_stationarity && !finite)
    trace.notes.push_back("stationarity disabled: streaming loss has no exact full gradient");

  // Lyapunov machinery (off by default: it costs an extra objective pass).
  LyapunovCoeffs lyap{0.0, 0.0};
  std::vector<double> c_schedule;
  const bool lyapunov_ok = options.record_lyapunov && sp.sigmaA_min > 0.0;
  if (options.record_lyapunov && !lyapunov_ok)
    trace.notes.push_back("lyapunov disabled: coefficients need sigma_min(A^T A) > 0");
  if (lyapunov_ok) {
    switch (kind) {
      case SolverKind::Deterministic:
      case SolverKind::Spider:
      case SolverKind::Sgd:
        lyap = spider_lyapunov_coeffs(sp, std::max<std::size_t>(hp.b, 1), options.use_kappa_A);
        break;
      case SolverKind::SpiderOnline:
        lyap = spider_lyapunov_coeffs(sp, std::max<std::size_t>(hp.b2, 1), options.use_kappa_A);
        break;
      case SolverKind::Svrg:
        lyap = svrg_lyapunov_coeffs(sp, hp.b);
        c_schedule = svrg_c_schedule(hp.M, hp.b, sp);
        break;
      case SolverKind::Saga:
        lyap = svrg_lyapunov_coeffs(sp, hp.b);
        c_schedule = saga_c_schedule(total_iters, n, hp.b, sp);
        break;
    }
  }

  const auto objective_of = [&](const Vector& xx, const std::vector<Vector>& yy) {
    double val = finite ? problem.loss->full_value(xx)
                        : problem.stream->batch_value(eval_batch, xx);
    for (std::size_t j = 0; j < m; ++j) val += problem.blocks[j].reg.value(yy[j]);
    return val;
  };

  if (lyapunov_ok) {
    Vector s0(l, 0.0);
    problem.constraint->apply_add(x, 1.0, s0);
    for (std::size_t j = 0; j < m; ++j) problem.blocks[j].op->apply_add(ys[j], 1.0, s0);
    for (std::size_t i = 0; i < l; ++i) s0[i] -= problem.offset[i];
    trace.lyapunov_initial = objective_of(x, ys) - vec::dot(z, s0) + 0.5 * sp.rho * vec::norm_sq(s0);
  }

  // Theory-style output: one uniformly random iterate instead of the last.
  std::size_t output_iter = total_iters;
  if (options.uniform_random_output && total_iters > 0) {
    SeededRng pick(hp.seed, 2);
    output_iter = 1 + pick.uniform_index(total_iters);
    trace.notes.push_back("output: uniformly random iterate " + std::to_string(output_iter));
  }

  Vector ax = problem.constraint->apply(x);
  std::vector<Vector> by(m);
  for (std::size_t j = 0; j < m; ++j) by[j] = problem.blocks[j].op->apply(ys[j]);

  double delta_sq_observed = 0.0;  // max ||v_k||^2 along the run

  std::vector<double> dxsq_hist;
  dxsq_hist.reserve(total_iters);
  Vector prev_x;  // x_{k-1}, valid from k >= 1
  double snap_dist_prev = 0.0;   // svrg: ||x_{t-1} - snapshot||^2
  double table_dist_prev = 0.0;  // saga: (1/n) sum ||x_{t-1} - u_i^{t-1}||^2

  const auto t_start = std::chrono::steady_clock::now();
  trace.records.reserve(total_iters);

  for (std::size_t k = 0; k < total_iters; ++k) {
    // -- gradient estimator at x_k
    Vector v;
    double snap_dist = 0.0, table_dist = 0.0;
    switch (kind) {
      case SolverKind::Deterministic:
      case SolverKind::Spider:
        v = spider_step(spider, *problem.loss, x, rng, ifo);
        break;
      case SolverKind::SpiderOnline:
        v = spider_online_step(online, *problem.stream, x, rng, ifo);
        break;
      case SolverKind::Svrg: {
        const bool refresh = svrg.inner == 0;
        v = svrg_step(svrg, *problem.loss, x, rng, ifo);
        if (refresh && k > 0) snap_dist_prev = vec::dist_sq(prev_x, svrg.x_snapshot);
        snap_dist = vec::dist_sq(x, svrg.x_snapshot);
        break;
      }
      case SolverKind::Saga:
        table_dist = saga.mean_point_dist_sq(x);
        v = saga_step(saga, *problem.loss, x, rng, ifo);
        break;
      case SolverKind::Sgd: {
        const auto idx = sample_minibatch(rng, n, hp.b);
        problem.loss->grad(x, idx, v);
        ifo.add(hp.b);
        break;
      }
    }

    delta_sq_observed = std::max(delta_sq_observed, vec::norm_sq(v));

    // -- y blocks, Gauss-Seidel in ascending j
    Vector s = ax;
    for (std::size_t j = 0; j < m; ++j) vec::axpy(1.0, by[j], s);
    for (std::size_t i = 0; i < l; ++i) s[i] -= problem.offset[i];
    double dy_sq = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const Vector w = y_prox_point(problem.blocks[j], sp.r_blocks[j], sp.rho, ys[j], s, z);
      Vector y_new = problem.blocks[j].reg.prox(w, sp.r_blocks[j]);
      dy_sq += vec::dist_sq(y_new, ys[j]);
      Vector by_new = problem.blocks[j].op->apply(y_new);
      vec::axpy(1.0, by_new, s);
      vec::axpy(-1.0, by[j], s);
      by[j] = std::move(by_new);
      ys[j] = std::move(y_new);
    }

    // -- x update; s currently holds A x_k + sum B y^{k+1} - c
    Vector shifted = s;
    vec::axpy(-1.0 / sp.rho, z, shifted);
    Vector x_new = x;
    Vector step = v;
    problem.constraint->apply_transpose_add(shifted, sp.rho, step);
    vec::axpy(-sp.eta / sp.r, step, x_new);

#ifdef NDEBUG
    const bool check_opt = options.check_x_optimality;
#else
    const bool check_opt = true;
#endif
    if (check_opt) {
      const double opt = x_update_optimality_residual(problem, sp, x, x_new, ys, z, v);
      if (opt > 1e-8 * (1.0 + vec::norm(v)))
        throw std::logic_error("x update violates its first-order condition: residual " +
                               std::to_string(opt));
    }

    const double dx_sq = vec::dist_sq(x_new, x);
    dxsq_hist.push_back(dx_sq);

    // -- z update from the fresh residual
    Vector ax_new = problem.constraint->apply(x_new);
    Vector res = s;
    vec::axpy(1.0, ax_new, res);
    vec::axpy(-1.0, ax, res);
    vec::axpy(-sp.rho, res, z);

    TraceRecord rec;
    rec.iter = k;
    rec.dx_sq = dx_sq;
    rec.dy_sq = dy_sq;
    rec.residual = std::sqrt(vec::norm_sq(res));
    rec.ifo = ifo.count();
    switch (kind) {
      case SolverKind::Svrg: rec.epoch = svrg.epoch; break;
      case SolverKind::Spider:
      case SolverKind::SpiderOnline: rec.epoch = k / hp.q + 1; break;
      case SolverKind::Deterministic: rec.epoch = k + 1; break;  // the q = 1 recursion
      default: rec.epoch = 0; break;
    }

    rec.objective = objective_of(x_new, ys);
    rec.aug_lagrangian = rec.objective - vec::dot(z, res) + 0.5 * sp.rho * vec::norm_sq(res);

    switch (kind) {
      case SolverKind::Deterministic:
      case SolverKind::Sgd:
        rec.theta = theta_spider(dxsq_hist, k, 1, dy_sq);
        break;
      case SolverKind::Spider:
        rec.theta = theta_spider(dxsq_hist, k, hp.q, dy_sq);
        break;
      case SolverKind::SpiderOnline:
        rec.theta = theta_spider(dxsq_hist, k, hp.q, dy_sq);
        break;
      case SolverKind::Svrg:
        rec.theta = theta_snapshot(dxsq_hist, k, hp.b, snap_dist, snap_dist_prev, dy_sq);
        break;
      case SolverKind::Saga:
        rec.theta = theta_snapshot(dxsq_hist, k, hp.b, table_dist, table_dist_prev, dy_sq);
        break;
    }

    if (options.record_stationarity && finite)
      rec.stationarity = stationarity_sq(problem, x_new, ys, z).total_sq;

    if (lyapunov_ok) {
      const double aug = rec.aug_lagrangian;
      switch (kind) {
        case SolverKind::Deterministic:
        case SolverKind::Spider:
        case SolverKind::Sgd:
        case SolverKind::SpiderOnline: {
          const std::size_t q_eff = kind == SolverKind::Spider || kind == SolverKind::SpiderOnline
                                        ? hp.q
                                        : 1;
          const std::size_t start = period_start(k + 1, q_eff);
          double hist = 0.0;
          for (std::size_t i = start; i <= k && i < dxsq_hist.size(); ++i) hist += dxsq_hist[i];
          if (start > k) hist = 0.0;
          rec.lyapunov = aug + lyap.dx * dx_sq + lyap.sum * hist;
          break;
        }
        case SolverKind::Svrg: {
          const std::size_t t_next = (k % hp.M) + 1;  // state index within the epoch
          const double snap_new = vec::dist_sq(x_new, svrg.x_snapshot);
          rec.lyapunov = aug + lyap.dx * dx_sq + lyap.sum * snap_dist + c_schedule[t_next] * snap_new;
          break;
        }
        case SolverKind::Saga: {
          const double table_new = saga.mean_point_dist_sq(x_new);
          rec.lyapunov = aug + lyap.dx * dx_sq + lyap.sum * table_dist + c_schedule[k + 1] * table_new;
          break;
        }
      }
    }

    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    if (!vec::all_finite(x_new) || !std::isfinite(rec.objective) || !std::isfinite(rec.residual))
      throw DivergenceError("solver diverged (non-finite iterate) at iteration " +
                                std::to_string(k) + " with rho=" + std::to_string(sp.rho) +
                                ", eta=" + std::to_string(sp.eta),
                            k, sp.rho, sp.eta);

    trace.records.push_back(rec);
    if (options.callback) options.callback(rec);

    prev_x = x;
    x = std::move(x_new);
    ax = std::move(ax_new);
    snap_dist_prev = kind == SolverKind::Svrg ? snap_dist : snap_dist_prev;
    table_dist_prev = kind == SolverKind::Saga ? table_dist : table_dist_prev;

    if (k + 1 == output_iter) {
      trace.x = x;
      trace.y = ys;
      trace.z = z;
    }

    if (options.theta_stop && std::isfinite(rec.theta) && rec.theta < *options.theta_stop) {
      trace.notes.push_back("early stop: theta fell below " + std::to_string(*options.theta_stop) +
                            " at iteration " + std::to_string(k));
      break;
    }
  }

  if (output_iter >= total_iters || trace.x.empty()) {
    trace.x = x;
    trace.y = ys;
    trace.z = z;
  }
  trace.ifo_total = ifo.count();
  // trajectory estimate of the gradient-norm bound, diagnostic only
  if (total_iters > 0) trace.spectra.delta_estimate = std::sqrt(delta_sq_observed);
  return trace;
}

}  // namespace vradmm
