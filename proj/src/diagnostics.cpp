#include "vradmm/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "vradmm/errors.hpp"

namespace vradmm {

namespace {

Vector residual_vector(const CompositeProblem& problem, const Vector& x,
                       const std::vector<Vector>& ys) {
  Vector res(problem.residual_dim(), 0.0);
  problem.constraint->apply_add(x, 1.0, res);
  for (std::size_t j = 0; j < problem.blocks.size(); ++j)
    problem.blocks[j].op->apply_add(ys[j], 1.0, res);
  for (std::size_t i = 0; i < res.size(); ++i) res[i] -= problem.offset[i];
  return res;
}

}  // namespace

double augmented_lagrangian(const CompositeProblem& problem, const Vector& x,
                            const std::vector<Vector>& ys, const Vector& z, double rho) {
  if (!problem.has_finite_sum())
    throw CapabilityError("augmented_lagrangian: needs a finite-sum loss (streaming objective "
                          "values are batch estimates recorded by the solver)");
  double val = problem.loss->full_value(x);
  for (std::size_t j = 0; j < problem.blocks.size(); ++j) val += problem.blocks[j].reg.value(ys[j]);
  const Vector res = residual_vector(problem, x, ys);
  val -= vec::dot(z, res);
  val += 0.5 * rho * vec::norm_sq(res);
  return val;
}

StationarityReport stationarity_sq(const CompositeProblem& problem, const Vector& x,
                                   const std::vector<Vector>& ys, const Vector& z) {
  if (!problem.has_finite_sum())
    throw CapabilityError("stationarity_sq: exact stationarity needs the full gradient; "
                          "streaming runs must use the theta surrogate instead");
  StationarityReport rep;
  Vector grad = problem.loss->full_grad(x);
  Vector atz = problem.constraint->apply_transpose(z);
  rep.grad_block_sq = vec::dist_sq(atz, grad);
  for (std::size_t j = 0; j < problem.blocks.size(); ++j) {
    const Vector bjtz = problem.blocks[j].op->apply_transpose(z);
    rep.y_block_sq.push_back(problem.blocks[j].reg.min_subgrad_dist_sq(ys[j], bjtz));
  }
  rep.feasibility_sq = vec::norm_sq(residual_vector(problem, x, ys));
  rep.total_sq = rep.grad_block_sq + rep.feasibility_sq;
  for (double v : rep.y_block_sq) rep.total_sq += v;
  return rep;
}

double theta_spider(std::span<const double> dxsq, std::size_t k, std::size_t q, double dysq) {
  if (q == 0) throw std::invalid_argument("theta_spider: q must be >= 1");
  if (k >= dxsq.size()) throw std::invalid_argument("theta_spider: history does not reach k");
  const std::size_t start = period_start(k, q);
  double period = 0.0;
  for (std::size_t i = start; i <= k; ++i) period += dxsq[i];
  const double prev = k > 0 ? dxsq[k - 1] : 0.0;
  return dxsq[k] + prev + period / static_cast<double>(q) + dysq;
}

double theta_snapshot(std::span<const double> dxsq, std::size_t k, std::size_t b, double snap_dist_sq,
                      double snap_dist_sq_prev, double dysq) {
  if (b == 0) throw std::invalid_argument("theta_snapshot: b must be >= 1");
  if (k >= dxsq.size()) throw std::invalid_argument("theta_snapshot: history does not reach k");
  const double prev = k > 0 ? dxsq[k - 1] : 0.0;
  return dxsq[k] + prev + (snap_dist_sq + snap_dist_sq_prev) / static_cast<double>(b) + dysq;
}

double finite_diff_check(const SmoothLoss& loss, const Vector& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_check: h must be > 0");
  const Vector grad = loss.full_grad(x);
  Vector xp = x, xm = x;
  double max_rel = 0.0;
  const double scale = std::max(1.0, vec::norm(grad));
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    const double fd = (loss.full_value(xp) - loss.full_value(xm)) / (2.0 * h);
    max_rel = std::max(max_rel, std::abs(fd - grad[i]) / scale);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return max_rel;
}

LyapunovCoeffs spider_lyapunov_coeffs(const DerivedSpectra& sp, std::size_t b, bool use_kappa_A) {
  const double kA = use_kappa_A ? sp.kappa_A : 1.0;
  const double L2 = sp.lipschitz * sp.lipschitz;
  const double g2 = sp.sigma_maxG * sp.sigma_maxG;
  const double sA = sp.sigmaA_min;
  LyapunovCoeffs c;
  c.dx = 9.0 * L2 / (sA * sp.rho) + 3.0 * kA * g2 / (sA * sp.eta * sp.eta * sp.rho);
  c.sum = 2.0 * kA * L2 / (sA * sp.rho * static_cast<double>(b));
  return c;
}

LyapunovCoeffs svrg_lyapunov_coeffs(const DerivedSpectra& sp, std::size_t b) {
  const double L2 = sp.lipschitz * sp.lipschitz;
  const double g2 = sp.sigma_maxG * sp.sigma_maxG;
  const double sA = sp.sigmaA_min;
  LyapunovCoeffs c;
  c.dx = 3.0 * g2 / (sA * sp.eta * sp.eta * sp.rho) + 9.0 * L2 / (sA * sp.rho);
  c.sum = 9.0 * L2 / (sA * sp.rho * static_cast<double>(b));
  return c;
}

std::vector<double> svrg_c_schedule(std::size_t M, std::size_t b, const DerivedSpectra& sp) {
  if (M == 0) throw std::invalid_argument("svrg_c_schedule: M must be >= 1");
  const double base = 18.0 * sp.lipschitz * sp.lipschitz /
                          (sp.sigmaA_min * sp.rho * static_cast<double>(b)) +
                      sp.lipschitz / static_cast<double>(b);
  const double beta = 1.0 / static_cast<double>(M);
  std::vector<double> c(M + 2, 0.0);  // c[M+1] = 0
  for (std::size_t t = M; t >= 1; --t) c[t] = base + (1.0 + beta) * c[t + 1];
  return c;
}

double saga_hit_probability(std::size_t n, std::size_t b) {
  // P(i in a size-b with-replacement draw) = 1 - (1 - 1/n)^b.
  return 1.0 - std::pow(1.0 - 1.0 / static_cast<double>(n), static_cast<double>(b));
}

double online_w_estimate(const DerivedSpectra& sp) {
  if (!sp.delta_estimate)
    throw std::invalid_argument("online_w_estimate: no delta estimate recorded (run a solver first)");
  const double d2 = *sp.delta_estimate * *sp.delta_estimate;
  return 12.0 * d2 * std::max(1.0, 6.0 / (sp.sigmaA_min * sp.rho * sp.rho));
}

std::vector<double> saga_c_schedule(std::size_t T, std::size_t n, std::size_t b,
                                    const DerivedSpectra& sp) {
  const double base = 18.0 * sp.lipschitz * sp.lipschitz /
                          (sp.sigmaA_min * sp.rho * static_cast<double>(b)) +
                      sp.lipschitz / static_cast<double>(b);
  const double beta = static_cast<double>(b) / (4.0 * static_cast<double>(n));
  const double p = saga_hit_probability(n, b);
  std::vector<double> c(T + 1, 0.0);  // c[T] = 0
  for (std::size_t t = T; t >= 1; --t) c[t - 1] = base + (1.0 - p) * (1.0 + beta) * c[t];
  return c;
}

}  // namespace vradmm
