#include <doctest.h>

#include <cmath>
#include <memory>

#include "vradmm/diagnostics.hpp"
#include "vradmm/errors.hpp"
#include "vradmm/solver.hpp"

using namespace vradmm;

namespace {

CompositeProblem split_quadratic(std::size_t n, std::size_t d, std::uint64_t seed) {
  SeededRng rng(seed);
  CompositeProblem p;
  p.loss = std::make_shared<QuadraticLoss>(QuadraticLoss::random(n, d, rng));
  p.constraint = std::make_shared<ScaledIdentity>(d, 1.0);
  p.blocks.push_back({std::make_shared<ScaledIdentity>(d, -1.0), Regularizer::zero()});
  p.offset.assign(d, 0.0);
  return p;
}

CompositeProblem l1_problem(std::uint64_t seed) {
  SeededRng rng(seed);
  const std::size_t d = 4, l = 5;
  std::vector<double> a(l * d);
  for (double& v : a) v = rng.normal();
  CompositeProblem p;
  p.loss = std::make_shared<QuadraticLoss>(QuadraticLoss::random(6, d, rng));
  p.constraint = std::make_shared<DenseOperator>(l, d, a);
  p.blocks.push_back({std::make_shared<ScaledIdentity>(l, -1.0), Regularizer::l1(0.4)});
  p.offset.assign(l, 0.1);
  return p;
}

}  // namespace

TEST_CASE("augmented lagrangian: feasible point, hand arithmetic, naive re-evaluation") {
  CompositeProblem p = split_quadratic(5, 3, 7);
  SeededRng rng(9);
  Vector x(3), z(3);
  rng.fill_normal(x);
  rng.fill_normal(z);

  // feasible: y = x -> value is f + g exactly, for any z
  std::vector<Vector> feas{x};
  const double expect = p.loss->full_value(x);
  CHECK(augmented_lagrangian(p, x, feas, z, 3.7) == doctest::Approx(expect).epsilon(1e-14));

  // z = 0, rho = 2, residual of norm 1 -> f + g + 1
  Vector y = x;
  y[0] -= 1.0;  // residual = x - y = e_0
  std::vector<Vector> ys{y};
  const Vector z0(3, 0.0);
  CHECK(augmented_lagrangian(p, x, ys, z0, 2.0) ==
        doctest::Approx(p.loss->full_value(x) + 1.0).epsilon(1e-14));

  // random state vs term-by-term naive evaluation
  CompositeProblem q = l1_problem(11);
  Vector xr(4), zr(5), yr(5);
  rng.fill_normal(xr);
  rng.fill_normal(zr);
  rng.fill_normal(yr);
  std::vector<Vector> yrs{yr};
  const double rho = 1.7;
  Vector res = q.constraint->apply(xr);
  q.blocks[0].op->apply_add(yr, 1.0, res);
  for (std::size_t i = 0; i < res.size(); ++i) res[i] -= q.offset[i];
  double naive = q.loss->full_value(xr) + q.blocks[0].reg.value(yr);
  naive -= vec::dot(zr, res);
  naive += 0.5 * rho * vec::norm_sq(res);
  CHECK(augmented_lagrangian(q, xr, yrs, zr, rho) == doctest::Approx(naive).epsilon(1e-12));
}

TEST_CASE("stationarity: constructed KKT point scores zero") {
  CompositeProblem p = split_quadratic(5, 3, 13);
  const auto* quad = dynamic_cast<const QuadraticLoss*>(p.loss.get());
  const Vector x_star = quad->mean_target();  // grad f(x*) = 0
  std::vector<Vector> ys{x_star};             // y = x -> feasible
  const Vector z(3, 0.0);                     // A^T z = grad f, B^T z in dg
  const StationarityReport rep = stationarity_sq(p, x_star, ys, z);
  CHECK(rep.total_sq <= 1e-20);
  CHECK(rep.grad_block_sq <= 1e-20);
  CHECK(rep.feasibility_sq <= 1e-20);
  CHECK(rep.y_block_sq[0] <= 1e-20);

  // perturb one coordinate by 1e-3: grad block rises to about (L delta)^2
  Vector x_pert = x_star;
  x_pert[0] += 1e-3;
  std::vector<Vector> yp{x_pert};
  const StationarityReport pert = stationarity_sq(p, x_pert, yp, z);
  CHECK(pert.grad_block_sq == doctest::Approx(1e-6).epsilon(0.01));  // L = 1
  CHECK(pert.total_sq > 0.0);

  // naive oracle for the gradient block on a random state
  SeededRng rng(17);
  CompositeProblem q = l1_problem(19);
  Vector xr(4), zr(5), yr(5);
  rng.fill_normal(xr);
  rng.fill_normal(zr);
  rng.fill_normal(yr);
  std::vector<Vector> yrs{yr};
  const StationarityReport rr = stationarity_sq(q, xr, yrs, zr);
  const Vector atz = q.constraint->apply_transpose(zr);
  const Vector grad = q.loss->full_grad(xr);
  CHECK(rr.grad_block_sq == doctest::Approx(vec::dist_sq(atz, grad)).epsilon(1e-12));
  CHECK(rr.total_sq ==
        doctest::Approx(rr.grad_block_sq + rr.y_block_sq[0] + rr.feasibility_sq).epsilon(1e-14));
}

TEST_CASE("stationarity: streaming-only problem is a capability error") {
  CompositeProblem p;
  p.stream = std::make_shared<GaussianQuadraticStream>(Vector(3, 0.0));
  p.constraint = std::make_shared<ScaledIdentity>(3, 1.0);
  p.blocks.push_back({std::make_shared<ScaledIdentity>(3, -1.0), Regularizer::zero()});
  p.offset.assign(3, 0.0);
  const Vector x(3, 0.0);
  std::vector<Vector> ys{x};
  CHECK_THROWS_AS((void)stationarity_sq(p, x, ys, x), CapabilityError);
  CHECK_THROWS_AS((void)augmented_lagrangian(p, x, ys, x, 1.0), CapabilityError);
}

TEST_CASE("theta surrogate: stationary trajectory and unit-step hand value") {
  // all iterates equal: every term vanishes
  const std::vector<double> still(8, 0.0);
  CHECK(theta_spider(still, 5, 2, 0.0) == 0.0);

  // constant unit steps with q=1: dx + dx_prev + (1/1) dx = 3
  const std::vector<double> unit{1.0, 1.0, 1.0};
  CHECK(theta_spider(unit, 1, 1, 0.0) == doctest::Approx(3.0));

  // insufficient history is rejected
  CHECK_THROWS_AS((void)theta_spider(unit, 7, 2, 0.0), std::invalid_argument);

  // snapshot form hand value
  const std::vector<double> dx{0.5, 0.25};
  CHECK(theta_snapshot(dx, 1, 4, 2.0, 1.0, 0.125) ==
        doctest::Approx(0.25 + 0.5 + (2.0 + 1.0) / 4.0 + 0.125));
}

TEST_CASE("svrg c schedule: two-step hand recursion, positivity, monotonicity") {
  CompositeProblem p = split_quadratic(4, 3, 23);
  HyperParams hp;
  const DerivedSpectra sp = derive_hyperparams(p, hp, SolverKind::Svrg);
  const std::size_t M = 2, b = 3;
  const auto c = svrg_c_schedule(M, b, sp);
  const double base =
      18.0 * sp.lipschitz * sp.lipschitz / (sp.sigmaA_min * sp.rho * b) + sp.lipschitz / b;
  CHECK(c[M + 1] == 0.0);
  CHECK(c[2] == doctest::Approx(base));
  CHECK(c[1] == doctest::Approx(base * (1.0 + (1.0 + 0.5))));  // backward recursion by hand
  for (std::size_t t = 1; t <= M; ++t) CHECK(c[t] > c[t + 1]);

  const auto longer = svrg_c_schedule(7, b, sp);
  for (std::size_t t = 1; t <= 7; ++t) {
    CHECK(longer[t] > 0.0);
    CHECK(longer[t] > longer[t + 1]);
  }
}

TEST_CASE("saga schedule: hit probability and c recursion") {
  CHECK(saga_hit_probability(4, 2) == doctest::Approx(0.4375));  // 1 - (3/4)^2
  CompositeProblem p = split_quadratic(4, 3, 29);
  HyperParams hp;
  const DerivedSpectra sp = derive_hyperparams(p, hp, SolverKind::Saga);
  const auto c = saga_c_schedule(6, 4, 2, sp);
  CHECK(c[6] == 0.0);
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(c[t] > 0.0);
    CHECK(c[t] > c[t + 1]);
  }
  const double base = 18.0 * sp.lipschitz * sp.lipschitz / (sp.sigmaA_min * sp.rho * 2.0) +
                      sp.lipschitz / 2.0;
  const double beta = 2.0 / 16.0;
  const double pmiss = 1.0 - saga_hit_probability(4, 2);
  CHECK(c[5] == doctest::Approx(base));
  CHECK(c[4] == doctest::Approx(base + pmiss * (1.0 + beta) * base));
}

TEST_CASE("finite_diff_check thresholds per loss family") {
  SeededRng rng(31);
  CompositeProblem p = split_quadratic(5, 4, 37);
  Vector x(4);
  rng.fill_normal(x);
  // central differences are exact for quadratics; h large enough that
  // cancellation noise stays below the bound
  CHECK(finite_diff_check(*p.loss, x, 1e-4) <= 1e-10);

  auto samples = std::make_shared<SampleSet>();
  {
    SeededRng srng(41);
    std::vector<std::pair<std::uint32_t, double>> row(5);
    for (int i = 0; i < 12; ++i) {
      for (std::size_t j = 0; j < 5; ++j) row[j] = {static_cast<std::uint32_t>(j), srng.normal()};
      samples->push_row(row, srng.uniform01() < 0.5 ? 1 : -1);
    }
    samples->d = 5;
  }
  SigmoidLoss sigmoid(samples);
  for (int t = 0; t < 20; ++t) {
    Vector xs(5);
    rng.fill_normal(xs);
    CHECK(finite_diff_check(sigmoid, xs, 1e-6 * (1.0 + vec::norm(xs))) <= 1e-5);
  }
}

TEST_CASE("spider lyapunov value with q=1 has an empty history sum") {
  CompositeProblem p = split_quadratic(6, 3, 43);
  HyperParams hp;
  hp.K = 20;
  hp.q = 1;
  hp.b = 1;
  hp.seed = 2;
  RunOptions opts;
  opts.record_lyapunov = true;
  const Trace t = run(p, hp, SolverKind::Spider, opts);
  const LyapunovCoeffs lc = spider_lyapunov_coeffs(t.spectra, 1);
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    const TraceRecord& r = t.records[k];
    // with q = 1 the period sum is empty: R = L_rho + coeff * dx^2
    CHECK(r.lyapunov == doctest::Approx(r.aug_lagrangian + lc.dx * r.dx_sq).epsilon(1e-12));
  }
}

TEST_CASE("conditioning-aware coefficients carry the kappa_A factor") {
  CompositeProblem p = l1_problem(47);
  HyperParams hp;
  const DerivedSpectra sp = derive_hyperparams(p, hp, SolverKind::Spider);
  const LyapunovCoeffs plain = spider_lyapunov_coeffs(sp, 4, false);
  const LyapunovCoeffs aware = spider_lyapunov_coeffs(sp, 4, true);
  CHECK(aware.sum == doctest::Approx(plain.sum * sp.kappa_A));
  CHECK(aware.dx > plain.dx);
}
