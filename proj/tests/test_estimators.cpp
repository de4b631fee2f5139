#include <doctest.h>

#include <cmath>
#include <memory>

#include "vradmm/estimators.hpp"
#include "vradmm/losses.hpp"
#include "vradmm/rng.hpp"

using namespace vradmm;

namespace {

std::shared_ptr<SampleSet> random_binary(std::size_t n, std::size_t d, std::uint64_t seed) {
  SeededRng rng(seed);
  auto s = std::make_shared<SampleSet>();
  s->d = d;
  std::vector<std::pair<std::uint32_t, double>> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) row[j] = {static_cast<std::uint32_t>(j), rng.normal()};
    s->push_row(row, rng.uniform01() < 0.5 ? 1 : -1);
  }
  s->d = d;
  return s;
}

struct MonteCarlo {
  Vector mean;
  double sample_std;  // sqrt of (1/(N-1)) sum ||v - mean||^2
};

template <typename DrawFn>
MonteCarlo monte_carlo(std::size_t replays, std::size_t dim, DrawFn&& draw) {
  std::vector<Vector> vs;
  vs.reserve(replays);
  Vector mean(dim, 0.0);
  for (std::size_t rep = 0; rep < replays; ++rep) {
    vs.push_back(draw(rep));
    vec::axpy(1.0 / static_cast<double>(replays), vs.back(), mean);
  }
  double ss = 0.0;
  for (const Vector& v : vs) ss += vec::dist_sq(v, mean);
  return {mean, std::sqrt(ss / static_cast<double>(replays - 1))};
}

}  // namespace

TEST_CASE("spider: q=1 collapses to the exact gradient") {
  auto samples = random_binary(12, 5, 3);
  SigmoidLoss loss(samples);
  SeededRng rng(5);
  IfoCounter ifo;
  SpiderState state;
  state.q = 1;
  state.b = 3;
  Vector x(5);
  for (int k = 0; k < 6; ++k) {
    rng.fill_normal(x);
    const Vector v = spider_step(state, loss, x, rng, ifo);
    const Vector g = loss.full_grad(x);
    CHECK(v == g);
  }
  CHECK(ifo.count() == 6 * 12);
}

TEST_CASE("spider: zero movement keeps v unchanged at non-refresh steps") {
  auto samples = random_binary(10, 4, 7);
  SigmoidLoss loss(samples);
  SeededRng rng(9);
  IfoCounter ifo;
  SpiderState state;
  state.q = 8;
  state.b = 2;
  Vector x(4);
  rng.fill_normal(x);
  const Vector v0 = spider_step(state, loss, x, rng, ifo);
  const Vector v1 = spider_step(state, loss, x, rng, ifo);  // same x
  CHECK(v1 == v0);
  CHECK(ifo.count() == 10 + 2 * 2);
}

TEST_CASE("spider: Monte Carlo unbiasedness over full-period replays") {
  auto samples = random_binary(32, 6, 11);
  SigmoidLoss loss(samples);
  // frozen path x_0 .. x_3 within one period
  SeededRng path_rng(13);
  std::vector<Vector> path;
  Vector x(6);
  path_rng.fill_normal(x);
  path.push_back(x);
  for (int i = 0; i < 3; ++i) {
    Vector nxt = path.back();
    for (double& c : nxt) c += 0.15 * path_rng.normal();
    path.push_back(nxt);
  }

  const std::size_t N = 20000;
  SeededRng mc_rng(17);
  const auto res = monte_carlo(N, 6, [&](std::size_t) {
    IfoCounter ifo;
    SpiderState st;
    st.q = 16;
    st.b = 4;
    Vector v;
    for (const Vector& xi : path) v = spider_step(st, loss, xi, mc_rng, ifo);
    return v;
  });
  const Vector target = loss.full_grad(path.back());
  const double err = std::sqrt(vec::dist_sq(res.mean, target));
  CHECK(err <= 4.0 * res.sample_std / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("spider online: degenerate one-sample stream gives the exact sample gradient") {
  auto one = std::make_shared<SampleSet>();
  one->push_row({{0, 0.5}, {1, -0.25}}, 1);
  one->d = 2;
  ResampleSigmoidStream stream(one);
  SigmoidLoss loss(one);

  SpiderOnlineState st;
  st.q = 4;
  st.b1 = 4;
  st.b2 = 2;
  SeededRng rng(19);
  IfoCounter ifo;
  Vector x(2);
  for (int k = 0; k < 6; ++k) {
    rng.fill_normal(x);
    const Vector v = spider_online_step(st, stream, x, rng, ifo);
    const Vector g = loss.full_grad(x);
    for (std::size_t i = 0; i < 2; ++i) CHECK(v[i] == doctest::Approx(g[i]).epsilon(1e-12));
  }
  // refreshes at k = 0, 4 cost b1; the other four steps cost 2 b2
  CHECK(ifo.count() == 2 * 4 + 4 * (2 * 2));
}

TEST_CASE("spider online: refresh MSE matches Var(grad)/b1 on the Gaussian stream") {
  const std::size_t d = 5, b1 = 16;
  GaussianQuadraticStream stream(Vector(d, 1.5));
  Vector x(d, 0.0);
  // E grad = x - mu; per-sample grad = x - zeta -> Var = E||zeta - mu||^2 = d
  Vector expected_grad(d);
  for (std::size_t i = 0; i < d; ++i) expected_grad[i] = x[i] - 1.5;
  SeededRng rng(23);
  const std::size_t N = 20000;
  double mse = 0.0;
  SampleSet batch;
  for (std::size_t rep = 0; rep < N; ++rep) {
    stream.draw(rng, b1, batch);
    Vector g;
    stream.batch_grad(batch, x, g);
    mse += vec::dist_sq(g, expected_grad) / static_cast<double>(N);
  }
  const double closed_form = static_cast<double>(d) / static_cast<double>(b1);
  CHECK(mse == doctest::Approx(closed_form).epsilon(0.2));
}

TEST_CASE("spider online: refresh MSE stays under the gradient-norm floor") {
  // the refresh error inherits a delta^2 / b1 floor; with the trajectory
  // estimate delta^2 = max ||grad||^2 the empirical MSE must sit below it
  const std::size_t d = 4, b1 = 9;
  GaussianQuadraticStream stream(Vector(d, 2.0));
  Vector x(d, 0.5);
  Vector expected_grad(d);
  for (std::size_t i = 0; i < d; ++i) expected_grad[i] = x[i] - 2.0;
  SeededRng rng(117);
  const std::size_t N = 20000;
  double mse = 0.0, max_grad_sq = 0.0;
  SampleSet batch;
  Vector g;
  for (std::size_t rep = 0; rep < N; ++rep) {
    stream.draw(rng, b1, batch);
    stream.batch_grad(batch, x, g);
    mse += vec::dist_sq(g, expected_grad) / static_cast<double>(N);
    // per-sample gradient norms observed within the batch
    Vector zeta(d);
    for (std::size_t i = 0; i < batch.n; ++i) {
      std::fill(zeta.begin(), zeta.end(), 0.0);
      batch.add_row(i, 1.0, zeta);
      max_grad_sq = std::max(max_grad_sq, vec::dist_sq(x, zeta));
    }
  }
  CHECK(mse <= 1.1 * max_grad_sq / static_cast<double>(b1));
}

TEST_CASE("svrg: first inner step of every epoch returns the full gradient") {
  auto samples = random_binary(16, 4, 29);
  SigmoidLoss loss(samples);
  SvrgState st;
  st.M = 3;
  st.b = 2;
  SeededRng rng(31);
  IfoCounter ifo;
  Vector x(4);
  for (int k = 0; k < 9; ++k) {
    rng.fill_normal(x);
    const Vector v = svrg_step(st, loss, x, rng, ifo);
    if (k % 3 == 0) {
      const Vector g = loss.full_grad(x);
      CHECK(v == g);  // difference term cancels exactly at the snapshot
    }
  }
  CHECK(ifo.count() == 3 * 16 + 9 * (2 * 2));
}

TEST_CASE("svrg: conditionally unbiased given the snapshot") {
  auto samples = random_binary(24, 5, 37);
  SigmoidLoss loss(samples);
  Vector snapshot(5), x(5);
  SeededRng setup(41);
  setup.fill_normal(snapshot);
  setup.fill_normal(x);

  SeededRng mc_rng(43);
  const std::size_t N = 20000;
  const auto res = monte_carlo(N, 5, [&](std::size_t) {
    SvrgState st;
    st.M = 100;
    st.b = 3;
    IfoCounter ifo;
    SeededRng snap_rng(1);
    (void)svrg_step(st, loss, snapshot, snap_rng, ifo);  // installs the snapshot
    return svrg_step(st, loss, x, mc_rng, ifo);
  });
  const Vector target = loss.full_grad(x);
  const double err = std::sqrt(vec::dist_sq(res.mean, target));
  CHECK(err <= 4.0 * res.sample_std / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("saga: synchronized table returns phi == full gradient; n=1 is exact") {
  auto samples = random_binary(9, 4, 47);
  SigmoidLoss loss(samples);
  SagaState st;
  st.b = 3;
  SeededRng rng(53);
  IfoCounter ifo;
  Vector x0(4);
  rng.fill_normal(x0);
  st.init(loss, x0, ifo);
  CHECK(ifo.count() == 9);
  const Vector v = saga_step(st, loss, x0, rng, ifo);  // fresh == stored
  const Vector g = loss.full_grad(x0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(v[i] == doctest::Approx(g[i]).epsilon(1e-12));
  CHECK(ifo.count() == 9 + 3);

  auto single = random_binary(1, 3, 59);
  SigmoidLoss loss1(single);
  SagaState st1;
  st1.b = 2;
  Vector y0(3, 0.2);
  IfoCounter ifo1;
  st1.init(loss1, y0, ifo1);
  Vector x(3);
  for (int k = 0; k < 5; ++k) {
    rng.fill_normal(x);
    const Vector vk = saga_step(st1, loss1, x, rng, ifo1);
    const Vector gk = loss1.full_grad(x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(vk[i] == doctest::Approx(gk[i]).epsilon(1e-12));
  }
}

TEST_CASE("saga: phi stays the exact mean of the table through duplicate writes") {
  auto samples = random_binary(7, 3, 61);
  SigmoidLoss loss(samples);
  SagaState st;
  st.b = 5;  // close to n so duplicates are frequent
  SeededRng rng(67);
  IfoCounter ifo;
  Vector x(3, 0.0);
  st.init(loss, x, ifo);
  for (int k = 0; k < 25; ++k) {
    rng.fill_normal(x);
    (void)saga_step(st, loss, x, rng, ifo);
    CHECK(st.table_mean_drift() <= 1e-10);
  }
}

TEST_CASE("saga: conditionally unbiased given the table") {
  auto samples = random_binary(20, 4, 71);
  SigmoidLoss loss(samples);
  SagaState base;
  base.b = 4;
  SeededRng warm(73);
  IfoCounter ifo;
  Vector x(4);
  warm.fill_normal(x);
  base.init(loss, x, ifo);
  for (int k = 0; k < 10; ++k) {  // desynchronize the table a little
    warm.fill_normal(x);
    (void)saga_step(base, loss, x, warm, ifo);
  }
  Vector probe(4);
  warm.fill_normal(probe);

  SeededRng mc_rng(79);
  const std::size_t N = 20000;
  const auto res = monte_carlo(N, 4, [&](std::size_t) {
    SagaState st = base;  // frozen table per replay
    IfoCounter tmp;
    return saga_step(st, loss, probe, mc_rng, tmp);
  });
  const Vector target = loss.full_grad(probe);
  const double err = std::sqrt(vec::dist_sq(res.mean, target));
  CHECK(err <= 4.0 * res.sample_std / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("ifo closed forms: hand-traced values") {
  CHECK(ifo_total_spider(10, 8, 2, 2) == 60);        // 8*5 + 4*5
  CHECK(ifo_total_spider(7, 8, 1, 3) == 7 * 8);      // q=1: every step full
  CHECK(ifo_total_spider(4, 8, 4, 3) == 8 + 2 * 3 * 3);  // K=q: n + 2b(q-1)
  CHECK(ifo_total_deterministic(5, 11) == 55);
  CHECK(ifo_total_svrg(3, 4, 10, 2) == 3 * (10 + 16));
  CHECK(ifo_total_saga(6, 10, 3) == 10 + 18);
  CHECK(ifo_total_sgd(7, 5) == 35);
  CHECK(ifo_total_spider_online(10, 2, 16, 4) == 5 * 16 + 5 * 8);
}

TEST_CASE("ifo live counters equal the closed forms") {
  SeededRng meta(83);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + meta.uniform_index(30);
    const std::size_t b = 1 + meta.uniform_index(2 * n);
    const std::size_t q = 1 + meta.uniform_index(10);
    const std::size_t K = 1 + meta.uniform_index(20);
    auto samples = random_binary(n, 3, 89 + trial);
    SigmoidLoss loss(samples);
    SeededRng rng(91 + trial);
    Vector x(3);

    IfoCounter ifo;
    SpiderState sp;
    sp.q = q;
    sp.b = b;
    for (std::size_t k = 0; k < K; ++k) {
      rng.fill_normal(x);
      (void)spider_step(sp, loss, x, rng, ifo);
    }
    CHECK(ifo.count() == ifo_total_spider(K, n, q, b));

    const std::size_t M = 1 + meta.uniform_index(6);
    const std::size_t S = 1 + meta.uniform_index(4);
    IfoCounter ifo2;
    SvrgState sv;
    sv.M = M;
    sv.b = b;
    for (std::size_t k = 0; k < S * M; ++k) {
      rng.fill_normal(x);
      (void)svrg_step(sv, loss, x, rng, ifo2);
    }
    CHECK(ifo2.count() == ifo_total_svrg(S, M, n, b));

    IfoCounter ifo3;
    SagaState sg;
    sg.b = b;
    sg.init(loss, x, ifo3);
    for (std::size_t k = 0; k < K; ++k) {
      rng.fill_normal(x);
      (void)saga_step(sg, loss, x, rng, ifo3);
    }
    CHECK(ifo3.count() == ifo_total_saga(K, n, b));
  }
}
