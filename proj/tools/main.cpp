#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vradmm/bench.hpp"
#include "vradmm/diagnostics.hpp"
#include "vradmm/errors.hpp"
#include "vradmm/solver.hpp"

namespace {

using namespace vradmm;

void write_run_meta(const Trace& trace, const ExperimentConfig& config, const std::string& path) {
  nlohmann::json j;
  j["solver"] = solver_name(trace.kind);
  j["seed"] = trace.hp.seed;
  j["config_hash"] = config_hash(config);
  j["iterations"] = trace.records.size();
  j["ifo_total"] = trace.ifo_total;
  nlohmann::json sp;
  sp["lipschitz"] = trace.spectra.lipschitz;
  sp["sigmaA_min"] = trace.spectra.sigmaA_min;
  sp["sigmaA_max"] = trace.spectra.sigmaA_max;
  sp["rho"] = trace.spectra.rho;
  sp["eta"] = trace.spectra.eta;
  sp["r"] = trace.spectra.r;
  sp["kappa_G"] = trace.spectra.kappa_G;
  sp["kappa_A"] = trace.spectra.kappa_A;
  sp["nu_max"] = trace.spectra.nu_max;
  if (trace.spectra.delta_estimate) {
    sp["delta_estimate"] = *trace.spectra.delta_estimate;
    if (trace.kind == SolverKind::SpiderOnline)
      sp["w_estimate"] = online_w_estimate(trace.spectra);  // estimate, not a bound
  }
  j["spectra"] = sp;
  j["notes"] = trace.notes;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

int cmd_solve(const std::string& config_path, const std::string& solver, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::optional<double> alpha,
              std::optional<double> rho, std::optional<double> eta,
              std::optional<std::size_t> iters, bool lyapunov, bool theory_rho) {
  ExperimentConfig config = parse_config(config_path);
  SolverSpec spec = config.solvers.front();
  if (!solver.empty()) {
    spec.kind = solver_from_name(solver);
    for (const SolverSpec& s : config.solvers)
      if (s.kind == spec.kind) spec = s;
    spec.kind = solver_from_name(solver);
  }
  if (seed) spec.hp.seed = *seed;
  if (alpha) spec.hp.alpha = *alpha;
  if (rho) spec.hp.rho_override = *rho;
  if (eta) spec.hp.eta_override = *eta;
  if (iters) spec.hp.K = *iters;
  spec.hp.theory_rho = theory_rho;

  const CompositeProblem problem = build_problem(config);
  RunOptions opts;
  opts.record_lyapunov = lyapunov;
  opts.record_stationarity = lyapunov;

  const Trace trace = run(problem, spec.hp, spec.kind, opts);
  std::filesystem::create_directories(out_dir);
  const std::string base = solver_name(spec.kind) + "_seed" + std::to_string(spec.hp.seed);
  const std::string csv = (std::filesystem::path(out_dir) / (base + ".csv")).string();
  write_trace_csv(trace, csv);
  write_run_meta(trace, config, (std::filesystem::path(out_dir) / (base + ".meta.json")).string());

  const TraceRecord& last = trace.records.back();
  std::printf("%s: %zu iterations, objective %.8g, residual %.3e, ifo %llu -> %s\n",
              solver_name(spec.kind).c_str(), trace.records.size(), last.objective, last.residual,
              static_cast<unsigned long long>(trace.ifo_total), csv.c_str());
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_override) {
  ExperimentConfig config = parse_config(config_path);
  if (!out_override.empty()) config.out_dir = out_override;
  const ExperimentSummary summary = run_experiment(config);
  std::printf("target objective: %.8g (%s)\n", summary.target_value, summary.baseline.c_str());
  for (const auto& [name, median] : summary.median_ifo_to_target) {
    if (std::isnan(median))
      std::printf("  %-14s median ifo-to-target: not reached\n", name.c_str());
    else
      std::printf("  %-14s median ifo-to-target: %.6g\n", name.c_str(), median);
  }
  std::size_t diverged = 0;
  for (const auto& r : summary.runs) diverged += r.diverged ? 1 : 0;
  std::printf("%zu runs, %zu diverged -> %s/summary.json\n", summary.runs.size(), diverged,
              config.out_dir.c_str());
  return 0;
}

int cmd_graph(const std::string& config_path, const std::string& out_path) {
  ExperimentConfig config = parse_config(config_path);
  const SampleSet samples =
      !config.dataset_path.empty()
          ? parse_libsvm(config.dataset_path)
          : (config.synth_chain ? synth_binary_chain(config.synth_n, config.synth_d,
                                                     config.synth_chain_corr, config.synth_noise,
                                                     config.synth_seed)
                                : synth_binary(config.synth_n, config.synth_d, config.synth_noise,
                                               config.synth_seed));
  const auto edges = build_fusion_graph(samples, config.threshold);
  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "cannot open %s\n", out_path.c_str());
    return 1;
  }
  for (const auto& [i, j] : edges) out << i << ' ' << j << '\n';
  std::printf("%zu edges over %zu features -> %s\n", edges.size(), samples.d, out_path.c_str());
  return 0;
}

bool report(const char* name, bool ok) {
  std::printf("[%s] %s\n", ok ? "pass" : "FAIL", name);
  return ok;
}

// Quick self-contained property sweep; the full suites live in the test tree.
int cmd_check() {
  bool all = true;
  SeededRng rng(1);

  {
    auto samples = std::make_shared<SampleSet>(synth_binary(40, 6, 0.5, 5));
    SigmoidLoss loss(samples);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      Vector x(6);
      rng.fill_normal(x);
      worst = std::max(worst, finite_diff_check(loss, x, 1e-6 * (1.0 + vec::norm(x))));
    }
    all &= report("sigmoid gradient vs central differences (<= 1e-5)", worst <= 1e-5);
  }
  {
    auto samples = std::make_shared<SampleSet>(synth_multiclass(30, 5, 3, 7));
    MultitaskLoss loss(samples, 1e-4, 1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      Vector x(loss.dim());
      rng.fill_normal(x);
      worst = std::max(worst, finite_diff_check(loss, x, 1e-6 * (1.0 + vec::norm(x))));
    }
    all &= report("multitask gradient vs central differences (<= 1e-5)", worst <= 1e-5);
  }
  {
    Regularizer l1 = Regularizer::l1(0.7);
    Regularizer nuc = Regularizer::nuclear(0.5, 4, 3);
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      Vector w(12);
      rng.fill_normal(w);
      const double r = 0.3 + rng.uniform01();
      for (const Regularizer* reg : {&l1, &nuc}) {
        const Vector y = reg->prox(w, r);
        Vector residual = vec::sub(w, y);
        vec::scale(residual, r);
        const double tol = reg->kind() == Regularizer::Kind::Nuclear ? 1e-10 : 1e-16;
        ok &= reg->min_subgrad_dist_sq(y, residual) <= tol;
      }
    }
    all &= report("prox optimality via subgradient distance", ok);
  }
  {
    auto samples = std::make_shared<SampleSet>(synth_binary(32, 5, 0.5, 9));
    SigmoidLoss loss(samples);
    Vector x0(5);
    rng.fill_normal(x0);
    Vector x1(x0);
    for (double& c : x1) c += 0.1 * rng.normal();
    const std::size_t N = 5000;
    Vector mean(5, 0.0);
    double var = 0.0;
    SeededRng mc(11);
    for (std::size_t rep = 0; rep < N; ++rep) {
      SpiderState st;
      st.q = 4;
      st.b = 4;
      IfoCounter ifo;
      (void)spider_step(st, loss, x0, mc, ifo);
      const Vector v = spider_step(st, loss, x1, mc, ifo);
      vec::axpy(1.0 / N, v, mean);
      var += vec::norm_sq(v) / N;
    }
    const Vector target = loss.full_grad(x1);
    const double err = std::sqrt(vec::dist_sq(mean, target));
    var -= vec::norm_sq(mean);
    const double bound = 4.0 * std::sqrt(std::max(var, 0.0) / N);
    all &= report("estimator unbiasedness (recursive, 5e3 replays)", err <= std::max(bound, 1e-12));
  }
  {
    bool ok = ifo_total_spider(10, 8, 2, 2) == 60 && ifo_total_svrg(3, 4, 10, 2) == 78 &&
              ifo_total_saga(6, 10, 3) == 28;
    all &= report("ifo closed-form identities", ok);
  }

  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-reduced stochastic ADMM solver bench"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", solver, out_path = "edges.txt";
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha, rho, eta;
  std::optional<std::size_t> iters;
  bool lyapunov = false, theory_rho = false;

  CLI::App* solve = app.add_subcommand("solve", "run one solver on one problem");
  solve->add_option("--config", config_path, "JSON experiment config")->required();
  solve->add_option("--solver", solver, "deterministic|spider|spider-online|svrg|saga|sgd");
  solve->add_option("--seed", seed);
  solve->add_option("--out", out_dir, "output directory");
  solve->add_option("--alpha", alpha, "step scale in (0, 1]");
  solve->add_option("--rho", rho, "penalty override");
  solve->add_option("--eta", eta, "step-size override");
  solve->add_option("--iters", iters, "iteration budget");
  solve->add_flag("--lyapunov", lyapunov, "record lyapunov and stationarity diagnostics");
  solve->add_flag("--theory-rho", theory_rho, "iterate the rho <-> kappa_G fixed point");

  CLI::App* bench = app.add_subcommand("bench", "full config sweep with summary");
  bench->add_option("--config", config_path, "JSON experiment config")->required();
  std::string bench_out;
  bench->add_option("--out", bench_out, "output directory override");

  CLI::App* check = app.add_subcommand("check", "gradient/prox/estimator property suites");
  (void)check;

  CLI::App* graph = app.add_subcommand("graph", "build and dump the fusion edge list");
  graph->add_option("--config", config_path, "JSON experiment config")->required();
  graph->add_option("--out", out_path, "edge list output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return cmd_solve(config_path, solver, out_dir, seed, alpha, rho, eta, iters, lyapunov,
                       theory_rho);
    if (bench->parsed()) return cmd_bench(config_path, bench_out);
    if (graph->parsed()) return cmd_graph(config_path, out_path);
    return cmd_check();
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
