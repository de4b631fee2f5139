#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vradmm/problem.hpp"
#include "vradmm/solver.hpp"

namespace vradmm {

// LIBSVM text format: "label idx:val idx:val ..." with 1-based feature
// indices. Binary labels {0,-1} map to -1 and {1,+1} to +1; multi-class
// labels stay 1-based.
SampleSet parse_libsvm(const std::string& path);
SampleSet parse_libsvm_text(const std::string& text);
void write_libsvm(const SampleSet& samples, const std::string& path);

using Edge = std::pair<std::uint32_t, std::uint32_t>;

// Feature pairs whose absolute Pearson correlation exceeds the threshold,
// sorted lexicographically and deduplicated. Constant features correlate
// with nothing.
std::vector<Edge> build_fusion_graph(const SampleSet& samples, double threshold);

std::vector<Edge> parse_edge_list(const std::string& path);

// Edge-difference rows e_i - e_j as a sparse operator.
LinOpPtr edges_to_operator(const std::vector<Edge>& edges, std::size_t d);

// Graph-guided fused lasso in canonical form: A = [edges; mu I], one block
// B = -I with g = lambda ||.||_1, c = 0. mu > 0 restores full column rank
// when the edge matrix alone lacks it (this adds a plain lasso component
// on top of the fused penalty; the run summary records it).
CompositeProblem build_graph_problem(std::shared_ptr<const SampleSet> samples,
                                     const std::vector<Edge>& edges, double lambda, double mu);

// Multi-task problem on a lifted c x d weight matrix:
// A = [I_c; I_c], B1 = [-I_c; 0], B2 = [0; -I_c] (all Kronecker-lifted),
// g1 = lambda1 kappa0 ||.||_1, g2 = lambda2 ||.||_*.
CompositeProblem build_multitask_problem(std::shared_ptr<const SampleSet> samples, double lambda1,
                                         double lambda2, double alpha_ls, double beta_ls);

// Synthetic data. Binary: unit-norm Gaussian rows against a sparse planted
// separator. The chain variant correlates adjacent features so the fusion
// graph is recoverable. Multi-class: argmax of a planted low-rank map.
SampleSet synth_binary(std::size_t n, std::size_t d, double noise, std::uint64_t seed);
SampleSet synth_binary_chain(std::size_t n, std::size_t d, double corr, double noise,
                             std::uint64_t seed);
SampleSet synth_multiclass(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed);

struct SolverSpec {
  SolverKind kind = SolverKind::Spider;
  HyperParams hp;
};

struct ExperimentConfig {
  std::string problem_type = "graph";  // "graph" | "multitask"
  std::string dataset_path;            // empty -> synthetic
  std::string edge_list_path;          // optional explicit edges
  std::size_t synth_n = 1000, synth_d = 20, synth_classes = 3;
  double synth_noise = 0.5;
  std::uint64_t synth_seed = 7;
  bool synth_chain = false;
  double synth_chain_corr = 0.65;
  double lambda = 1e-5;
  double mu = 1.0;
  double threshold = 0.5;
  double lambda1 = 1e-5, lambda2 = 1e-4;
  double alpha_ls = 1.0, beta_ls = 1.0;
  std::vector<SolverSpec> solvers;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  double target_tolerance = 1e-3;
  bool lyapunov = false;

  void validate() const;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);
std::uint64_t config_hash(const ExperimentConfig& config);

CompositeProblem build_problem(const ExperimentConfig& config);

// CSV schema: iter,epoch,objective,aug_lagrangian,residual,theta,
// stationarity,ifo,seconds. Optional columns are empty when unrecorded;
// values carry 17 significant digits.
void write_trace_csv(const Trace& trace, const std::string& path);

struct RunOutcome {
  SolverKind kind = SolverKind::Spider;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string error;
  double final_objective = 0.0;
  double final_residual = 0.0;
  double final_theta_surrogate = 0.0;  // nu_max * theta at the last iteration
  double initial_theta_surrogate = 0.0;
  std::uint64_t ifo_total = 0;
  std::optional<std::uint64_t> ifo_to_target;
  std::string csv_path;
};

struct ExperimentSummary {
  double target_value = 0.0;
  std::string baseline;
  std::vector<RunOutcome> runs;
  std::map<std::string, double> median_ifo_to_target;  // solver name -> median (NaN if unreached)
  std::map<std::string, double> median_final_stationarity;  // nu_max * theta at the last iterate
};

// For each (solver, seed): derive, run, persist one CSV; divergence is
// recorded in the summary without aborting the sweep. The objective
// target is the deterministic baseline's median final value plus the
// configured tolerance (falling back to the best final value seen).
ExperimentSummary run_experiment(const ExperimentConfig& config);

void write_summary_json(const ExperimentSummary& summary, const ExperimentConfig& config,
                        const std::string& path);

}  // namespace vradmm
