#include "vradmm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vradmm/errors.hpp"
#include "vradmm/rng.hpp"

namespace vradmm {

namespace {

int parse_label(const std::string& tok, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double raw = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    const double rounded = std::round(raw);
    if (std::abs(raw - rounded) > 1e-9) throw std::invalid_argument(tok);
    return static_cast<int>(rounded);
  } catch (const std::exception&) {
    throw ParseError("libsvm: non-numeric label '" + tok + "' at line " + std::to_string(line_no),
                     line_no);
  }
}

}  // namespace

SampleSet parse_libsvm_text(const std::string& text) {
  SampleSet out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<int> raw_labels;
  std::vector<std::pair<std::uint32_t, double>> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    const int label = parse_label(tok, line_no);
    row.clear();
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError("libsvm: malformed pair '" + tok + "' at line " + std::to_string(line_no),
                         line_no);
      try {
        std::size_t pos = 0;
        const long idx = std::stol(tok.substr(0, colon), &pos);
        if (idx < 1) throw std::invalid_argument(tok);
        const double val = std::stod(tok.substr(colon + 1));
        row.emplace_back(static_cast<std::uint32_t>(idx - 1), val);
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception&) {
        throw ParseError("libsvm: malformed pair '" + tok + "' at line " + std::to_string(line_no),
                         line_no);
      }
    }
    out.push_row(row, label);
    raw_labels.push_back(label);
  }
  if (out.n == 0) throw ParseError("libsvm: no samples in input", 0);

  bool binary = true;
  int max_label = 0;
  for (int b : raw_labels) {
    if (b != -1 && b != 0 && b != 1) binary = false;
    max_label = std::max(max_label, b);
  }
  if (binary) {
    out.num_classes = 0;
    for (auto& b : out.labels) b = b == 1 ? 1 : -1;  // {0, -1} -> -1
  } else {
    for (int b : raw_labels)
      if (b < 1)
        throw ParseError("libsvm: multi-class labels must be 1-based positive integers", 0);
    out.num_classes = static_cast<std::size_t>(max_label);
  }
  out.validate();
  return out;
}

SampleSet parse_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("libsvm: cannot open " + path, 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_libsvm_text(buf.str());
}

void write_libsvm(const SampleSet& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_libsvm: cannot open " + path);
  char num[64];
  for (std::size_t i = 0; i < samples.n; ++i) {
    out << samples.labels[i];
    for (std::size_t k = samples.indptr[i]; k < samples.indptr[i + 1]; ++k) {
      std::snprintf(num, sizeof(num), "%.17g", samples.values[k]);
      out << ' ' << (samples.indices[k] + 1) << ':' << num;
    }
    out << '\n';
  }
}

std::vector<Edge> build_fusion_graph(const SampleSet& samples, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("build_fusion_graph: threshold must lie in (0, 1)");
  const std::size_t n = samples.n, d = samples.d;
  std::vector<double> mean(d, 0.0);
  std::vector<double> dense(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = samples.indptr[i]; k < samples.indptr[i + 1]; ++k)
      dense[i * d + samples.indices[k]] += samples.values[k];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += dense[i * d + j];
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = dense[i * d + j] - mean[j];
      var[j] += c * c;
    }
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < d; ++a) {
    if (var[a] <= 0.0) continue;  // constant feature: correlations treated as 0
    for (std::size_t b = a + 1; b < d; ++b) {
      if (var[b] <= 0.0) continue;
      double cov = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        cov += (dense[i * d + a] - mean[a]) * (dense[i * d + b] - mean[b]);
      const double corr = cov / std::sqrt(var[a] * var[b]);
      if (std::abs(corr) > threshold)
        edges.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<Edge> parse_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("edge list: cannot open " + path, 0);
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long a = -1, b = -1;
    if (!(ls >> a >> b) || a < 0 || b < 0)
      throw ParseError("edge list: expected 'i j' at line " + std::to_string(line_no), line_no);
    Edge e{static_cast<std::uint32_t>(std::min(a, b)), static_cast<std::uint32_t>(std::max(a, b))};
    edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

LinOpPtr edges_to_operator(const std::vector<Edge>& edges, std::size_t d) {
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> trip;
  trip.reserve(2 * edges.size());
  for (std::size_t r = 0; r < edges.size(); ++r) {
    trip.emplace_back(static_cast<std::uint32_t>(r), edges[r].first, 1.0);
    trip.emplace_back(static_cast<std::uint32_t>(r), edges[r].second, -1.0);
  }
  return std::make_shared<SparseOperator>(SparseOperator::from_triplets(edges.size(), d, trip));
}

CompositeProblem build_graph_problem(std::shared_ptr<const SampleSet> samples,
                                     const std::vector<Edge>& edges, double lambda, double mu) {
  if (mu < 0.0) throw std::invalid_argument("build_graph_problem: mu must be >= 0");
  if (lambda < 0.0) throw std::invalid_argument("build_graph_problem: lambda must be >= 0");
  const std::size_t d = samples->d;
  for (const Edge& e : edges)
    if (e.first >= d || e.second >= d)
      throw std::invalid_argument("build_graph_problem: edge endpoint out of range");

  LinOpPtr constraint;
  if (edges.empty()) {
    if (mu == 0.0)
      throw HyperparamError(
          "build_graph_problem: empty edge set with mu = 0 leaves A rank-deficient "
          "(Assumption 4); use mu > 0");
    constraint = std::make_shared<ScaledIdentity>(d, mu);
  } else if (mu == 0.0) {
    constraint = edges_to_operator(edges, d);
    const SpectralExtremes sa = spectral_extremes(*constraint);
    if (sa.sigma_min_sq <= 1e-12 * std::max(sa.sigma_max_sq, 1.0))
      throw HyperparamError(
          "build_graph_problem: edge matrix is column-rank-deficient and mu = 0 violates "
          "Assumption 4; use mu > 0 to augment the constraint");
  } else {
    std::vector<LinOpPtr> parts{edges_to_operator(edges, d),
                                std::make_shared<ScaledIdentity>(d, mu)};
    constraint = std::make_shared<StackedOperator>(std::move(parts));
  }

  CompositeProblem problem;
  problem.name = "graph-guided";
  problem.loss = std::make_shared<SigmoidLoss>(samples);
  problem.stream = std::make_shared<ResampleSigmoidStream>(samples);
  problem.constraint = constraint;
  const std::size_t l = constraint->rows();
  problem.blocks.push_back({std::make_shared<ScaledIdentity>(l, -1.0), Regularizer::l1(lambda)});
  problem.offset.assign(l, 0.0);
  problem.validate();
  return problem;
}

CompositeProblem build_multitask_problem(std::shared_ptr<const SampleSet> samples, double lambda1,
                                         double lambda2, double alpha_ls, double beta_ls) {
  if (samples->num_classes < 2)
    throw std::invalid_argument(
        "build_multitask_problem: needs multi-class labels (binary data belongs to the "
        "graph-guided problem)");
  const std::size_t c = samples->num_classes;
  const std::size_t d = samples->d;

  const auto lift = [&](std::vector<double> inner, std::size_t ir) {
    return std::make_shared<KroneckerLift>(ir, c, std::move(inner), d);
  };
  std::vector<double> a_inner(2 * c * c, 0.0), b1_inner(2 * c * c, 0.0), b2_inner(2 * c * c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    a_inner[i * c + i] = 1.0;
    a_inner[(c + i) * c + i] = 1.0;
    b1_inner[i * c + i] = -1.0;
    b2_inner[(c + i) * c + i] = -1.0;
  }

  auto loss = std::make_shared<MultitaskLoss>(samples, lambda1, alpha_ls, beta_ls);
  CompositeProblem problem;
  problem.name = "multitask";
  problem.loss = loss;
  problem.constraint = lift(std::move(a_inner), 2 * c);
  problem.blocks.push_back(
      {lift(std::move(b1_inner), 2 * c), Regularizer::l1(lambda1 * loss->kappa0())});
  problem.blocks.push_back({lift(std::move(b2_inner), 2 * c), Regularizer::nuclear(lambda2, c, d)});
  problem.offset.assign(2 * c * d, 0.0);
  problem.validate();
  return problem;
}

SampleSet synth_binary(std::size_t n, std::size_t d, double noise, std::uint64_t seed) {
  SeededRng rng(seed, 100);
  Vector x_true(d, 0.0);
  for (std::size_t j = 0; j < d; ++j)
    if (rng.uniform01() < 0.3) x_true[j] = rng.normal();
  if (vec::norm_sq(x_true) == 0.0) x_true[0] = 1.0;
  SampleSet out;
  out.d = d;
  std::vector<std::pair<std::uint32_t, double>> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.0, nrm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = rng.normal();
      row[j] = {static_cast<std::uint32_t>(j), a};
      nrm += a * a;
    }
    nrm = std::sqrt(std::max(nrm, 1e-12));
    for (std::size_t j = 0; j < d; ++j) {
      row[j].second /= nrm;  // unit-norm rows pin the smoothness bound at 0.1
      t += row[j].second * x_true[j];
    }
    const int b = (t + noise * rng.normal() / std::sqrt(static_cast<double>(d))) >= 0.0 ? 1 : -1;
    out.push_row(row, b);
  }
  out.d = d;
  out.validate();
  return out;
}

SampleSet synth_binary_chain(std::size_t n, std::size_t d, double corr, double noise,
                             std::uint64_t seed) {
  if (!(corr > -1.0 && corr < 1.0)) throw std::invalid_argument("synth_binary_chain: bad corr");
  SeededRng rng(seed, 101);
  Vector x_true(d, 0.0);
  for (std::size_t j = 0; j < d; ++j)
    if (rng.uniform01() < 0.3) x_true[j] = rng.normal();
  if (vec::norm_sq(x_true) == 0.0) x_true[0] = 1.0;
  SampleSet out;
  out.d = d;
  const double mix = std::sqrt(1.0 - corr * corr);
  std::vector<std::pair<std::uint32_t, double>> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    double prev = rng.normal();
    double t = 0.0, nrm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = j == 0 ? prev : corr * prev + mix * rng.normal();
      prev = a;
      row[j] = {static_cast<std::uint32_t>(j), a};
      nrm += a * a;
    }
    nrm = std::sqrt(std::max(nrm, 1e-12));
    for (std::size_t j = 0; j < d; ++j) {
      row[j].second /= nrm;
      t += row[j].second * x_true[j];
    }
    const int b = (t + noise * rng.normal() / std::sqrt(static_cast<double>(d))) >= 0.0 ? 1 : -1;
    out.push_row(row, b);
  }
  out.d = d;
  out.validate();
  return out;
}

SampleSet synth_multiclass(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("synth_multiclass: need >= 2 classes");
  SeededRng rng(seed, 102);
  const std::size_t rank = std::max<std::size_t>(1, classes / 2);
  // planted weights: low-rank U V^T plus a sparse spike pattern
  std::vector<Vector> u(classes, Vector(rank)), v(rank, Vector(d));
  for (auto& r : u) rng.fill_normal(r);
  for (auto& r : v) rng.fill_normal(r);
  std::vector<double> w(classes * d, 0.0);
  for (std::size_t i = 0; i < classes; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < rank; ++k) w[i * d + j] += u[i][k] * v[k][j];
      if (rng.uniform01() < 0.05) w[i * d + j] += 2.0 * rng.normal();
    }
  SampleSet out;
  out.d = d;
  std::vector<std::pair<std::uint32_t, double>> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    double nrm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = rng.normal();
      row[j] = {static_cast<std::uint32_t>(j), a};
      nrm += a * a;
    }
    nrm = std::sqrt(std::max(nrm, 1e-12));
    for (std::size_t j = 0; j < d; ++j) row[j].second /= nrm;
    int best = 1;
    double best_score = -1e300;
    for (std::size_t cc = 0; cc < classes; ++cc) {
      double s = 0.3 * rng.normal();
      for (std::size_t j = 0; j < d; ++j) s += w[cc * d + j] * row[j].second;
      if (s > best_score) {
        best_score = s;
        best = static_cast<int>(cc) + 1;
      }
    }
    out.push_row(row, best);
  }
  out.d = d;
  out.num_classes = classes;
  out.validate();
  return out;
}

void ExperimentConfig::validate() const {
  if (problem_type != "graph" && problem_type != "multitask")
    throw std::invalid_argument("config: problem_type must be 'graph' or 'multitask'");
  if (lambda < 0.0 || lambda1 < 0.0 || lambda2 < 0.0)
    throw std::invalid_argument("config: penalty weights must be >= 0");
  if (solvers.empty()) throw std::invalid_argument("config: need at least one solver");
  if (seeds.empty()) throw std::invalid_argument("config: need at least one seed");
}

namespace {

HyperParams hyper_from_json(const nlohmann::json& j) {
  HyperParams hp;
  hp.alpha = j.value("alpha", 1.0);
  hp.b = j.value("b", 0);
  hp.q = j.value("q", 0);
  hp.K = j.value("iters", j.value("K", 0));
  hp.b1 = j.value("b1", 0);
  hp.b2 = j.value("b2", 0);
  hp.M = j.value("M", 0);
  hp.S = j.value("S", 0);
  if (j.contains("rho")) hp.rho_override = j["rho"].get<double>();
  if (j.contains("eta")) hp.eta_override = j["eta"].get<double>();
  if (j.contains("sigmaA_min")) hp.sigmaA_min_override = j["sigmaA_min"].get<double>();
  if (j.contains("sigmaA_max")) hp.sigmaA_max_override = j["sigmaA_max"].get<double>();
  hp.theory_rho = j.value("theory_rho", false);
  return hp;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("problem")) {
    const auto& p = j["problem"];
    cfg.problem_type = p.value("type", std::string("graph"));
    cfg.dataset_path = p.value("dataset", std::string());
    cfg.edge_list_path = p.value("edges", std::string());
    cfg.lambda = p.value("lambda", 1e-5);
    cfg.mu = p.value("mu", 1.0);
    cfg.threshold = p.value("threshold", 0.5);
    cfg.lambda1 = p.value("lambda1", 1e-5);
    cfg.lambda2 = p.value("lambda2", 1e-4);
    cfg.alpha_ls = p.value("alpha_ls", 1.0);
    cfg.beta_ls = p.value("beta_ls", 1.0);
    if (p.contains("synthetic")) {
      const auto& s = p["synthetic"];
      cfg.synth_n = s.value("n", cfg.synth_n);
      cfg.synth_d = s.value("d", cfg.synth_d);
      cfg.synth_classes = s.value("classes", cfg.synth_classes);
      cfg.synth_noise = s.value("noise", cfg.synth_noise);
      cfg.synth_seed = s.value("seed", cfg.synth_seed);
      cfg.synth_chain = s.value("chain", false);
      cfg.synth_chain_corr = s.value("chain_corr", cfg.synth_chain_corr);
    }
  }
  for (const auto& s : j.value("solvers", nlohmann::json::array())) {
    SolverSpec spec;
    spec.kind = solver_from_name(s.value("kind", std::string("spider")));
    spec.hp = hyper_from_json(s);
    cfg.solvers.push_back(spec);
  }
  for (const auto& s : j.value("seeds", nlohmann::json::array()))
    cfg.seeds.push_back(s.get<std::uint64_t>());
  cfg.out_dir = j.value("out", std::string("out"));
  cfg.target_tolerance = j.value("target_tolerance", 1e-3);
  cfg.lyapunov = j.value("lyapunov", false);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path, 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::ostringstream os;
  os << config.problem_type << '|' << config.dataset_path << '|' << config.edge_list_path << '|'
     << config.synth_n << '|' << config.synth_d << '|' << config.synth_classes << '|'
     << config.synth_noise << '|' << config.synth_seed << '|' << config.synth_chain << '|'
     << config.lambda << '|' << config.mu << '|' << config.threshold << '|' << config.lambda1 << '|'
     << config.lambda2 << '|' << config.target_tolerance;
  for (const auto& s : config.solvers) os << '|' << solver_name(s.kind) << ':' << s.hp.alpha;
  for (auto s : config.seeds) os << '|' << s;
  std::uint64_t h = 1469598103934665603ull;
  for (char c : os.str()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

CompositeProblem build_problem(const ExperimentConfig& config) {
  config.validate();
  if (config.problem_type == "graph") {
    auto samples = std::make_shared<SampleSet>(
        !config.dataset_path.empty()
            ? parse_libsvm(config.dataset_path)
            : (config.synth_chain
                   ? synth_binary_chain(config.synth_n, config.synth_d, config.synth_chain_corr,
                                        config.synth_noise, config.synth_seed)
                   : synth_binary(config.synth_n, config.synth_d, config.synth_noise,
                                  config.synth_seed)));
    const std::vector<Edge> edges = !config.edge_list_path.empty()
                                        ? parse_edge_list(config.edge_list_path)
                                        : build_fusion_graph(*samples, config.threshold);
    return build_graph_problem(samples, edges, config.lambda, config.mu);
  }
  auto samples = std::make_shared<SampleSet>(
      !config.dataset_path.empty()
          ? parse_libsvm(config.dataset_path)
          : synth_multiclass(config.synth_n, config.synth_d, config.synth_classes,
                             config.synth_seed));
  return build_multitask_problem(samples, config.lambda1, config.lambda2, config.alpha_ls,
                                 config.beta_ls);
}

namespace {

void append_field(std::string& line, double value) {
  if (std::isnan(value)) return;  // empty field
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  line += buf;
}

}  // namespace

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "iter,epoch,objective,aug_lagrangian,residual,theta,stationarity,ifo,seconds\n";
  std::string line;
  for (const TraceRecord& r : trace.records) {
    line.clear();
    line += std::to_string(r.iter);
    line += ',';
    line += std::to_string(r.epoch);
    line += ',';
    append_field(line, r.objective);
    line += ',';
    append_field(line, r.aug_lagrangian);
    line += ',';
    append_field(line, r.residual);
    line += ',';
    append_field(line, r.theta);
    line += ',';
    append_field(line, r.stationarity);
    line += ',';
    line += std::to_string(r.ifo);
    line += ',';
    append_field(line, r.seconds);
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  const CompositeProblem problem = build_problem(config);

  // (solver, seed) runs are independent: isolated state, per-run files.
  struct Job {
    SolverSpec spec;
    std::uint64_t seed;
    RunOutcome outcome;
    std::optional<Trace> trace;
  };
  std::vector<Job> jobs;
  for (const SolverSpec& spec : config.solvers)
    for (const std::uint64_t seed : config.seeds) jobs.push_back({spec, seed, {}, {}});

  const auto execute = [&](Job& job) {
    job.outcome.kind = job.spec.kind;
    job.outcome.seed = job.seed;
    HyperParams hp = job.spec.hp;
    hp.seed = job.seed;
    RunOptions opts;
    opts.record_lyapunov = config.lyapunov;
    opts.record_stationarity = config.lyapunov;
    try {
      Trace trace = run(problem, hp, job.spec.kind, opts);
      job.outcome.final_objective = trace.records.empty() ? 0.0 : trace.records.back().objective;
      job.outcome.final_residual = trace.records.empty() ? 0.0 : trace.records.back().residual;
      job.outcome.ifo_total = trace.ifo_total;
      if (!trace.records.empty()) {
        job.outcome.final_theta_surrogate = trace.spectra.nu_max * trace.records.back().theta;
        job.outcome.initial_theta_surrogate = trace.spectra.nu_max * trace.records.front().theta;
      }
      const std::string file =
          solver_name(job.spec.kind) + "_seed" + std::to_string(job.seed) + ".csv";
      job.outcome.csv_path = (std::filesystem::path(config.out_dir) / file).string();
      write_trace_csv(trace, job.outcome.csv_path);
      job.trace = std::move(trace);
    } catch (const DivergenceError& e) {
      job.outcome.diverged = true;
      job.outcome.error = e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, jobs.size()); ++w)
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        execute(jobs[i]);
      }
    });
  for (std::thread& t : pool) t.join();

  ExperimentSummary summary;
  std::vector<Trace> traces;
  std::vector<std::size_t> trace_run;  // run index per stored trace
  for (Job& job : jobs) {
    if (job.trace) {
      traces.push_back(std::move(*job.trace));
      trace_run.push_back(summary.runs.size());
    }
    summary.runs.push_back(std::move(job.outcome));
  }

  // Objective target: deterministic baseline's median final value plus the
  // tolerance; if no deterministic run exists, the best final value seen.
  std::vector<double> baseline_finals;
  for (const RunOutcome& r : summary.runs)
    if (!r.diverged && r.kind == SolverKind::Deterministic)
      baseline_finals.push_back(r.final_objective);
  if (!baseline_finals.empty()) {
    std::sort(baseline_finals.begin(), baseline_finals.end());
    summary.target_value =
        baseline_finals[baseline_finals.size() / 2] + config.target_tolerance;
    summary.baseline = "deterministic-median-final";
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (const RunOutcome& r : summary.runs)
      if (!r.diverged) best = std::min(best, r.final_objective);
    summary.target_value = best + config.target_tolerance;
    summary.baseline = "best-final";
  }

  for (std::size_t t = 0; t < traces.size(); ++t) {
    RunOutcome& outcome = summary.runs[trace_run[t]];
    for (const TraceRecord& rec : traces[t].records) {
      if (rec.objective <= summary.target_value) {
        outcome.ifo_to_target = rec.ifo;
        break;
      }
    }
  }

  for (const SolverSpec& spec : config.solvers) {
    // Unreached targets (and divergent runs) count as +inf, so the median
    // is NaN whenever at least half the seeds failed to reach the target.
    std::vector<double> vals;
    for (const RunOutcome& r : summary.runs)
      if (r.kind == spec.kind)
        vals.push_back(r.ifo_to_target ? static_cast<double>(*r.ifo_to_target)
                                       : std::numeric_limits<double>::infinity());
    std::sort(vals.begin(), vals.end());
    double median = std::numeric_limits<double>::quiet_NaN();
    if (!vals.empty() && std::isfinite(vals[vals.size() / 2])) median = vals[vals.size() / 2];
    summary.median_ifo_to_target[solver_name(spec.kind)] = median;

    std::vector<double> stat;
    for (const RunOutcome& r : summary.runs)
      if (r.kind == spec.kind && !r.diverged) stat.push_back(r.final_theta_surrogate);
    std::sort(stat.begin(), stat.end());
    summary.median_final_stationarity[solver_name(spec.kind)] =
        stat.empty() ? std::numeric_limits<double>::quiet_NaN() : stat[stat.size() / 2];
  }

  write_summary_json(summary, config,
                     (std::filesystem::path(config.out_dir) / "summary.json").string());
  return summary;
}

void write_summary_json(const ExperimentSummary& summary, const ExperimentConfig& config,
                        const std::string& path) {
  nlohmann::json j;
  j["target_value"] = summary.target_value;
  j["baseline"] = summary.baseline;
  j["target_tolerance"] = config.target_tolerance;
  j["config_hash"] = config_hash(config);
  if (config.problem_type == "graph" && config.mu > 0.0)
    j["note"] = "constraint augmented with mu*I; the penalty includes a plain lasso component";
  nlohmann::json runs = nlohmann::json::array();
  for (const RunOutcome& r : summary.runs) {
    nlohmann::json rr;
    rr["solver"] = solver_name(r.kind);
    rr["seed"] = r.seed;
    rr["diverged"] = r.diverged;
    if (r.diverged) {
      rr["error"] = r.error;
    } else {
      rr["final_objective"] = r.final_objective;
      rr["final_residual"] = r.final_residual;
      rr["final_theta_surrogate"] = r.final_theta_surrogate;
      rr["ifo_total"] = r.ifo_total;
      if (r.ifo_to_target) rr["ifo_to_target"] = *r.ifo_to_target;
      rr["csv"] = r.csv_path;
    }
    runs.push_back(rr);
  }
  j["runs"] = runs;
  nlohmann::json medians;
  for (const auto& [name, value] : summary.median_ifo_to_target) {
    if (std::isnan(value))
      medians[name] = nullptr;
    else
      medians[name] = value;
  }
  j["median_ifo_to_target"] = medians;
  nlohmann::json stationarity;
  for (const auto& [name, value] : summary.median_final_stationarity) {
    if (std::isnan(value))
      stationarity[name] = nullptr;
    else
      stationarity[name] = value;
  }
  j["median_final_stationarity"] = stationarity;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace vradmm
