#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vradmm/bench.hpp"
#include "vradmm/errors.hpp"

using namespace vradmm;

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(cur);
    rows.push_back(fields);
  }
  return rows;
}

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("vradmm_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("parse_libsvm: format definition, degenerate input, errors") {
  const SampleSet s = parse_libsvm_text("+1 1:0.5 3:2.0\n-1 2:1.25\n");
  CHECK(s.n == 2);
  CHECK(s.d >= 3);
  CHECK(s.num_classes == 0);
  CHECK(s.labels[0] == 1);
  CHECK(s.labels[1] == -1);
  CHECK(s.dot_row(0, Vector{1.0, 0.0, 0.0}) == doctest::Approx(0.5));
  CHECK(s.dot_row(0, Vector{0.0, 0.0, 1.0}) == doctest::Approx(2.0));

  // {0, 1} labels map to -1 / +1
  const SampleSet zo = parse_libsvm_text("0 1:1\n1 1:2\n");
  CHECK(zo.labels[0] == -1);
  CHECK(zo.labels[1] == 1);

  // multi-class stays 1-based
  const SampleSet mc = parse_libsvm_text("3 1:1\n1 1:2\n2 2:1\n");
  CHECK(mc.num_classes == 3);

  CHECK_THROWS_AS((void)parse_libsvm_text(""), ParseError);
  CHECK_THROWS_AS((void)parse_libsvm_text("abc 1:2\n"), ParseError);
  try {
    (void)parse_libsvm_text("+1 1:0.5\n-1 oops\n");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("libsvm round-trip preserves a random sparse set exactly") {
  SeededRng rng(3);
  SampleSet original;
  original.d = 20;
  std::vector<std::pair<std::uint32_t, double>> row;
  for (int i = 0; i < 100; ++i) {
    row.clear();
    for (std::uint32_t j = 0; j < 20; ++j)
      if (rng.uniform01() < 0.3) row.emplace_back(j, rng.normal());
    if (row.empty()) row.emplace_back(0, 1.0);
    original.push_row(row, rng.uniform01() < 0.5 ? 1 : -1);
  }
  original.d = 20;
  const auto dir = temp_dir("roundtrip");
  const std::string path = (dir / "data.libsvm").string();
  write_libsvm(original, path);
  const SampleSet parsed = parse_libsvm(path);
  REQUIRE(parsed.n == original.n);
  CHECK(parsed.values == original.values);
  CHECK(parsed.indices == original.indices);
  CHECK(parsed.labels == original.labels);
}

TEST_CASE("fusion graph: forced edge, null model, chain recovery") {
  // two perfectly correlated features force the edge (0, 1)
  SampleSet dup;
  dup.d = 3;
  SeededRng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.normal();
    dup.push_row({{0, a}, {1, 2.0 * a}, {2, rng.normal()}}, 1);
  }
  dup.labels.assign(dup.n, 1);
  const auto forced = build_fusion_graph(dup, 0.5);
  REQUIRE(forced.size() >= 1);
  CHECK(forced.front() == Edge{0, 1});

  // independent features at threshold 0.999: at most one spurious edge
  const SampleSet iid = synth_binary(5000, 10, 0.5, 11);
  CHECK(build_fusion_graph(iid, 0.999).size() <= 1);

  // chain-correlated features: recover exactly the generating chain
  const SampleSet chain = synth_binary_chain(5000, 8, 0.65, 0.5, 13);
  const auto edges = build_fusion_graph(chain, 0.5);
  REQUIRE(edges.size() == 7);
  for (std::uint32_t j = 0; j + 1 < 8; ++j) CHECK(edges[j] == Edge{j, j + 1});

  CHECK_THROWS_AS((void)build_fusion_graph(iid, 1.5), std::invalid_argument);
}

TEST_CASE("build_graph_problem: identity reduction, spectra, feasibility witness") {
  auto samples = std::make_shared<SampleSet>(synth_binary(50, 3, 0.5, 17));

  // empty edges with mu = 1: constraint is the identity
  CompositeProblem ident = build_graph_problem(samples, {}, 1e-5, 1.0);
  const auto se = spectral_extremes(*ident.constraint);
  CHECK(se.sigma_min_sq == doctest::Approx(1.0));
  CHECK(se.sigma_max_sq == doctest::Approx(1.0));

  // path graph on 3 features plus identity augmentation
  std::vector<Edge> path{{0, 1}, {1, 2}};
  CompositeProblem p = build_graph_problem(samples, path, 1e-5, 1.0);
  const auto sp = spectral_extremes(*p.constraint);
  CHECK(sp.sigma_min_sq >= 1.0 - 1e-12);
  CHECK(p.residual_dim() == 2 + 3);

  // feasibility witness: y := A x gives a zero residual
  SeededRng rng(19);
  Vector x(3);
  rng.fill_normal(x);
  const Vector y = p.constraint->apply(x);
  Vector res = p.constraint->apply(x);
  p.blocks[0].op->apply_add(y, 1.0, res);
  CHECK(vec::norm_sq(res) == 0.0);

  // mu = 0 with a rank-deficient edge matrix names Assumption 4
  CHECK_THROWS_AS((void)build_graph_problem(samples, path, 1e-5, 0.0), HyperparamError);
}

TEST_CASE("build_multitask_problem: lifted spectra, feasibility, weight formula") {
  auto samples = std::make_shared<SampleSet>(synth_multiclass(60, 5, 3, 23));
  CompositeProblem p = build_multitask_problem(samples, 1e-5, 1e-4, 1.0, 1.0);
  const auto sa = spectral_extremes(*p.constraint);
  CHECK(sa.sigma_min_sq == doctest::Approx(2.0));
  CHECK(sa.sigma_max_sq == doctest::Approx(2.0));

  // kappa0 = 1 for alpha_ls = beta_ls = 1, so g1 weight is lambda1
  CHECK(p.blocks[0].reg.lambda() == doctest::Approx(1e-5));
  CHECK(p.blocks[1].reg.kind() == Regularizer::Kind::Nuclear);

  // X = Y1 = Y2 satisfies the constraint exactly
  SeededRng rng(29);
  Vector xv(p.x_dim());
  rng.fill_normal(xv);
  Vector res = p.constraint->apply(xv);
  p.blocks[0].op->apply_add(xv, 1.0, res);
  p.blocks[1].op->apply_add(xv, 1.0, res);
  CHECK(vec::norm_sq(res) == 0.0);

  auto binary = std::make_shared<SampleSet>(synth_binary(10, 4, 0.5, 31));
  CHECK_THROWS_AS((void)build_multitask_problem(binary, 1e-5, 1e-4, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("write_trace_csv: schema, empty trace, numeric round-trip") {
  const auto dir = temp_dir("csv");
  Trace empty;
  const std::string p0 = (dir / "empty.csv").string();
  write_trace_csv(empty, p0);
  const auto rows0 = read_csv(p0);
  REQUIRE(rows0.size() == 1);  // header only
  CHECK(rows0[0].size() == 9);
  CHECK(rows0[0][0] == "iter");
  CHECK(rows0[0][8] == "seconds");

  Trace t;
  TraceRecord r;
  r.iter = 0;
  r.epoch = 2;
  r.objective = 1.0 / 3.0;
  r.aug_lagrangian = -2.7182818284590451;
  r.residual = 1e-17;
  r.theta = 0.125;
  // stationarity left NaN -> empty field
  r.ifo = 1234567890123ull;
  r.seconds = 0.5;
  t.records.push_back(r);
  const std::string p1 = (dir / "one.csv").string();
  write_trace_csv(t, p1);
  const auto rows = read_csv(p1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].size() == 9);
  CHECK(rows[1][6] == "");  // missing optional column
  CHECK(std::stod(rows[1][2]) == r.objective);  // 17 significant digits
  CHECK(std::stod(rows[1][3]) == r.aug_lagrangian);
  CHECK(std::stod(rows[1][4]) == r.residual);
  CHECK(rows[1][7] == "1234567890123");
}

TEST_CASE("experiment: cardinality, summary, determinism modulo wall clock") {
  const auto dir = temp_dir("exp");
  ExperimentConfig cfg;
  cfg.problem_type = "graph";
  cfg.synth_n = 60;
  cfg.synth_d = 5;
  cfg.synth_seed = 37;
  cfg.out_dir = (dir / "runA").string();
  cfg.seeds = {1, 2, 3};
  SolverSpec det;
  det.kind = SolverKind::Deterministic;
  det.hp.K = 60;
  SolverSpec spider;
  spider.kind = SolverKind::Spider;
  spider.hp.K = 60;
  cfg.solvers = {det, spider};

  const ExperimentSummary summary = run_experiment(cfg);
  CHECK(summary.runs.size() == 6);
  // summary IFO totals agree with the closed-form cost models
  for (const RunOutcome& r : summary.runs) {
    REQUIRE(!r.diverged);
    if (r.kind == SolverKind::Deterministic)
      CHECK(r.ifo_total == ifo_total_deterministic(60, 60));
    else
      CHECK(r.ifo_total == ifo_total_spider(60, 60, 8, 8));  // ceil(sqrt(60)) = 8
  }
  CHECK(summary.median_final_stationarity.count("spider") == 1);
  std::size_t csvs = 0;
  for (const auto& entry : std::filesystem::directory_iterator(cfg.out_dir))
    if (entry.path().extension() == ".csv") ++csvs;
  CHECK(csvs == 6);
  CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / "summary.json"));
  CHECK(summary.baseline == "deterministic-median-final");
  CHECK(summary.median_ifo_to_target.count("deterministic") == 1);

  // re-run into a second directory: identical bytes once seconds is dropped
  ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = (dir / "runB").string();
  (void)run_experiment(cfg2);
  for (const auto& entry : std::filesystem::directory_iterator(cfg.out_dir)) {
    if (entry.path().extension() != ".csv") continue;
    const auto a = read_csv(entry.path().string());
    const auto b = read_csv((std::filesystem::path(cfg2.out_dir) / entry.path().filename()).string());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j + 1 < a[i].size(); ++j)  // all but seconds
        CHECK(a[i][j] == b[i][j]);
  }
}

TEST_CASE("config json parsing and hashing") {
  const std::string text = R"({
    "problem": {"type": "graph", "lambda": 1e-5, "mu": 1.0, "threshold": 0.5,
                 "synthetic": {"n": 80, "d": 6, "seed": 9}},
    "solvers": [{"kind": "spider", "iters": 50, "alpha": 1.0},
                 {"kind": "svrg", "iters": 50}],
    "seeds": [4, 5],
    "out": "somewhere",
    "target_tolerance": 1e-3
  })";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.problem_type == "graph");
  CHECK(cfg.synth_n == 80);
  CHECK(cfg.solvers.size() == 2);
  CHECK(cfg.solvers[1].kind == SolverKind::Svrg);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(cfg.out_dir == "somewhere");

  ExperimentConfig other = cfg;
  other.lambda = 2e-5;
  CHECK(config_hash(cfg) != config_hash(other));
  CHECK(config_hash(cfg) == config_hash(parse_config_text(text)));

  CHECK_THROWS_AS((void)parse_config_text(R"({"solvers": [], "seeds": [1]})"),
                  std::invalid_argument);
}
