#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vradmm/linop.hpp"
#include "vradmm/losses.hpp"
#include "vradmm/regularizers.hpp"

namespace vradmm {

enum class SolverKind { Deterministic, Spider, SpiderOnline, Svrg, Saga, Sgd };

std::string solver_name(SolverKind kind);
SolverKind solver_from_name(const std::string& name);

// min f(x) + sum_j g_j(y_j)  s.t.  A x + sum_j B_j y_j = c
struct ProblemBlock {
  LinOpPtr op;      // B_j, l x p_j
  Regularizer reg;  // g_j
};

struct CompositeProblem {
  std::shared_ptr<const SmoothLoss> loss;      // finite-sum objective
  std::shared_ptr<const SampleStream> stream;  // online objective (optional)
  LinOpPtr constraint;                         // A, l x d
  std::vector<ProblemBlock> blocks;            // j = 1..m
  Vector offset;                               // c, length l
  std::string name;

  std::size_t x_dim() const { return constraint->cols(); }
  std::size_t residual_dim() const { return constraint->rows(); }
  std::size_t num_blocks() const { return blocks.size(); }
  bool has_finite_sum() const { return loss != nullptr; }

  // Dimension consistency, m >= 1, nonzero block operators.
  void validate() const;
};

// User knobs; zero counts are resolved to the prescription defaults
// (b = q = ceil(sqrt(n)) for the recursive estimator, b = ceil(n^{2/3})
// and M = ceil(n^{1/3}) for the snapshot/table estimators).
struct HyperParams {
  double alpha = 1.0;  // in (0, 1]
  std::size_t b = 0;
  std::size_t q = 0;
  std::size_t K = 0;
  std::size_t b1 = 0;  // online refresh batch
  std::size_t b2 = 0;  // online recursion batch, sqrt(b1)
  std::size_t M = 0;   // inner iterations per epoch
  std::size_t S = 0;   // epochs; 0 means ceil(K / M)
  std::optional<double> rho_override;
  std::optional<double> eta_override;
  std::optional<double> sigmaA_min_override;
  std::optional<double> sigmaA_max_override;
  std::uint64_t seed = 0;
  bool theory_rho = false;  // fixed-point iteration on the rho <-> kappa_G cycle

  void validate() const;
};

HyperParams resolve_defaults(HyperParams hp, SolverKind kind, std::size_t n);

// Spectral constants and the prescribed step sizes.
struct DerivedSpectra {
  double lipschitz = 0.0;
  double sigmaA_min = 0.0, sigmaA_max = 0.0;
  std::vector<double> sigmaB_min, sigmaB_max;  // eigen-extremes of B_j^T B_j
  double sigmaB_max_all = 0.0;
  double rho = 0.0, eta = 0.0;
  double r = 0.0;
  std::vector<double> r_blocks;
  double sigma_minG = 0.0, sigma_maxG = 0.0;
  double kappa_G = 1.0, kappa_A = 1.0;
  double sigma_minH = 0.0, sigma_maxH = 0.0;
  double nu1 = 0.0, nu2 = 0.0, nu3 = 0.0, nu_max = 0.0;
  std::optional<double> delta_estimate;
};

// Bootstrap scheme for the circular rho <-> kappa_G prescription: evaluate
// the rate-constant formula at kappa_G = 1 and sigma_min(G) = 1, take r and
// r_j at their minimal admissible values, then report the realized kappa_G.
// With theory_rho set, iterate rho -> formula(kappa_G(rho)) up to 20 times
// instead (declared non-convergent otherwise).
DerivedSpectra derive_hyperparams(const CompositeProblem& problem, const HyperParams& hp,
                                  SolverKind kind);

}  // namespace vradmm
