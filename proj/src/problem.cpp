#include "vradmm/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vradmm/errors.hpp"
#include "vradmm/rng.hpp"

namespace vradmm {

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::Deterministic: return "deterministic";
    case SolverKind::Spider: return "spider";
    case SolverKind::SpiderOnline: return "spider-online";
    case SolverKind::Svrg: return "svrg";
    case SolverKind::Saga: return "saga";
    case SolverKind::Sgd: return "sgd";
  }
  return "?";
}

SolverKind solver_from_name(const std::string& name) {
  if (name == "deterministic" || name == "det") return SolverKind::Deterministic;
  if (name == "spider") return SolverKind::Spider;
  if (name == "spider-online" || name == "online") return SolverKind::SpiderOnline;
  if (name == "svrg") return SolverKind::Svrg;
  if (name == "saga") return SolverKind::Saga;
  if (name == "sgd") return SolverKind::Sgd;
  throw std::invalid_argument("unknown solver kind: " + name);
}

void CompositeProblem::validate() const {
  if (!constraint) throw std::invalid_argument("CompositeProblem: missing constraint operator");
  if (!loss && !stream) throw std::invalid_argument("CompositeProblem: missing loss");
  if (blocks.empty()) throw std::invalid_argument("CompositeProblem: need m >= 1 blocks");
  const std::size_t l = constraint->rows();
  if (offset.size() != l) throw std::invalid_argument("CompositeProblem: offset length != constraint rows");
  const std::size_t d = constraint->cols();
  if (loss && loss->dim() != d)
    throw std::invalid_argument("CompositeProblem: loss dimension != constraint columns");
  if (stream && stream->dim() != d)
    throw std::invalid_argument("CompositeProblem: stream dimension != constraint columns");
  SeededRng probe_rng(0xb10c5);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& block = blocks[j];
    if (!block.op) throw std::invalid_argument("CompositeProblem: missing block operator");
    if (block.op->rows() != l)
      throw std::invalid_argument("CompositeProblem: block row count != constraint rows");
    bool nonzero = false;
    for (int probe = 0; probe < 3 && !nonzero; ++probe) {
      Vector v(block.op->cols());
      probe_rng.fill_normal(v);
      nonzero = vec::norm_sq(block.op->apply(v)) > 0.0;
    }
    if (!nonzero)
      throw std::invalid_argument("CompositeProblem: block " + std::to_string(j) +
                                  " operator is zero; every B_j must be nonzero");
  }
}

void HyperParams::validate() const {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw HyperparamError("HyperParams: alpha must lie in (0, 1]");
  if (rho_override && *rho_override <= 0.0)
    throw HyperparamError("HyperParams: rho override must be positive");
  if (eta_override && *eta_override <= 0.0)
    throw HyperparamError("HyperParams: eta override must be positive");
}

HyperParams resolve_defaults(HyperParams hp, SolverKind kind, std::size_t n) {
  hp.validate();
  if (hp.K == 0) hp.K = 100;
  const auto ceil_pow = [](std::size_t n_, double e) {
    return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n_), e)));
  };
  switch (kind) {
    case SolverKind::Spider:
      if (hp.b == 0) hp.b = n > 0 ? ceil_pow(n, 0.5) : 1;
      if (hp.q == 0) hp.q = hp.b;  // b = q per the prescription
      break;
    case SolverKind::SpiderOnline: {
      if (hp.b1 == 0) hp.b1 = 64;
      const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(hp.b1))));
      if (hp.b2 == 0) hp.b2 = std::max<std::size_t>(1, root);
      if (hp.b2 != root || root * root != hp.b1) {
        // b2 = round(sqrt(b1)) is enforced; a non-square b1 only costs the
        // exactness of the pairing, so it is allowed but normalized here.
        hp.b2 = std::max<std::size_t>(1, root);
      }
      if (hp.q == 0) hp.q = hp.b2;
      break;
    }
    case SolverKind::Svrg:
      if (hp.b == 0) hp.b = n > 0 ? ceil_pow(n, 2.0 / 3.0) : 1;
      if (hp.M == 0) hp.M = n > 0 ? ceil_pow(n, 1.0 / 3.0) : 1;
      if (hp.S == 0) hp.S = (hp.K + hp.M - 1) / hp.M;
      break;
    case SolverKind::Saga:
      if (hp.b == 0) hp.b = n > 0 ? ceil_pow(n, 2.0 / 3.0) : 1;
      break;
    case SolverKind::Sgd:
      if (hp.b == 0) hp.b = n > 0 ? ceil_pow(n, 0.5) : 1;
      break;
    case SolverKind::Deterministic:
      break;
  }
  if (hp.b == 0) hp.b = 1;
  if (hp.q == 0) hp.q = 1;
  if (hp.M == 0) hp.M = 1;
  if (hp.S == 0) hp.S = (hp.K + hp.M - 1) / hp.M;
  return hp;
}

namespace {

struct StepPrescription {
  double rho_coef;  // rho = rho_coef * kappa_G * L / (sigmaA_min * alpha)
  double eta_coef;  // eta = eta_coef * alpha * sigma_min(G) / L
};

StepPrescription step_prescription(SolverKind kind) {
  switch (kind) {
    case SolverKind::Svrg:
      return {2.0 * std::sqrt(231.0), 1.0 / 5.0};
    case SolverKind::Saga:
      return {2.0 * std::sqrt(2031.0), 1.0 / 17.0};
    case SolverKind::Deterministic:
    case SolverKind::Spider:
    case SolverKind::SpiderOnline:
    case SolverKind::Sgd:
      return {std::sqrt(170.0), 2.0 / 3.0};
  }
  return {std::sqrt(170.0), 2.0 / 3.0};
}

}  // namespace

DerivedSpectra derive_hyperparams(const CompositeProblem& problem, const HyperParams& hp,
                                  SolverKind kind) {
  problem.validate();
  hp.validate();

  DerivedSpectra out;
  if (kind == SolverKind::SpiderOnline) {
    if (!problem.stream) throw HyperparamError("online solver requires a sample stream");
    out.lipschitz = problem.stream->lipschitz();
  } else {
    if (!problem.loss) throw HyperparamError("finite-sum solver requires a finite-sum loss");
    out.lipschitz = problem.loss->lipschitz();
  }
  if (!(out.lipschitz > 0.0)) throw HyperparamError("loss smoothness estimate must be positive");

  if (hp.sigmaA_min_override && hp.sigmaA_max_override) {
    out.sigmaA_min = *hp.sigmaA_min_override;
    out.sigmaA_max = *hp.sigmaA_max_override;
  } else {
    const SpectralExtremes sa = spectral_extremes(*problem.constraint);
    out.sigmaA_min = hp.sigmaA_min_override.value_or(sa.sigma_min_sq);
    out.sigmaA_max = hp.sigmaA_max_override.value_or(sa.sigma_max_sq);
  }
  for (const auto& block : problem.blocks) {
    const SpectralExtremes sb = spectral_extremes(*block.op);
    out.sigmaB_min.push_back(sb.sigma_min_sq);
    out.sigmaB_max.push_back(sb.sigma_max_sq);
    out.sigmaB_max_all = std::max(out.sigmaB_max_all, sb.sigma_max_sq);
  }

  const double L = out.lipschitz;
  if (out.sigmaA_min <= 0.0 && !hp.rho_override)
    throw HyperparamError(
        "sigma_min(A^T A) == 0: Assumption 4 (full column rank A) is violated, so the "
        "penalty prescription is undefined; supply a rho override or augment A");

  const StepPrescription tc = step_prescription(kind);
  out.eta = hp.eta_override.value_or(tc.eta_coef * hp.alpha / L);  // sigma_min(G) := 1
  if (kind == SolverKind::Sgd && !hp.eta_override) out.eta *= 0.1;

  if (hp.rho_override) {
    out.rho = *hp.rho_override;
  } else {
    out.rho = tc.rho_coef * L / (out.sigmaA_min * hp.alpha);  // kappa_G := 1
    if (hp.theory_rho) {
      const auto kappa_of = [&](double rho) {
        const double r = rho * out.eta * out.sigmaA_max + 1.0;
        return (r - rho * out.eta * out.sigmaA_min) / (r - rho * out.eta * out.sigmaA_max);
      };
      bool converged = false;
      for (int it = 0; it < 20; ++it) {
        const double next = tc.rho_coef * kappa_of(out.rho) * L / (out.sigmaA_min * hp.alpha);
        if (std::abs(next - out.rho) <= 1e-10 * std::max(1.0, std::abs(out.rho))) {
          out.rho = next;
          converged = true;
          break;
        }
        out.rho = next;
      }
      if (!converged)
        throw HyperparamError(
            "theory-rho fixed point did not converge in 20 iterations; the rho <-> kappa_G "
            "map diverges for this spectrum (it contracts only when "
            "rho_coef * eta * (sigmaA_max - sigmaA_min) / sigmaA_min < 1)");
    }
  }

  out.r = out.rho * out.eta * out.sigmaA_max + 1.0;  // minimal admissible
  out.sigma_minG = out.r - out.rho * out.eta * out.sigmaA_max;
  out.sigma_maxG = out.r - out.rho * out.eta * out.sigmaA_min;
  out.kappa_G = out.sigma_maxG / out.sigma_minG;
  out.kappa_A = out.sigmaA_min > 0.0 ? out.sigmaA_max / out.sigmaA_min
                                     : std::numeric_limits<double>::infinity();

  out.sigma_minH = std::numeric_limits<double>::infinity();
  out.sigma_maxH = 0.0;
  for (std::size_t j = 0; j < problem.blocks.size(); ++j) {
    const double rj = out.rho * out.sigmaB_max[j] + 1.0;  // minimal admissible
    out.r_blocks.push_back(rj);
    out.sigma_minH = std::min(out.sigma_minH, rj - out.rho * out.sigmaB_max[j]);
    out.sigma_maxH = std::max(out.sigma_maxH, rj - out.rho * out.sigmaB_min[j]);
  }

  const double m = static_cast<double>(problem.blocks.size());
  const double rho2 = out.rho * out.rho;
  const double g_over_eta_sq = (out.sigma_maxG / out.eta) * (out.sigma_maxG / out.eta);
  out.nu1 = m * (rho2 * out.sigmaB_max_all * out.sigmaA_max + rho2 * out.sigmaB_max_all * out.sigmaB_max_all +
                 out.sigma_maxH * out.sigma_maxH);
  out.nu2 = 3.0 * (L * L + g_over_eta_sq);
  const double sA = std::max(out.sigmaA_min, 1e-300);
  const bool snapshot_family = (kind == SolverKind::Svrg || kind == SolverKind::Saga);
  out.nu3 = (snapshot_family ? 9.0 : 18.0) * L * L / (sA * rho2) + 3.0 * g_over_eta_sq / (sA * rho2);
  out.nu_max = std::max({out.nu1, out.nu2, out.nu3});
  return out;
}

}  // namespace vradmm
