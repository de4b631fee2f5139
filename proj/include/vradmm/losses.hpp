#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vradmm/rng.hpp"
#include "vradmm/vec.hpp"

namespace vradmm {

// Sparse sample matrix (CSR rows) with labels. Binary labels are -1/+1
// (num_classes == 0); multi-class labels are 1-based indices with
// num_classes >= 2.
struct SampleSet {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t num_classes = 0;
  std::vector<std::size_t> indptr;     // n + 1
  std::vector<std::uint32_t> indices;  // feature ids, 0-based
  std::vector<double> values;
  std::vector<int> labels;             // -1/+1 or 1..num_classes

  double dot_row(std::size_t i, std::span<const double> x) const;
  // out += coef * a_i
  void add_row(std::size_t i, double coef, Vector& out) const;
  double row_norm_sq(std::size_t i) const;
  void push_row(const std::vector<std::pair<std::uint32_t, double>>& entries, int label);
  void validate() const;
};

// Smooth finite-sum loss f(x) = (1/n) sum_i f_i(x). Minibatch value and
// gradient are means over the given index multiset.
class SmoothLoss {
 public:
  virtual ~SmoothLoss() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t num_samples() const = 0;
  virtual double lipschitz() const = 0;

  virtual double value(std::span<const double> x, std::span<const std::uint32_t> idx) const = 0;
  virtual void grad(std::span<const double> x, std::span<const std::uint32_t> idx, Vector& out) const = 0;
  // out += coef * grad f_i(x)
  virtual void add_sample_grad(std::uint32_t i, std::span<const double> x, double coef,
                               Vector& out) const = 0;

  double full_value(std::span<const double> x) const;
  void full_grad(std::span<const double> x, Vector& out) const;
  Vector full_grad(std::span<const double> x) const;
  void sample_grad(std::uint32_t i, std::span<const double> x, Vector& out) const;
};

// f_i(x) = 1 / (1 + exp(b_i a_i^T x)), the bounded nonconvex sigmoid loss.
class SigmoidLoss final : public SmoothLoss {
 public:
  explicit SigmoidLoss(std::shared_ptr<const SampleSet> samples);

  std::size_t dim() const override { return samples_->d; }
  std::size_t num_samples() const override { return samples_->n; }
  double lipschitz() const override { return lipschitz_; }
  void set_lipschitz(double value) { lipschitz_ = value; }

  double value(std::span<const double> x, std::span<const std::uint32_t> idx) const override;
  void grad(std::span<const double> x, std::span<const std::uint32_t> idx, Vector& out) const override;
  void add_sample_grad(std::uint32_t i, std::span<const double> x, double coef,
                       Vector& out) const override;

  const SampleSet& samples() const { return *samples_; }

 private:
  std::shared_ptr<const SampleSet> samples_;
  double lipschitz_;
};

// Multinomial logistic loss over a row-major c x d weight matrix plus the
// smooth residual of a log-sum sparsity penalty: each per-sample term is
//   f_i(X) = logsumexp_j(X_j . a_i) - X_{b_i} . a_i
//            + l1 * sum_uv (kappa(|X_uv|) - kappa0 |X_uv|)
// with kappa(t) = beta_ls log(1 + t/alpha_ls) and kappa0 = beta_ls/alpha_ls,
// so the correction is C^1 with zero gradient at the origin.
class MultitaskLoss final : public SmoothLoss {
 public:
  MultitaskLoss(std::shared_ptr<const SampleSet> samples, double l1, double alpha_ls, double beta_ls);

  std::size_t dim() const override { return classes_ * samples_->d; }
  std::size_t num_samples() const override { return samples_->n; }
  double lipschitz() const override { return lipschitz_; }
  void set_lipschitz(double value) { lipschitz_ = value; }
  std::size_t classes() const { return classes_; }
  double kappa0() const { return beta_ls_ / alpha_ls_; }

  double value(std::span<const double> x, std::span<const std::uint32_t> idx) const override;
  void grad(std::span<const double> x, std::span<const std::uint32_t> idx, Vector& out) const override;
  void add_sample_grad(std::uint32_t i, std::span<const double> x, double coef,
                       Vector& out) const override;

 private:
  double correction_value(std::span<const double> x) const;
  void add_correction_grad(std::span<const double> x, double coef, Vector& out) const;

  std::shared_ptr<const SampleSet> samples_;
  std::size_t classes_;
  double l1_, alpha_ls_, beta_ls_;
  double lipschitz_;
};

// f_i(x) = 0.5 ||x - t_i||^2 with per-sample targets; L = 1 exactly.
class QuadraticLoss final : public SmoothLoss {
 public:
  QuadraticLoss(std::size_t dim, std::vector<Vector> targets);
  static QuadraticLoss random(std::size_t n, std::size_t dim, SeededRng& rng);

  std::size_t dim() const override { return dim_; }
  std::size_t num_samples() const override { return targets_.size(); }
  double lipschitz() const override { return 1.0; }

  double value(std::span<const double> x, std::span<const std::uint32_t> idx) const override;
  void grad(std::span<const double> x, std::span<const std::uint32_t> idx, Vector& out) const override;
  void add_sample_grad(std::uint32_t i, std::span<const double> x, double coef,
                       Vector& out) const override;

  Vector mean_target() const;

 private:
  std::size_t dim_;
  std::vector<Vector> targets_;
};

// Source of i.i.d. samples for the online setting. A drawn batch is a
// SampleSet; value/gradient semantics belong to the stream.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  virtual std::size_t dim() const = 0;
  virtual double lipschitz() const = 0;
  virtual void draw(SeededRng& rng, std::size_t count, SampleSet& out) const = 0;
  virtual double batch_value(const SampleSet& batch, std::span<const double> x) const = 0;
  virtual void batch_grad(const SampleSet& batch, std::span<const double> x, Vector& out) const = 0;
  virtual std::string description() const = 0;
};

// Sigmoid-loss stream over synthetic Gaussian features with a planted
// separator: a ~ N(0, I)/sqrt(d), b = sign(a^T x_true + noise * xi).
class GaussianSigmoidStream final : public SampleStream {
 public:
  GaussianSigmoidStream(Vector x_true, double noise);

  std::size_t dim() const override { return x_true_.size(); }
  double lipschitz() const override;
  void draw(SeededRng& rng, std::size_t count, SampleSet& out) const override;
  double batch_value(const SampleSet& batch, std::span<const double> x) const override;
  void batch_grad(const SampleSet& batch, std::span<const double> x, Vector& out) const override;
  std::string description() const override { return "synthetic-gaussian-sigmoid"; }

 private:
  Vector x_true_;
  double noise_;
};

// f(x; zeta) = 0.5 ||x - zeta||^2 with zeta ~ N(mu, I). The refresh-batch
// mean squared error has the closed form dim / b1, which makes this the
// measurement stream for estimator variance checks.
class GaussianQuadraticStream final : public SampleStream {
 public:
  explicit GaussianQuadraticStream(Vector mu) : mu_(std::move(mu)) {}

  std::size_t dim() const override { return mu_.size(); }
  double lipschitz() const override { return 1.0; }
  void draw(SeededRng& rng, std::size_t count, SampleSet& out) const override;
  double batch_value(const SampleSet& batch, std::span<const double> x) const override;
  void batch_grad(const SampleSet& batch, std::span<const double> x, Vector& out) const override;
  std::string description() const override { return "synthetic-gaussian-quadratic"; }

 private:
  Vector mu_;
};

// With-replacement resampling of a finite dataset under the sigmoid loss.
class ResampleSigmoidStream final : public SampleStream {
 public:
  explicit ResampleSigmoidStream(std::shared_ptr<const SampleSet> samples);

  std::size_t dim() const override { return samples_->d; }
  double lipschitz() const override { return lipschitz_; }
  void draw(SeededRng& rng, std::size_t count, SampleSet& out) const override;
  double batch_value(const SampleSet& batch, std::span<const double> x) const override;
  void batch_grad(const SampleSet& batch, std::span<const double> x, Vector& out) const override;
  std::string description() const override { return "finite-resample-sigmoid"; }

 private:
  std::shared_ptr<const SampleSet> samples_;
  double lipschitz_;
};

// Shared scalar kernels.
double logistic(double t);                       // 1 / (1 + exp(-t))
double sigmoid_loss_term(double t);              // 1 / (1 + exp(t))
double sigmoid_loss_slope(double t);             // -exp(t) / (1 + exp(t))^2
double sigmoid_lipschitz_bound(const SampleSet& samples);  // 0.1 * max_i ||a_i||^2

}  // namespace vradmm
