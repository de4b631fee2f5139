#include "vradmm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vradmm {

double SampleSet::dot_row(std::size_t i, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t k = indptr[i]; k < indptr[i + 1]; ++k) s += values[k] * x[indices[k]];
  return s;
}

void SampleSet::add_row(std::size_t i, double coef, Vector& out) const {
  for (std::size_t k = indptr[i]; k < indptr[i + 1]; ++k) out[indices[k]] += coef * values[k];
}

double SampleSet::row_norm_sq(std::size_t i) const {
  double s = 0.0;
  for (std::size_t k = indptr[i]; k < indptr[i + 1]; ++k) s += values[k] * values[k];
  return s;
}

void SampleSet::push_row(const std::vector<std::pair<std::uint32_t, double>>& entries, int label) {
  if (indptr.empty()) indptr.push_back(0);
  for (const auto& [j, v] : entries) {
    indices.push_back(j);
    values.push_back(v);
    d = std::max<std::size_t>(d, j + 1);
  }
  indptr.push_back(indices.size());
  labels.push_back(label);
  ++n;
}

void SampleSet::validate() const {
  if (n == 0) throw std::invalid_argument("SampleSet: empty (need n >= 1)");
  if (indptr.size() != n + 1 || labels.size() != n)
    throw std::invalid_argument("SampleSet: inconsistent arrays");
  for (std::uint32_t j : indices)
    if (j >= d) throw std::invalid_argument("SampleSet: feature index out of range");
  if (num_classes == 0) {
    for (int b : labels)
      if (b != -1 && b != 1) throw std::invalid_argument("SampleSet: binary labels must be -1/+1");
  } else {
    for (int b : labels)
      if (b < 1 || static_cast<std::size_t>(b) > num_classes)
        throw std::invalid_argument("SampleSet: class label out of range");
  }
}

double SmoothLoss::full_value(std::span<const double> x) const {
  std::vector<std::uint32_t> all(num_samples());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
  return value(x, all);
}

void SmoothLoss::full_grad(std::span<const double> x, Vector& out) const {
  out.assign(dim(), 0.0);
  const double w = 1.0 / static_cast<double>(num_samples());
  for (std::size_t i = 0; i < num_samples(); ++i)
    add_sample_grad(static_cast<std::uint32_t>(i), x, w, out);
}

Vector SmoothLoss::full_grad(std::span<const double> x) const {
  Vector out;
  full_grad(x, out);
  return out;
}

void SmoothLoss::sample_grad(std::uint32_t i, std::span<const double> x, Vector& out) const {
  out.assign(dim(), 0.0);
  add_sample_grad(i, x, 1.0, out);
}

double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double sigmoid_loss_term(double t) { return logistic(-t); }

double sigmoid_loss_slope(double t) { return -logistic(t) * logistic(-t); }

double sigmoid_lipschitz_bound(const SampleSet& samples) {
  // sup |d^2/dt^2 [1/(1+e^t)]| = 1/(6 sqrt(3)) < 0.1
  double max_sq = 0.0;
  for (std::size_t i = 0; i < samples.n; ++i) max_sq = std::max(max_sq, samples.row_norm_sq(i));
  return 0.1 * max_sq;
}

SigmoidLoss::SigmoidLoss(std::shared_ptr<const SampleSet> samples) : samples_(std::move(samples)) {
  samples_->validate();
  if (samples_->num_classes != 0)
    throw std::invalid_argument("SigmoidLoss: needs binary -1/+1 labels");
  lipschitz_ = sigmoid_lipschitz_bound(*samples_);
}

double SigmoidLoss::value(std::span<const double> x, std::span<const std::uint32_t> idx) const {
  if (x.size() != dim()) throw std::invalid_argument("SigmoidLoss::value: dimension mismatch");
  if (idx.empty()) throw std::invalid_argument("SigmoidLoss::value: empty index set");
  double s = 0.0;
  for (std::uint32_t i : idx) s += sigmoid_loss_term(samples_->labels[i] * samples_->dot_row(i, x));
  return s / static_cast<double>(idx.size());
}

void SigmoidLoss::grad(std::span<const double> x, std::span<const std::uint32_t> idx, Vector& out) const {
  if (x.size() != dim()) throw std::invalid_argument("SigmoidLoss::grad: dimension mismatch");
  if (idx.empty()) throw std::invalid_argument("SigmoidLoss::grad: empty index set");
  out.assign(dim(), 0.0);
  const double w = 1.0 / static_cast<double>(idx.size());
  for (std::uint32_t i : idx) add_sample_grad(i, x, w, out);
}

void SigmoidLoss::add_sample_grad(std::uint32_t i, std::span<const double> x, double coef,
                                  Vector& out) const {
  const double b = samples_->labels[i];
  const double t = b * samples_->dot_row(i, x);
  samples_->add_row(i, coef * b * sigmoid_loss_slope(t), out);
}

MultitaskLoss::MultitaskLoss(std::shared_ptr<const SampleSet> samples, double l1, double alpha_ls,
                             double beta_ls)
    : samples_(std::move(samples)), l1_(l1), alpha_ls_(alpha_ls), beta_ls_(beta_ls) {
  samples_->validate();
  if (samples_->num_classes < 2)
    throw std::invalid_argument("MultitaskLoss: needs class labels in 1..c with c >= 2");
  if (l1 < 0.0 || alpha_ls <= 0.0 || beta_ls <= 0.0)
    throw std::invalid_argument("MultitaskLoss: need l1 >= 0, alpha_ls > 0, beta_ls > 0");
  classes_ = samples_->num_classes;
  double max_sq = 0.0;
  for (std::size_t i = 0; i < samples_->n; ++i) max_sq = std::max(max_sq, samples_->row_norm_sq(i));
  lipschitz_ = 0.5 * max_sq + l1_ * beta_ls_ / (alpha_ls_ * alpha_ls_);
}

double MultitaskLoss::correction_value(std::span<const double> x) const {
  if (l1_ == 0.0) return 0.0;
  const double kappa0 = beta_ls_ / alpha_ls_;
  double s = 0.0;
  for (double t : x) {
    const double a = std::abs(t);
    s += beta_ls_ * std::log1p(a / alpha_ls_) - kappa0 * a;
  }
  return l1_ * s;
}

void MultitaskLoss::add_correction_grad(std::span<const double> x, double coef, Vector& out) const {
  if (l1_ == 0.0) return;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = std::abs(x[k]);
    if (a == 0.0) continue;  // kappa'(0+) - kappa0 == 0
    const double sgn = x[k] > 0.0 ? 1.0 : -1.0;
    out[k] += coef * l1_ * sgn * beta_ls_ * (1.0 / (alpha_ls_ + a) - 1.0 / alpha_ls_);
  }
}

double MultitaskLoss::value(std::span<const double> x, std::span<const std::uint32_t> idx) const {
  if (x.size() != dim()) throw std::invalid_argument("MultitaskLoss::value: dimension mismatch");
  if (idx.empty()) throw std::invalid_argument("MultitaskLoss::value: empty index set");
  const std::size_t d = samples_->d;
  double s = 0.0;
  std::vector<double> scores(classes_);
  for (std::uint32_t i : idx) {
    for (std::size_t j = 0; j < classes_; ++j)
      scores[j] = samples_->dot_row(i, x.subspan(j * d, d));
    const double mx = *std::max_element(scores.begin(), scores.end());
    double lse = 0.0;
    for (double sc : scores) lse += std::exp(sc - mx);
    lse = mx + std::log(lse);
    s += lse - scores[samples_->labels[i] - 1];
  }
  return s / static_cast<double>(idx.size()) + correction_value(x);
}

void MultitaskLoss::grad(std::span<const double> x, std::span<const std::uint32_t> idx,
                         Vector& out) const {
  if (x.size() != dim()) throw std::invalid_argument("MultitaskLoss::grad: dimension mismatch");
  if (idx.empty()) throw std::invalid_argument("MultitaskLoss::grad: empty index set");
  out.assign(dim(), 0.0);
  const double w = 1.0 / static_cast<double>(idx.size());
  for (std::uint32_t i : idx) add_sample_grad(i, x, w, out);
}

void MultitaskLoss::add_sample_grad(std::uint32_t i, std::span<const double> x, double coef,
                                    Vector& out) const {
  const std::size_t d = samples_->d;
  std::vector<double> scores(classes_);
  for (std::size_t j = 0; j < classes_; ++j) scores[j] = samples_->dot_row(i, x.subspan(j * d, d));
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double sc : scores) z += std::exp(sc - mx);
  const int label = samples_->labels[i] - 1;
  for (std::size_t j = 0; j < classes_; ++j) {
    const double p = std::exp(scores[j] - mx) / z;
    const double g = p - (static_cast<int>(j) == label ? 1.0 : 0.0);
    Vector row_out(d, 0.0);
    samples_->add_row(i, coef * g, row_out);
    for (std::size_t k = 0; k < d; ++k) out[j * d + k] += row_out[k];
  }
  add_correction_grad(x, coef, out);
}

QuadraticLoss::QuadraticLoss(std::size_t dim, std::vector<Vector> targets)
    : dim_(dim), targets_(std::move(targets)) {
  if (targets_.empty()) throw std::invalid_argument("QuadraticLoss: need n >= 1 targets");
  for (const auto& t : targets_)
    if (t.size() != dim_) throw std::invalid_argument("QuadraticLoss: target dimension mismatch");
}

QuadraticLoss QuadraticLoss::random(std::size_t n, std::size_t dim, SeededRng& rng) {
  std::vector<Vector> targets(n, Vector(dim));
  for (auto& t : targets) rng.fill_normal(t);
  return QuadraticLoss(dim, std::move(targets));
}

double QuadraticLoss::value(std::span<const double> x, std::span<const std::uint32_t> idx) const {
  if (x.size() != dim_) throw std::invalid_argument("QuadraticLoss::value: dimension mismatch");
  if (idx.empty()) throw std::invalid_argument("QuadraticLoss::value: empty index set");
  double s = 0.0;
  for (std::uint32_t i : idx) s += 0.5 * vec::dist_sq(x, targets_[i]);
  return s / static_cast<double>(idx.size());
}

void QuadraticLoss::grad(std::span<const double> x, std::span<const std::uint32_t> idx,
                         Vector& out) const {
  if (idx.empty()) throw std::invalid_argument("QuadraticLoss::grad: empty index set");
  out.assign(dim_, 0.0);
  const double w = 1.0 / static_cast<double>(idx.size());
  for (std::uint32_t i : idx) add_sample_grad(i, x, w, out);
}

void QuadraticLoss::add_sample_grad(std::uint32_t i, std::span<const double> x, double coef,
                                    Vector& out) const {
  const Vector& t = targets_[i];
  for (std::size_t k = 0; k < dim_; ++k) out[k] += coef * (x[k] - t[k]);
}

Vector QuadraticLoss::mean_target() const {
  Vector m(dim_, 0.0);
  for (const auto& t : targets_) vec::axpy(1.0 / static_cast<double>(targets_.size()), t, m);
  return m;
}

GaussianSigmoidStream::GaussianSigmoidStream(Vector x_true, double noise)
    : x_true_(std::move(x_true)), noise_(noise) {
  if (x_true_.empty()) throw std::invalid_argument("GaussianSigmoidStream: empty separator");
}

double GaussianSigmoidStream::lipschitz() const {
  // Feature rows are scaled to roughly unit norm; a modest cap keeps the
  // bound valid for the tail of the Gaussian draw.
  return 0.1 * 4.0;
}

void GaussianSigmoidStream::draw(SeededRng& rng, std::size_t count, SampleSet& out) const {
  const std::size_t d = x_true_.size();
  out = SampleSet{};
  out.d = d;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<std::pair<std::uint32_t, double>> row(d);
  for (std::size_t i = 0; i < count; ++i) {
    double t = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = rng.normal() * scale;
      row[j] = {static_cast<std::uint32_t>(j), a};
      t += a * x_true_[j];
    }
    const int b = (t + noise_ * rng.normal()) >= 0.0 ? 1 : -1;
    out.push_row(row, b);
  }
  out.d = d;
}

double GaussianSigmoidStream::batch_value(const SampleSet& batch, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i)
    s += sigmoid_loss_term(batch.labels[i] * batch.dot_row(i, x));
  return s / static_cast<double>(batch.n);
}

void GaussianSigmoidStream::batch_grad(const SampleSet& batch, std::span<const double> x,
                                       Vector& out) const {
  out.assign(dim(), 0.0);
  const double w = 1.0 / static_cast<double>(batch.n);
  for (std::size_t i = 0; i < batch.n; ++i) {
    const double b = batch.labels[i];
    const double t = b * batch.dot_row(i, x);
    batch.add_row(i, w * b * sigmoid_loss_slope(t), out);
  }
}

void GaussianQuadraticStream::draw(SeededRng& rng, std::size_t count, SampleSet& out) const {
  const std::size_t d = mu_.size();
  out = SampleSet{};
  out.d = d;
  std::vector<std::pair<std::uint32_t, double>> row(d);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      row[j] = {static_cast<std::uint32_t>(j), mu_[j] + rng.normal()};
    out.push_row(row, 1);
  }
  out.d = d;
}

double GaussianQuadraticStream::batch_value(const SampleSet& batch, std::span<const double> x) const {
  double s = 0.0;
  Vector zeta(dim());
  for (std::size_t i = 0; i < batch.n; ++i) {
    std::fill(zeta.begin(), zeta.end(), 0.0);
    batch.add_row(i, 1.0, zeta);
    s += 0.5 * vec::dist_sq(x, zeta);
  }
  return s / static_cast<double>(batch.n);
}

void GaussianQuadraticStream::batch_grad(const SampleSet& batch, std::span<const double> x,
                                         Vector& out) const {
  out.assign(dim(), 0.0);
  const double w = 1.0 / static_cast<double>(batch.n);
  for (std::size_t i = 0; i < batch.n; ++i) {
    for (std::size_t k = 0; k < dim(); ++k) out[k] += w * x[k];
    batch.add_row(i, -w, out);
  }
}

ResampleSigmoidStream::ResampleSigmoidStream(std::shared_ptr<const SampleSet> samples)
    : samples_(std::move(samples)) {
  samples_->validate();
  if (samples_->num_classes != 0)
    throw std::invalid_argument("ResampleSigmoidStream: needs binary -1/+1 labels");
  lipschitz_ = sigmoid_lipschitz_bound(*samples_);
}

void ResampleSigmoidStream::draw(SeededRng& rng, std::size_t count, SampleSet& out) const {
  out = SampleSet{};
  out.d = samples_->d;
  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = rng.uniform_index(samples_->n);
    row.clear();
    for (std::size_t k = samples_->indptr[src]; k < samples_->indptr[src + 1]; ++k)
      row.emplace_back(samples_->indices[k], samples_->values[k]);
    out.push_row(row, samples_->labels[src]);
  }
  out.d = samples_->d;
}

double ResampleSigmoidStream::batch_value(const SampleSet& batch, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < batch.n; ++i)
    s += sigmoid_loss_term(batch.labels[i] * batch.dot_row(i, x));
  return s / static_cast<double>(batch.n);
}

void ResampleSigmoidStream::batch_grad(const SampleSet& batch, std::span<const double> x,
                                       Vector& out) const {
  out.assign(dim(), 0.0);
  const double w = 1.0 / static_cast<double>(batch.n);
  for (std::size_t i = 0; i < batch.n; ++i) {
    const double b = batch.labels[i];
    const double t = b * batch.dot_row(i, x);
    batch.add_row(i, w * b * sigmoid_loss_slope(t), out);
  }
}

}  // namespace vradmm
