#include "qnewton/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qnewton/error.hpp"

namespace qnewton {

namespace {

std::size_t block_size(std::size_t in, std::size_t out) { return in * out + out; }

void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw InvalidArgument("MlpModel: need at least input and output sizes");
  for (std::size_t s : sizes)
    if (s == 0) throw InvalidArgument("MlpModel: layer sizes must be positive");
}

// log-sum-exp of the logits minus the true-class logit.
double cross_entropy(std::span<const double> z, int label) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return zmax + std::log(sum) - z[static_cast<std::size_t>(label)];
}

}  // namespace

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  check_sizes(sizes_);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) params_.emplace_back(block_size(sizes_[l], sizes_[l + 1]), 0.0);
}

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes, std::uint64_t seed) : MlpModel(std::move(layer_sizes)) {
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < params_.size(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    for (std::size_t k = 0; k < in * out; ++k) params_[l][k] = gauss(rng);
  }
}

std::unique_ptr<Differentiable> MlpModel::clone() const { return std::make_unique<MlpModel>(*this); }

std::size_t MlpModel::hidden_units() const {
  std::size_t h = 0;
  for (std::size_t l = 1; l + 1 < sizes_.size(); ++l) h += sizes_[l];
  return h;
}

std::unique_ptr<Differentiable> MlpModel::linearized_at(const Batch& batch) const {
  check_batch(batch);
  auto copy = std::make_unique<MlpModel>(*this);
  copy->frozen_.reset();
  const std::size_t hidden = hidden_units();
  auto mask = std::make_shared<std::vector<unsigned char>>(batch.size() * hidden, 0);
  std::vector<std::vector<double>> acts, pre;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    copy->forward(batch.input(s), s, acts, pre);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < params_.size(); ++l) {
      for (std::size_t o = 0; o < pre[l].size(); ++o) (*mask)[s * hidden + offset + o] = pre[l][o] > 0.0 ? 1 : 0;
      offset += pre[l].size();
    }
  }
  copy->frozen_ = std::move(mask);
  return copy;
}

void MlpModel::check_batch(const Batch& batch) const {
  if (batch.in_dim != input_dim()) {
    throw DimensionMismatch("MlpModel: batch input dimension " + std::to_string(batch.in_dim) +
                            " != model input " + std::to_string(input_dim()));
  }
  if (batch.inputs.size() != batch.size() * batch.in_dim) throw DimensionMismatch("MlpModel: malformed batch");
  for (int y : batch.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= output_dim()) throw InvalidArgument("MlpModel: label out of range");
  if (frozen_ && frozen_->size() != batch.size() * hidden_units()) {
    throw DimensionMismatch("MlpModel: linearized model evaluated on a different batch");
  }
}

bool MlpModel::active(std::size_t sample, std::size_t unit, double z) const {
  if (frozen_) return (*frozen_)[sample * hidden_units() + unit] != 0;
  return z > 0.0;
}

void MlpModel::forward(std::span<const double> x, std::size_t sample, std::vector<std::vector<double>>& acts,
                       std::vector<std::vector<double>>& pre) const {
  const std::size_t layers = params_.size();
  acts.resize(layers + 1);
  pre.resize(layers);
  acts[0].assign(x.begin(), x.end());
  std::size_t unit_offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_[l].data();
    const double* b = w + in * out;
    acts[l + 1].resize(out);
    pre[l].resize(out);
    const bool hidden = l + 1 < layers;
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * acts[l][i];
      pre[l][o] = z;
      acts[l + 1][o] = hidden ? (active(sample, unit_offset + o, z) ? z : 0.0) : z;
    }
    if (hidden) unit_offset += out;
  }
}

std::vector<double> MlpModel::logits(std::span<const double> input) const {
  if (input.size() != input_dim()) throw DimensionMismatch("MlpModel::logits: input dimension mismatch");
  MlpModel plain = *this;
  plain.frozen_.reset();
  std::vector<std::vector<double>> acts, pre;
  plain.forward(input, 0, acts, pre);
  return acts.back();
}

LossAccuracy MlpModel::loss_and_accuracy(const Batch& batch) const {
  check_batch(batch);
  if (batch.size() == 0) return {};
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<std::vector<double>> acts, pre;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    forward(batch.input(s), s, acts, pre);
    const auto& z = acts.back();
    loss += cross_entropy(z, batch.labels[s]);
    const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    if (pred == static_cast<std::size_t>(batch.labels[s])) ++correct;
  }
  const auto count = static_cast<double>(batch.size());
  return {loss / count, static_cast<double>(correct) / count};
}

LayerGradients MlpModel::gradient(const Batch& batch) const {
  check_batch(batch);
  const std::size_t layers = params_.size();
  LayerGradients grad(layers);
  for (std::size_t l = 0; l < layers; ++l) grad[l].assign(params_[l].size(), 0.0);
  if (batch.size() == 0) return grad;

  // acts[l] is the input to layer l; pre[l] its pre-activation output.
  std::vector<std::vector<double>> acts, pre;
  std::vector<double> delta, delta_prev;

  for (std::size_t s = 0; s < batch.size(); ++s) {
    forward(batch.input(s), s, acts, pre);

    // softmax(z) - onehot(y)
    const auto& z = acts[layers];
    const double zmax = *std::max_element(z.begin(), z.end());
    delta.resize(z.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      delta[k] = std::exp(z[k] - zmax);
      sum += delta[k];
    }
    for (double& d : delta) d /= sum;
    delta[static_cast<std::size_t>(batch.labels[s])] -= 1.0;

    std::size_t unit_end = hidden_units();
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = sizes_[l], out = sizes_[l + 1];
      double* gw = grad[l].data();
      double* gb = gw + in * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += d * acts[l][i];
        gb[o] += d;
      }
      if (l == 0) break;
      const double* w = params_[l].data();
      delta_prev.assign(in, 0.0);
      for (std::size_t o = 0; o < out; ++o)
        for (std::size_t i = 0; i < in; ++i) delta_prev[i] += w[o * in + i] * delta[o];
      // Units feeding layer l are hidden units [unit_end - in, unit_end).
      const std::size_t first_unit = unit_end - in;
      for (std::size_t i = 0; i < in; ++i)
        if (!active(s, first_unit + i, pre[l - 1][i])) delta_prev[i] = 0.0;
      unit_end = first_unit;
      std::swap(delta, delta_prev);
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grad)
    for (double& v : g) v *= inv;
  return grad;
}

std::vector<double> MlpModel::flatten() const {
  std::vector<double> flat;
  for (const auto& p : params_) flat.insert(flat.end(), p.begin(), p.end());
  return flat;
}

void MlpModel::unflatten(std::span<const double> flat) {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.size();
  if (flat.size() != total) throw DimensionMismatch("MlpModel::unflatten: wrong parameter count");
  std::size_t offset = 0;
  for (auto& p : params_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), p.size(), p.begin());
    offset += p.size();
  }
}

QuadraticBowlModel::QuadraticBowlModel(SymMatrix a, std::vector<double> b, std::vector<double> theta)
    : a_(std::move(a)), b_(std::move(b)), theta_(std::move(theta)) {
  if (b_.size() != a_.n() || theta_.size() != a_.n()) throw DimensionMismatch("QuadraticBowlModel: size mismatch");
}

std::unique_ptr<Differentiable> QuadraticBowlModel::clone() const {
  return std::make_unique<QuadraticBowlModel>(*this);
}

std::span<double> QuadraticBowlModel::layer_parameters(std::size_t layer) {
  if (layer != 0) throw InvalidArgument("QuadraticBowlModel: single layer");
  return theta_;
}

std::span<const double> QuadraticBowlModel::layer_parameters(std::size_t layer) const {
  if (layer != 0) throw InvalidArgument("QuadraticBowlModel: single layer");
  return theta_;
}

LossAccuracy QuadraticBowlModel::loss_and_accuracy(const Batch&) const {
  const auto at = a_.multiply(theta_);
  double loss = 0.0;
  for (std::size_t i = 0; i < theta_.size(); ++i) loss += 0.5 * theta_[i] * at[i] - b_[i] * theta_[i];
  return {loss, 0.0};
}

LayerGradients QuadraticBowlModel::gradient(const Batch&) const {
  auto g = a_.multiply(theta_);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= b_[i];
  return {std::move(g)};
}

}  // namespace qnewton
