#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "qnewton/sym_matrix.hpp"

namespace qnewton {

/// Mini-batch: row-major inputs (size() x in_dim) and integer class labels.
struct Batch {
  std::size_t in_dim = 0;
  std::vector<double> inputs;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> input(std::size_t i) const noexcept {
    return std::span<const double>(inputs).subspan(i * in_dim, in_dim);
  }
};

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// One flat gradient vector per layer.
using LayerGradients = std::vector<std::vector<double>>;

/// A model whose parameters are partitioned into layers and whose loss has
/// an analytic gradient. The optimizers and the Hessian machinery only see
/// this interface.
class Differentiable {
 public:
  virtual ~Differentiable() = default;

  virtual std::unique_ptr<Differentiable> clone() const = 0;
  /// A copy whose piecewise-linear activations are frozen at the current
  /// parameters for `batch`, so that its gradient is smooth around them.
  /// Finite differences of that gradient give the same Hessian-vector
  /// products as automatic differentiation (which treats ReLU'' as 0) and
  /// never see kink jumps. The copy is only valid for evaluation on `batch`.
  virtual std::unique_ptr<Differentiable> linearized_at(const Batch& batch) const {
    static_cast<void>(batch);
    return clone();
  }
  virtual std::size_t layer_count() const = 0;
  virtual std::span<double> layer_parameters(std::size_t layer) = 0;
  virtual std::span<const double> layer_parameters(std::size_t layer) const = 0;
  virtual LossAccuracy loss_and_accuracy(const Batch& batch) const = 0;
  virtual LayerGradients gradient(const Batch& batch) const = 0;

  std::size_t parameter_count(std::size_t layer) const { return layer_parameters(layer).size(); }
};

/// Fully connected network: ReLU on hidden layers, softmax cross-entropy
/// head. Layer l stores its weights (out x in, row-major) followed by its
/// biases, so layer_parameters(l) is the flattened parameter block.
class MlpModel final : public Differentiable {
 public:
  /// He-normal weights, zero biases.
  MlpModel(std::vector<std::size_t> layer_sizes, std::uint64_t seed);
  /// All-zero parameters.
  explicit MlpModel(std::vector<std::size_t> layer_sizes);

  std::unique_ptr<Differentiable> clone() const override;
  std::unique_ptr<Differentiable> linearized_at(const Batch& batch) const override;
  std::size_t layer_count() const override { return params_.size(); }
  std::span<double> layer_parameters(std::size_t layer) override { return params_.at(layer); }
  std::span<const double> layer_parameters(std::size_t layer) const override { return params_.at(layer); }

  /// Mean cross-entropy and argmax accuracy over the batch.
  LossAccuracy loss_and_accuracy(const Batch& batch) const override;
  /// Backpropagated gradient of the mean cross-entropy.
  LayerGradients gradient(const Batch& batch) const override;

  std::vector<double> logits(std::span<const double> input) const;

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t output_dim() const noexcept { return sizes_.back(); }

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

  bool operator==(const MlpModel& other) const { return sizes_ == other.sizes_ && params_ == other.params_; }

 private:
  void check_batch(const Batch& batch) const;
  std::size_t hidden_units() const;
  // Forward pass for one sample; fills acts (layer inputs + logits) and pre.
  void forward(std::span<const double> x, std::size_t sample, std::vector<std::vector<double>>& acts,
               std::vector<std::vector<double>>& pre) const;
  bool active(std::size_t sample, std::size_t unit_offset, double z) const;

  std::vector<std::size_t> sizes_;
  std::vector<std::vector<double>> params_;
  // Frozen ReLU pattern, samples x hidden_units(); empty when not linearized.
  std::shared_ptr<const std::vector<unsigned char>> frozen_;
};

/// L(theta) = 1/2 theta^T A theta - b^T theta as a single-layer model; the
/// batch argument is ignored. Accuracy is reported as 0.
class QuadraticBowlModel final : public Differentiable {
 public:
  QuadraticBowlModel(SymMatrix a, std::vector<double> b, std::vector<double> theta);

  std::unique_ptr<Differentiable> clone() const override;
  std::size_t layer_count() const override { return 1; }
  std::span<double> layer_parameters(std::size_t layer) override;
  std::span<const double> layer_parameters(std::size_t layer) const override;
  LossAccuracy loss_and_accuracy(const Batch& batch) const override;
  LayerGradients gradient(const Batch& batch) const override;

  const SymMatrix& hessian() const noexcept { return a_; }
  const std::vector<double>& linear_term() const noexcept { return b_; }

 private:
  SymMatrix a_;
  std::vector<double> b_;
  std::vector<double> theta_;
};

}  // namespace qnewton
