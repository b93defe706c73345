#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qnewton/conditioning.hpp"
#include "qnewton/dataset.hpp"
#include "qnewton/linalg.hpp"
#include "qnewton/model.hpp"
#include "qnewton/scheduler.hpp"

namespace qnewton {

enum class Optimizer { Newton, SGD };
enum class SchedulerMode { Hybrid, ClassicalOnly, QuantumOnly };
enum class Execution { Serial, Parallel };

std::string_view to_string(Optimizer o);
std::string_view to_string(SchedulerMode m);

struct TrainConfig {
  Optimizer optimizer = Optimizer::Newton;
  double learning_rate = 1.0;
  std::size_t steps = 20;
  std::size_t batch_size = 32;
  PruneConfig prune;
  double epsilon_reg = 0.5;
  CostModelParams cost_params;
  SchedulerMode scheduler_mode = SchedulerMode::Hybrid;
  std::uint64_t seed = 0;
  /// Relative finite-difference step: h = fd_step * (1 + ||theta_l||_inf).
  double fd_step = 1e-3;
  std::vector<std::size_t> layer_sizes{64, 16, 10};
  /// Billed time of one SGD step (reported, not measured).
  double sgd_seconds_per_step = 0.1;
  /// Stop as soon as the training loss is <= this value.
  std::optional<double> target_loss;
  /// Keep the p%-sparsity profile of every raw layer Hessian.
  bool record_sparsity_profile = false;

  bool operator==(const TrainConfig&) const = default;
};

struct LayerRecord {
  std::size_t layer = 0;
  std::size_t n = 0;
  double kappa_bound = 1.0;
  double log_kappa_bound = 0.0;
  double density = 1.0;
  SchedulerDecision decision;
  double billed = 0.0;
  double achieved_sparsity = 0.0;
  std::size_t retained_for_pd = 0;
  std::optional<SparsityReport> hessian_profile;
};

/// One optimizer step. Newton steps carry one LayerRecord per layer; SGD
/// steps carry none. loss/accuracy are measured on the whole training split
/// after the update (train() fills them in); batch_loss is the mini-batch
/// loss before the update.
struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double batch_loss = 0.0;
  std::vector<LayerRecord> layers;
  double billed = 0.0;
  double cumulative_billed = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> records;
  TimeLedger ledger;
  std::vector<double> final_parameters;
  double initial_loss = 0.0;
  double test_accuracy = 0.0;
  bool reached_target = false;
};

/// Finite-difference step used for layer `layer`.
double fd_step_for_layer(const Differentiable& model, std::size_t layer, double fd_scale);

/// Hessian-vector product of the layer block by central differences of the
/// analytic gradient along v / ||v||, rescaled by ||v||. Throws ZeroVector.
std::vector<double> hvp(const Differentiable& model, const Batch& batch, std::size_t layer,
                        std::span<const double> v, double h);

/// Unsymmetrized layer Hessian, row-major; column i is hvp(e_i).
/// Columns are independent and computed in parallel unless exec is Serial;
/// both paths give bitwise-identical output.
std::vector<double> assemble_layer_hessian(const Differentiable& model, const Batch& batch, std::size_t layer,
                                           double h, Execution exec = Execution::Parallel);

/// (H + H^T) / 2 of the assembled layer Hessian, with h from fd_step_for_layer.
SymMatrix layer_hessian(const Differentiable& model, const Batch& batch, std::size_t layer, double fd_scale = 1e-3);

/// Newton update of every layer: Hessian, prune, regularize, estimate
/// features, schedule, solve, then theta_l -= eta * u_l for all layers at
/// once. Decisions are appended to `ledger` in layer order.
StepRecord newton_step(Differentiable& model, const Batch& batch, const TrainConfig& config, TimeLedger& ledger,
                       std::size_t step_index = 0);

/// theta -= eta * grad.
StepRecord sgd_step(Differentiable& model, const Batch& batch, const TrainConfig& config,
                    std::size_t step_index = 0);

/// Builds an MlpModel from config.layer_sizes and config.seed and trains it.
TrainLog train(const TrainConfig& config, const Dataset& dataset);
/// Trains `model` in place.
TrainLog train(const TrainConfig& config, const Dataset& dataset, MlpModel& model);

}  // namespace qnewton
