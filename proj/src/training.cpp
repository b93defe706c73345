#include "qnewton/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <string>

#include "qnewton/error.hpp"

namespace qnewton {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t solve_seed(std::uint64_t seed, std::size_t step, std::size_t layer) {
  return splitmix64(splitmix64(splitmix64(seed) ^ step) ^ layer);
}

// Column `col` of the layer Hessian by central differences along e_col.
// `local` is restored before returning.
void hessian_column(Differentiable& local, const Batch& batch, std::size_t layer, std::size_t col, double h,
                    std::span<double> raw) {
  auto theta = local.layer_parameters(layer);
  const double orig = theta[col];
  const double norm = 1.0;
  theta[col] = orig + h * norm;
  const auto gp = local.gradient(batch);
  theta[col] = orig - h * norm;
  const auto gm = local.gradient(batch);
  theta[col] = orig;
  const auto& plus = gp[layer];
  const auto& minus = gm[layer];
  const std::size_t n = theta.size();
  for (std::size_t r = 0; r < n; ++r) raw[r * n + col] = (plus[r] - minus[r]) * norm / (2.0 * h);
}

}  // namespace

std::string_view to_string(Optimizer o) { return o == Optimizer::Newton ? "newton" : "sgd"; }

std::string_view to_string(SchedulerMode m) {
  switch (m) {
    case SchedulerMode::Hybrid:
      return "hybrid";
    case SchedulerMode::ClassicalOnly:
      return "classical";
    case SchedulerMode::QuantumOnly:
      return "quantum";
  }
  return "hybrid";
}

double fd_step_for_layer(const Differentiable& model, std::size_t layer, double fd_scale) {
  if (layer >= model.layer_count()) throw InvalidArgument("fd_step_for_layer: layer index out of range");
  double inf_norm = 0.0;
  for (double v : model.layer_parameters(layer)) inf_norm = std::max(inf_norm, std::fabs(v));
  return fd_scale * (1.0 + inf_norm);
}

std::vector<double> hvp(const Differentiable& model, const Batch& batch, std::size_t layer,
                        std::span<const double> v, double h) {
  const std::size_t n = model.parameter_count(layer);
  if (v.size() != n) throw InvalidArgument("hvp: vector length does not match layer parameter count");
  if (!(h > 0.0)) throw InvalidArgument("hvp: h must be > 0");
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw ZeroVector("hvp: direction has zero norm");

  auto local = model.linearized_at(batch);
  auto theta = local->layer_parameters(layer);
  const std::vector<double> orig(theta.begin(), theta.end());
  for (std::size_t i = 0; i < n; ++i) theta[i] = orig[i] + h * (v[i] / norm);
  const auto gp = local->gradient(batch);
  for (std::size_t i = 0; i < n; ++i) theta[i] = orig[i] - h * (v[i] / norm);
  const auto gm = local->gradient(batch);

  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) out[r] = (gp[layer][r] - gm[layer][r]) * norm / (2.0 * h);
  return out;
}

std::vector<double> assemble_layer_hessian(const Differentiable& model, const Batch& batch, std::size_t layer,
                                           double h, Execution exec) {
  if (layer >= model.layer_count()) throw InvalidArgument("layer_hessian: layer index out of range");
  if (!(h > 0.0)) throw InvalidArgument("layer_hessian: h must be > 0");
  const std::size_t n = model.parameter_count(layer);
  std::vector<double> raw(n * n, 0.0);

  if (exec == Execution::Serial) {
    auto local = model.linearized_at(batch);
    for (std::size_t c = 0; c < n; ++c) hessian_column(*local, batch, layer, c, h, raw);
    return raw;
  }

  const auto base = model.linearized_at(batch);
  std::exception_ptr error;
  const auto cols = static_cast<std::int64_t>(n);
#pragma omp parallel
  {
    std::unique_ptr<Differentiable> local;
    try {
      local = base->clone();
    } catch (...) {
#pragma omp critical(qnewton_hessian_error)
      if (!error) error = std::current_exception();
    }
#pragma omp for schedule(dynamic, 4)
    for (std::int64_t c = 0; c < cols; ++c) {
      if (!local) continue;
      try {
        hessian_column(*local, batch, layer, static_cast<std::size_t>(c), h, raw);
      } catch (...) {
#pragma omp critical(qnewton_hessian_error)
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return raw;
}

SymMatrix layer_hessian(const Differentiable& model, const Batch& batch, std::size_t layer, double fd_scale) {
  const double h = fd_step_for_layer(model, layer, fd_scale);
  const auto raw = assemble_layer_hessian(model, batch, layer, h);
  return SymMatrix::symmetrized(model.parameter_count(layer), raw);
}

StepRecord newton_step(Differentiable& model, const Batch& batch, const TrainConfig& config, TimeLedger& ledger,
                       std::size_t step_index) {
  StepRecord rec;
  rec.step = step_index;
  rec.batch_loss = model.loss_and_accuracy(batch).loss;
  const auto grad = model.gradient(batch);
  const std::size_t layers = model.layer_count();
  std::vector<std::vector<double>> updates(layers);

  for (std::size_t l = 0; l < layers; ++l) {
    LayerRecord lr;
    lr.layer = l;
    lr.n = model.parameter_count(l);
    const std::string where = "layer " + std::to_string(l) + ", step " + std::to_string(step_index);

    const SymMatrix hess = layer_hessian(model, batch, l, config.fd_step);
    if (config.record_sparsity_profile) lr.hessian_profile = sparsity_report(hess);

    PruneConfig prune = config.prune;
    prune.pd_shift = config.epsilon_reg;
    SymMatrix pruned(1);
    try {
      auto [m, report] = prune_symmetric(hess, prune);
      pruned = std::move(m);
      lr.achieved_sparsity = report.achieved_sparsity;
      lr.retained_for_pd = report.retained_for_pd;
    } catch (const NotPositiveDefinite&) {
      throw SingularHessian("newton_step: Hessian is not positive definite after regularization (" + where +
                            "); increase epsilon_reg");
    }

    const SymMatrix reg = regularize(pruned, config.epsilon_reg);
    MerikoskiEstimate est;
    try {
      est = merikoski_estimate(reg);
    } catch (const NotPositiveDefinite&) {
      throw SingularHessian("newton_step: regularized Hessian fails Cholesky (" + where + "); increase epsilon_reg");
    }
    lr.kappa_bound = est.bound;
    lr.log_kappa_bound = est.log_bound;
    lr.density = density(reg);

    switch (config.scheduler_mode) {
      case SchedulerMode::Hybrid:
        lr.decision = decide(lr.n, lr.kappa_bound, lr.density, config.cost_params);
        break;
      case SchedulerMode::ClassicalOnly:
        lr.decision = force(Processor::Classical, lr.n, lr.kappa_bound, lr.density, config.cost_params);
        break;
      case SchedulerMode::QuantumOnly:
        lr.decision = force(Processor::Quantum, lr.n, lr.kappa_bound, lr.density, config.cost_params);
        break;
    }

    try {
      if (lr.decision.processor == Processor::Quantum) {
        updates[l] = emulate_quantum_solve(reg, grad[l], config.cost_params, solve_seed(config.seed, step_index, l),
                                           lr.decision.features)
                         .x;
      } else {
        updates[l] = solve_classical(reg, grad[l]);
      }
    } catch (const SingularMatrix&) {
      throw SingularHessian("newton_step: singular Hessian (" + where + "); increase epsilon_reg");
    }

    ledger.record(lr.decision);
    lr.billed = lr.decision.billed();
    rec.billed += lr.billed;
    rec.layers.push_back(std::move(lr));
  }

  for (std::size_t l = 0; l < layers; ++l) {
    auto theta = model.layer_parameters(l);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * updates[l][i];
  }
  return rec;
}

StepRecord sgd_step(Differentiable& model, const Batch& batch, const TrainConfig& config, std::size_t step_index) {
  StepRecord rec;
  rec.step = step_index;
  rec.batch_loss = model.loss_and_accuracy(batch).loss;
  const auto grad = model.gradient(batch);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    auto theta = model.layer_parameters(l);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * grad[l][i];
  }
  rec.billed = config.sgd_seconds_per_step;
  return rec;
}

TrainLog train(const TrainConfig& config, const Dataset& dataset) {
  MlpModel model(config.layer_sizes, config.seed);
  return train(config, dataset, model);
}

TrainLog train(const TrainConfig& config, const Dataset& dataset, MlpModel& model) {
  if (config.batch_size == 0) throw InvalidArgument("train: batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw InvalidArgument("train: learning_rate must be > 0");
  if (dataset.in_dim != model.input_dim()) throw DimensionMismatch("train: dataset input dimension does not match model");
  if (dataset.train_indices.empty()) throw InvalidArgument("train: empty training split");

  TrainLog log;
  const Batch eval = dataset.train_batch();
  log.initial_loss = model.loss_and_accuracy(eval).loss;

  std::mt19937_64 rng(splitmix64(config.seed ^ 0x5eedba7c4ULL));
  std::vector<std::size_t> order = dataset.train_indices;
  const std::size_t bs = std::min(config.batch_size, order.size());
  std::size_t cursor = order.size();
  double cumulative = 0.0;

  for (std::size_t s = 0; s < config.steps; ++s) {
    if (cursor + bs > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const Batch batch = dataset.gather(std::span<const std::size_t>(order).subspan(cursor, bs));
    cursor += bs;

    StepRecord rec = config.optimizer == Optimizer::Newton ? newton_step(model, batch, config, log.ledger, s)
                                                           : sgd_step(model, batch, config, s);
    const auto metrics = model.loss_and_accuracy(eval);
    rec.loss = metrics.loss;
    rec.accuracy = metrics.accuracy;
    cumulative += rec.billed;
    rec.cumulative_billed = cumulative;
    log.records.push_back(std::move(rec));
    if (config.target_loss && metrics.loss <= *config.target_loss) {
      log.reached_target = true;
      break;
    }
  }

  log.final_parameters = model.flatten();
  log.test_accuracy = dataset.test_indices.empty() ? model.loss_and_accuracy(eval).accuracy
                                                   : model.loss_and_accuracy(dataset.test_batch()).accuracy;
  return log;
}

}  // namespace qnewton
