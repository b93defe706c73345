#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qnewton/config.hpp"
#include "qnewton/training.hpp"

namespace qnewton {

/// Shortest round-trip decimal form, locale independent ("inf", "-inf", "nan"
/// for non-finite values).
std::string format_real(double v);

/// Comma-separated file with a header row. Fields are written verbatim, so
/// callers must not pass commas or quotes.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view text);

/// run_summary.json: config echo, calibration constants, run id and notes.
void write_run_summary(const std::filesystem::path& dir, const std::string& command, const RunConfig& config,
                       const nlohmann::json& results);

// ---------------------------------------------------------------- compare

struct MethodSummary {
  std::string method;  // sgd | classical | quantum | hybrid
  std::size_t steps = 0;
  double time_per_step = 0.0;
  double time = 0.0;
  double final_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  bool reached_bar = false;
};

struct CompareResult {
  /// Best training loss reached by SGD; the shared convergence bar.
  double bar_loss = 0.0;
  std::vector<std::pair<std::string, TrainLog>> runs;
  std::vector<MethodSummary> summary;
};

/// SGD first (its best loss becomes the bar), then ClassicalOnly,
/// QuantumOnly and Hybrid Newton, each stopped at the bar.
CompareResult run_compare(const RunConfig& config, const Dataset& data);

/// Header of the per-step CSV shared by `train` and `compare`.
std::vector<std::string> step_csv_header();
/// One row per SGD step, one row per layer for Newton steps.
void append_step_rows(CsvWriter& csv, const std::string& method, const TrainLog& log);

/// compare_steps.csv, compare_summary.csv and run_summary.json.
void write_compare(const CompareResult& result, const RunConfig& config, const std::filesystem::path& dir);

// ---------------------------------------------------------------- sweeps

struct CrossoverRow {
  std::size_t n = 0;
  double kappa = 0.0;
  double density = 0.0;
  double t_classical = 0.0;
  double t_quantum = 0.0;
  Processor decision = Processor::Classical;
  /// +inf when no crossover exists (quantum never cheaper).
  double crossover_kappa = 0.0;
};

/// Full grid, n-major then density then kappa. Grid points are evaluated in
/// parallel.
std::vector<CrossoverRow> crossover_sweep(const SweepConfig& sweep, const CostModelParams& params);
void write_crossover(const std::vector<CrossoverRow>& rows, const std::filesystem::path& path);

struct SparsityRow {
  double target_sparsity = 0.0;
  /// Mean over all layer solves of the run.
  double achieved_sparsity = 0.0;
  std::size_t retained_for_pd = 0;
  std::size_t steps = 0;
  double final_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  /// Every regularized, pruned layer Hessian factored by Cholesky.
  bool cholesky_ok = true;
  std::vector<double> final_parameters;
};

/// Newton training (config mode, or hybrid when the mode is sgd) at each
/// target sparsity.
std::vector<SparsityRow> sparsity_sweep(const RunConfig& config, const Dataset& data);
void write_sparsity(const std::vector<SparsityRow>& rows, const std::filesystem::path& path);

struct RegularizationRow {
  double epsilon_reg = 0.0;
  /// Mean over layers of the Merikoski bound of H_l + eps I for the
  /// reference Hessians (initial model, first training batch). Kept in the
  /// log domain as well since the bound overflows for large blocks.
  double mean_kappa_bound = 0.0;
  double log_mean_kappa_bound = 0.0;
  /// Same mean, averaged over every step of the training run.
  double trajectory_log_mean_kappa_bound = 0.0;
  std::size_t steps = 0;
  double final_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  bool diverged = false;
};

/// log of the arithmetic mean of exp(logs).
double log_mean_exp(std::span<const double> logs);

/// Reference Hessians: the unpruned layer Hessians of the initial model on
/// the first batch_size training samples.
std::vector<SymMatrix> reference_hessians(const RunConfig& config, const Dataset& data);
/// log of the mean over layers of merikoski_bound(H_l + eps I); +inf when a
/// shifted block is not positive definite.
double reference_log_mean_kappa(const std::vector<SymMatrix>& hessians, double epsilon_reg);

std::vector<RegularizationRow> regularization_sweep(const RunConfig& config, const Dataset& data);
void write_regularization(const std::vector<RegularizationRow>& rows, const std::filesystem::path& path);

// ---------------------------------------------------------------- hessian report

/// Newton run with the p%-sparsity profile of every layer Hessian recorded.
TrainLog hessian_report(const RunConfig& config, const Dataset& data);

/// hessian_trajectory.csv (per step and layer) and hessian_psparsity.csv
/// (per step, layer and row).
void write_hessian_report(const TrainLog& log, const std::filesystem::path& dir);

}  // namespace qnewton
