#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qnewton/config.hpp"
#include "qnewton/error.hpp"
#include "qnewton/experiments.hpp"

namespace fs = std::filesystem;
using namespace qnewton;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--out", opts.out, "Output directory (overrides output_dir)");
  cmd->add_option("--mode", opts.mode, "hybrid|classical|quantum|sgd")
      ->check(CLI::IsMember({"hybrid", "classical", "quantum", "sgd"}));
}

RunConfig resolve(const CommonOptions& opts) {
  RunConfig config = load_config(opts.config);
  if (opts.seed) config.train.seed = *opts.seed;
  if (!opts.out.empty()) config.output_dir = opts.out;
  if (!opts.mode.empty()) apply_mode(config.train, opts.mode);
  return config;
}

int cmd_calibrate(const CommonOptions& opts) {
  RunConfig config = load_config(opts.config);
  const std::uint64_t seed = opts.seed.value_or(config.train.seed);
  const auto fit = calibrate_classical(config.calibration.sizes, config.calibration.repetitions, seed);
  config.train.cost_params.c1 = fit.c1;
  config.train.cost_params.c2 = fit.c2;
  save_config(config, opts.config);
  std::cout << "c1 = " << format_real(fit.c1) << " s/n^3\nc2 = " << format_real(fit.c2) << " s\n"
            << "written to " << opts.config << '\n';
  return 0;
}

int cmd_train(const CommonOptions& opts) {
  const RunConfig config = resolve(opts);
  const Dataset data = load_dataset(config);
  const std::string mode = mode_name(config.train);
  const TrainLog log = train(train_config_for(config, mode), data);
  const fs::path dir = config.output_dir;
  {
    CsvWriter csv(dir / "train_steps.csv", step_csv_header());
    append_step_rows(csv, mode, log);
  }
  const double loss = log.records.empty() ? log.initial_loss : log.records.back().loss;
  write_run_summary(dir, "train", config,
                    {{"mode", mode},
                     {"steps", log.records.size()},
                     {"final_loss", loss},
                     {"test_accuracy", log.test_accuracy},
                     {"billed_classical_s", log.ledger.billed_classical()},
                     {"billed_quantum_s", log.ledger.billed_quantum()},
                     {"billed_total_s", log.records.empty() ? 0.0 : log.records.back().cumulative_billed}});
  std::cout << mode << ": " << log.records.size() << " steps, final loss " << format_real(loss)
            << ", test accuracy " << format_real(log.test_accuracy) << '\n';
  return 0;
}

int cmd_compare(const CommonOptions& opts) {
  const RunConfig config = resolve(opts);
  const Dataset data = load_dataset(config);
  const CompareResult result = run_compare(config, data);
  write_compare(result, config, config.output_dir);
  std::cout << "bar loss " << format_real(result.bar_loss) << " (simulated times)\n";
  std::cout << "method     Steps  Time/Step(s)  Time(s)\n";
  for (const auto& s : result.summary) {
    std::cout << s.method << std::string(11 - s.method.size(), ' ') << s.steps << "  " << format_real(s.time_per_step)
              << "  " << format_real(s.time) << (s.reached_bar ? "" : "  (bar not reached)") << '\n';
  }
  return 0;
}

int cmd_sweep(const std::string& kind, const CommonOptions& opts) {
  const RunConfig config = resolve(opts);
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  if (kind == "crossover") {
    const auto rows = crossover_sweep(config.sweep, config.train.cost_params);
    write_crossover(rows, dir / "sweep_crossover.csv");
    write_run_summary(dir, "sweep crossover", config, {{"rows", rows.size()}});
    std::cout << rows.size() << " grid points written\n";
  } else if (kind == "sparsity") {
    const auto rows = sparsity_sweep(config, load_dataset(config));
    write_sparsity(rows, dir / "sweep_sparsity.csv");
    write_run_summary(dir, "sweep sparsity", config, {{"rows", rows.size()}});
    for (const auto& r : rows)
      std::cout << "target " << format_real(r.target_sparsity) << ": test accuracy " << format_real(r.test_accuracy)
                << '\n';
  } else {
    const auto rows = regularization_sweep(config, load_dataset(config));
    write_regularization(rows, dir / "sweep_regularization.csv");
    write_run_summary(dir, "sweep regularization", config, {{"rows", rows.size()}});
    for (const auto& r : rows)
      std::cout << "epsilon_reg " << format_real(r.epsilon_reg) << ": log mean kappa bound "
                << format_real(r.log_mean_kappa_bound) << ", test accuracy " << format_real(r.test_accuracy) << '\n';
  }
  return 0;
}

int cmd_hessian_report(const CommonOptions& opts) {
  const RunConfig config = resolve(opts);
  const TrainLog log = hessian_report(config, load_dataset(config));
  write_hessian_report(log, config.output_dir);
  write_run_summary(config.output_dir, "hessian-report", config, {{"steps", log.records.size()}});
  std::cout << log.records.size() << " steps written to " << config.output_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise Newton training with a classical/quantum solve scheduler"};
  app.require_subcommand(1);

  CommonOptions calibrate_opts, train_opts, compare_opts, sweep_opts, report_opts;
  auto* calibrate = app.add_subcommand("calibrate", "Fit c1, c2 and write them into the config file");
  add_common(calibrate, calibrate_opts);
  auto* train_cmd = app.add_subcommand("train", "Train with the configured optimizer");
  add_common(train_cmd, train_opts);
  auto* compare = app.add_subcommand("compare", "SGD vs classical-only, quantum-only and hybrid Newton");
  add_common(compare, compare_opts);
  auto* sweep = app.add_subcommand("sweep", "Parameter sweeps");
  std::string sweep_kind;
  sweep->add_option("kind", sweep_kind, "crossover|sparsity|regularization")
      ->required()
      ->check(CLI::IsMember({"crossover", "sparsity", "regularization"}));
  add_common(sweep, sweep_opts);
  auto* report = app.add_subcommand("hessian-report", "Per-step kappa, density and p%-sparsity of layer Hessians");
  add_common(report, report_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*calibrate) return cmd_calibrate(calibrate_opts);
    if (*train_cmd) return cmd_train(train_opts);
    if (*compare) return cmd_compare(compare_opts);
    if (*sweep) return cmd_sweep(sweep_kind, sweep_opts);
    if (*report) return cmd_hessian_report(report_opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
