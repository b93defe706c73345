#include "qnewton/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>

#include "qnewton/conditioning.hpp"
#include "qnewton/error.hpp"

namespace qnewton {

using nlohmann::json;

namespace {

const char* const kModes[] = {"classical", "quantum", "hybrid"};

std::string format_size(std::size_t v) { return std::to_string(v); }

// Newton modes for sweeps and reports: the configured one, hybrid for sgd.
TrainConfig newton_config(const RunConfig& config) {
  TrainConfig t = config.train;
  if (t.optimizer == Optimizer::SGD) apply_mode(t, "hybrid");
  return t;
}

double final_loss(const TrainLog& log) { return log.records.empty() ? log.initial_loss : log.records.back().loss; }
double final_accuracy(const TrainLog& log) { return log.records.empty() ? 0.0 : log.records.back().accuracy; }

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : columns_(header.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::trunc);
  if (!out_) throw Error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw InvalidArgument("CsvWriter: row has the wrong number of fields");
  for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
  out_ << '\n';
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof buf, h, 16);
  std::string hex(buf, res.ptr);
  return std::string(16 - hex.size(), '0') + hex;
}

void write_run_summary(const std::filesystem::path& dir, const std::string& command, const RunConfig& config,
                       const json& results) {
  std::filesystem::create_directories(dir);
  const json cfg = to_json(config);
  json j;
  j["run_id"] = fnv1a_hex(command + "\n" + cfg.dump());
  j["command"] = command;
  j["config"] = cfg;
  j["calibration"] = {{"c1", config.train.cost_params.c1}, {"c2", config.train.cost_params.c2}};
  j["notes"] = {
      "billed times are simulated from the cost models, not measured",
      "SGD time per step is the configured constant sgd_time_per_step",
      "the cost of estimating kappa (Cholesky) and density is excluded from billed time"};
  j["results"] = results;
  std::ofstream out(dir / "run_summary.json");
  if (!out) throw Error("cannot write " + (dir / "run_summary.json").string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- compare

CompareResult run_compare(const RunConfig& config, const Dataset& data) {
  CompareResult result;

  const TrainConfig sgd_cfg = train_config_for(config, "sgd");
  TrainLog sgd = train(sgd_cfg, data);
  MethodSummary sgd_row{.method = "sgd"};
  std::optional<double> bar;
  if (!sgd.records.empty()) {
    auto best = std::min_element(sgd.records.begin(), sgd.records.end(),
                                 [](const StepRecord& a, const StepRecord& b) { return a.loss < b.loss; });
    bar = best->loss;
    sgd_row.steps = best->step + 1;
    sgd_row.time = best->cumulative_billed;
    sgd_row.final_loss = best->loss;
    sgd_row.train_accuracy = best->accuracy;
    sgd_row.reached_bar = true;
  }
  sgd_row.time_per_step = sgd_cfg.sgd_seconds_per_step;
  sgd_row.test_accuracy = sgd.test_accuracy;
  result.bar_loss = bar.value_or(sgd.initial_loss);
  result.summary.push_back(sgd_row);
  result.runs.emplace_back("sgd", std::move(sgd));

  for (const char* mode : kModes) {
    TrainConfig cfg = train_config_for(config, mode);
    cfg.target_loss = bar;
    TrainLog log = train(cfg, data);
    MethodSummary row{.method = mode};
    row.steps = log.records.size();
    row.time = log.records.empty() ? 0.0 : log.records.back().cumulative_billed;
    row.time_per_step = row.steps ? row.time / static_cast<double>(row.steps) : 0.0;
    row.final_loss = final_loss(log);
    row.train_accuracy = final_accuracy(log);
    row.test_accuracy = log.test_accuracy;
    row.reached_bar = log.reached_target;
    result.summary.push_back(row);
    result.runs.emplace_back(mode, std::move(log));
  }
  return result;
}

std::vector<std::string> step_csv_header() {
  return {"step", "optimizer", "loss", "accuracy", "layer", "kappa_bound", "density", "decision", "billed_s",
          "cumulative_s"};
}

void append_step_rows(CsvWriter& csv, const std::string& method, const TrainLog& log) {
  double cumulative = 0.0;
  for (const auto& rec : log.records) {
    if (rec.layers.empty()) {
      cumulative += rec.billed;
      csv.row({format_size(rec.step), method, format_real(rec.loss), format_real(rec.accuracy), "", "", "", "",
               format_real(rec.billed), format_real(cumulative)});
      continue;
    }
    for (const auto& lr : rec.layers) {
      cumulative += lr.billed;
      csv.row({format_size(rec.step), method, format_real(rec.loss), format_real(rec.accuracy),
               format_size(lr.layer), format_real(lr.kappa_bound), format_real(lr.density),
               std::string(to_string(lr.decision.processor)), format_real(lr.billed), format_real(cumulative)});
    }
  }
}

void write_compare(const CompareResult& result, const RunConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  CsvWriter steps(dir / "compare_steps.csv", step_csv_header());
  for (const auto& [method, log] : result.runs) append_step_rows(steps, method, log);

  CsvWriter summary(dir / "compare_summary.csv", {"method", "Steps", "Time/Step", "Time", "final_loss",
                                                  "train_accuracy", "test_accuracy", "reached_bar"});
  json methods = json::array();
  for (const auto& s : result.summary) {
    summary.row({s.method, format_size(s.steps), format_real(s.time_per_step), format_real(s.time),
                 format_real(s.final_loss), format_real(s.train_accuracy), format_real(s.test_accuracy),
                 s.reached_bar ? "1" : "0"});
    methods.push_back({{"method", s.method},
                       {"steps", s.steps},
                       {"time_per_step_s", s.time_per_step},
                       {"time_s", s.time},
                       {"final_loss", s.final_loss},
                       {"test_accuracy", s.test_accuracy},
                       {"reached_bar", s.reached_bar}});
  }
  write_run_summary(dir, "compare", config, {{"bar_loss", result.bar_loss}, {"methods", methods}});
}

// ---------------------------------------------------------------- sweeps

std::vector<CrossoverRow> crossover_sweep(const SweepConfig& sweep, const CostModelParams& params) {
  params.validate();
  const std::size_t nk = sweep.kappa.size(), nd = sweep.density.size(), nn = sweep.n.size();
  std::vector<CrossoverRow> rows(nk * nd * nn);
  const auto total = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    CrossoverRow& r = rows[i];
    r.n = sweep.n[i / (nd * nk)];
    r.density = sweep.density[(i / nk) % nd];
    r.kappa = sweep.kappa[i % nk];
    const auto d = decide(r.n, r.kappa, r.density, params);
    r.t_classical = d.t_classical_pred;
    r.t_quantum = d.t_quantum_pred;
    r.decision = d.processor;
    try {
      r.crossover_kappa = crossover_kappa(r.n, r.density, params);
    } catch (const NoCrossover&) {
      r.crossover_kappa = std::numeric_limits<double>::infinity();
    }
  }
  return rows;
}

void write_crossover(const std::vector<CrossoverRow>& rows, const std::filesystem::path& path) {
  CsvWriter csv(path, {"n", "kappa", "density", "t_classical_s", "t_quantum_s", "decision", "crossover_kappa"});
  for (const auto& r : rows) {
    csv.row({format_size(r.n), format_real(r.kappa), format_real(r.density), format_real(r.t_classical),
             format_real(r.t_quantum), std::string(to_string(r.decision)), format_real(r.crossover_kappa)});
  }
}

std::vector<SparsityRow> sparsity_sweep(const RunConfig& config, const Dataset& data) {
  std::vector<SparsityRow> rows;
  for (double target : config.sweep.sparsity) {
    TrainConfig cfg = newton_config(config);
    cfg.prune.target_sparsity = target;
    SparsityRow row;
    row.target_sparsity = target;
    try {
      TrainLog log = train(cfg, data);
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& rec : log.records) {
        for (const auto& lr : rec.layers) {
          sum += lr.achieved_sparsity;
          row.retained_for_pd += lr.retained_for_pd;
          ++count;
        }
      }
      row.achieved_sparsity = count ? sum / static_cast<double>(count) : 0.0;
      row.steps = log.records.size();
      row.final_loss = final_loss(log);
      row.train_accuracy = final_accuracy(log);
      row.test_accuracy = log.test_accuracy;
      row.final_parameters = std::move(log.final_parameters);
    } catch (const SingularHessian&) {
      row.cholesky_ok = false;
      row.final_loss = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sparsity(const std::vector<SparsityRow>& rows, const std::filesystem::path& path) {
  CsvWriter csv(path, {"target_sparsity", "achieved_sparsity", "retained_for_pd", "steps", "final_loss",
                       "train_accuracy", "test_accuracy", "cholesky_ok"});
  for (const auto& r : rows) {
    csv.row({format_real(r.target_sparsity), format_real(r.achieved_sparsity), format_size(r.retained_for_pd),
             format_size(r.steps), format_real(r.final_loss), format_real(r.train_accuracy),
             format_real(r.test_accuracy), r.cholesky_ok ? "1" : "0"});
  }
}

double log_mean_exp(std::span<const double> logs) {
  if (logs.empty()) throw InvalidArgument("log_mean_exp: empty input");
  const double m = *std::max_element(logs.begin(), logs.end());
  if (std::isinf(m)) return m;
  double sum = 0.0;
  for (double v : logs) sum += std::exp(v - m);
  return m + std::log(sum / static_cast<double>(logs.size()));
}

std::vector<SymMatrix> reference_hessians(const RunConfig& config, const Dataset& data) {
  const TrainConfig& t = config.train;
  MlpModel model(t.layer_sizes, t.seed);
  const std::size_t bs = std::min(t.batch_size, data.train_indices.size());
  const Batch batch = data.gather(std::span<const std::size_t>(data.train_indices).first(bs));
  std::vector<SymMatrix> out;
  for (std::size_t l = 0; l < model.layer_count(); ++l) out.push_back(layer_hessian(model, batch, l, t.fd_step));
  return out;
}

double reference_log_mean_kappa(const std::vector<SymMatrix>& hessians, double epsilon_reg) {
  std::vector<double> logs;
  for (const auto& h : hessians) {
    try {
      logs.push_back(merikoski_estimate(regularize(h, epsilon_reg)).log_bound);
    } catch (const NotPositiveDefinite&) {
      logs.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return log_mean_exp(logs);
}

std::vector<RegularizationRow> regularization_sweep(const RunConfig& config, const Dataset& data) {
  std::vector<double> grid = config.sweep.epsilon_reg;
  std::sort(grid.begin(), grid.end());
  const auto hessians = reference_hessians(config, data);
  std::vector<RegularizationRow> rows;
  for (double eps : grid) {
    RegularizationRow row;
    row.epsilon_reg = eps;
    row.log_mean_kappa_bound = reference_log_mean_kappa(hessians, eps);
    row.mean_kappa_bound = std::exp(row.log_mean_kappa_bound);
    TrainConfig cfg = newton_config(config);
    cfg.epsilon_reg = eps;
    try {
      TrainLog log = train(cfg, data);
      double sum = 0.0;
      for (const auto& rec : log.records) {
        std::vector<double> logs;
        for (const auto& lr : rec.layers) logs.push_back(lr.log_kappa_bound);
        sum += log_mean_exp(logs);
      }
      row.trajectory_log_mean_kappa_bound =
          log.records.empty() ? 0.0 : sum / static_cast<double>(log.records.size());
      row.steps = log.records.size();
      row.final_loss = final_loss(log);
      row.train_accuracy = final_accuracy(log);
      row.test_accuracy = log.test_accuracy;
      row.diverged = !std::isfinite(row.final_loss);
    } catch (const SingularHessian&) {
      row.diverged = true;
      row.final_loss = std::numeric_limits<double>::quiet_NaN();
      row.trajectory_log_mean_kappa_bound = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_regularization(const std::vector<RegularizationRow>& rows, const std::filesystem::path& path) {
  CsvWriter csv(path, {"epsilon_reg", "mean_kappa_bound", "log_mean_kappa_bound", "trajectory_log_mean_kappa_bound",
                       "steps", "final_loss", "train_accuracy", "test_accuracy", "diverged"});
  for (const auto& r : rows) {
    csv.row({format_real(r.epsilon_reg), format_real(r.mean_kappa_bound), format_real(r.log_mean_kappa_bound),
             format_real(r.trajectory_log_mean_kappa_bound), format_size(r.steps), format_real(r.final_loss),
             format_real(r.train_accuracy), format_real(r.test_accuracy), r.diverged ? "1" : "0"});
  }
}

// ---------------------------------------------------------------- hessian report

TrainLog hessian_report(const RunConfig& config, const Dataset& data) {
  TrainConfig cfg = newton_config(config);
  cfg.record_sparsity_profile = true;
  cfg.target_loss.reset();
  return train(cfg, data);
}

void write_hessian_report(const TrainLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> header{"step", "layer", "n", "kappa_bound", "log_kappa_bound", "density"};
  for (int p : kSparsityLevels) header.push_back("median_p" + std::to_string(p));
  CsvWriter traj(dir / "hessian_trajectory.csv", header);

  std::vector<std::string> row_header{"step", "layer", "row"};
  for (int p : kSparsityLevels) row_header.push_back("p" + std::to_string(p));
  CsvWriter rows(dir / "hessian_psparsity.csv", row_header);

  for (const auto& rec : log.records) {
    for (const auto& lr : rec.layers) {
      std::vector<std::string> fields{format_size(rec.step), format_size(lr.layer), format_size(lr.n),
                                      format_real(lr.kappa_bound), format_real(lr.log_kappa_bound),
                                      format_real(lr.density)};
      if (!lr.hessian_profile) throw InvalidArgument("write_hessian_report: log has no sparsity profile");
      const auto& prof = lr.hessian_profile->p_sparsity;
      for (int p : kSparsityLevels) {
        std::vector<std::size_t> counts = prof.at(p);
        auto mid = counts.begin() + static_cast<std::ptrdiff_t>(counts.size() / 2);
        std::nth_element(counts.begin(), mid, counts.end());
        fields.push_back(format_size(*mid));
      }
      traj.row(fields);
      for (std::size_t r = 0; r < lr.n; ++r) {
        std::vector<std::string> f{format_size(rec.step), format_size(lr.layer), format_size(r)};
        for (int p : kSparsityLevels) f.push_back(format_size(prof.at(p)[r]));
        rows.row(f);
      }
    }
  }
}

}  // namespace qnewton
