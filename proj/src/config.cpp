#include "qnewton/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "qnewton/error.hpp"

namespace qnewton {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json cost_to_json(const CostModelParams& p) {
  return {{"c1", p.c1}, {"c2", p.c2}, {"q1", p.q1}, {"q2", p.q2}, {"epsilon_prec", p.epsilon_prec}};
}

CostModelParams cost_from_json(const json& j) {
  check_keys(j, {"c1", "c2", "q1", "q2", "epsilon_prec"}, "cost");
  CostModelParams p;
  read(j, "c1", p.c1, "cost");
  read(j, "c2", p.c2, "cost");
  read(j, "q1", p.q1, "cost");
  read(j, "q2", p.q2, "cost");
  read(j, "epsilon_prec", p.epsilon_prec, "cost");
  return p;
}

json dataset_to_json(const DatasetConfig& d) {
  return {{"kind", d.kind},
          {"images", d.images},
          {"labels", d.labels},
          {"downsample_side", d.downsample_side},
          {"test_fraction", d.test_fraction},
          {"seed", d.seed},
          {"samples", d.blobs.samples},
          {"in_dim", d.blobs.in_dim},
          {"classes", d.blobs.classes},
          {"separation", d.blobs.separation},
          {"noise", d.blobs.noise}};
}

DatasetConfig dataset_from_json(const json& j) {
  const std::string w = "dataset";
  check_keys(j,
             {"kind", "images", "labels", "downsample_side", "test_fraction", "seed", "samples", "in_dim", "classes",
              "separation", "noise"},
             w);
  DatasetConfig d;
  read(j, "kind", d.kind, w);
  if (d.kind != "blobs" && d.kind != "idx") throw ConfigError("dataset.kind must be \"blobs\" or \"idx\"");
  read(j, "images", d.images, w);
  read(j, "labels", d.labels, w);
  read(j, "downsample_side", d.downsample_side, w);
  read(j, "test_fraction", d.test_fraction, w);
  read(j, "seed", d.seed, w);
  read(j, "samples", d.blobs.samples, w);
  read(j, "in_dim", d.blobs.in_dim, w);
  read(j, "classes", d.blobs.classes, w);
  read(j, "separation", d.blobs.separation, w);
  read(j, "noise", d.blobs.noise, w);
  d.blobs.test_fraction = d.test_fraction;
  if (d.test_fraction < 0.0 || d.test_fraction >= 1.0) throw ConfigError("dataset.test_fraction must be in [0, 1)");
  return d;
}

}  // namespace

std::string mode_name(const TrainConfig& t) {
  if (t.optimizer == Optimizer::SGD) return "sgd";
  return std::string(to_string(t.scheduler_mode));
}

void apply_mode(TrainConfig& t, const std::string& mode) {
  if (mode == "sgd") {
    t.optimizer = Optimizer::SGD;
    return;
  }
  t.optimizer = Optimizer::Newton;
  if (mode == "hybrid") {
    t.scheduler_mode = SchedulerMode::Hybrid;
  } else if (mode == "classical") {
    t.scheduler_mode = SchedulerMode::ClassicalOnly;
  } else if (mode == "quantum") {
    t.scheduler_mode = SchedulerMode::QuantumOnly;
  } else {
    throw ConfigError("mode must be one of hybrid, classical, quantum, sgd (got \"" + mode + "\")");
  }
}

json to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  json j;
  j["mode"] = mode_name(t);
  j["learning_rate"] = t.learning_rate;
  j["sgd_learning_rate"] = c.sgd_learning_rate;
  j["steps"] = t.steps;
  j["batch_size"] = t.batch_size;
  j["seed"] = t.seed;
  j["fd_step"] = t.fd_step;
  j["epsilon_reg"] = t.epsilon_reg;
  j["target_sparsity"] = t.prune.target_sparsity;
  j["pd_check"] = t.prune.pd_check;
  j["target_loss"] = t.target_loss ? json(*t.target_loss) : json(nullptr);
  j["sgd_time_per_step"] = t.sgd_seconds_per_step;
  j["layer_sizes"] = t.layer_sizes;
  j["output_dir"] = c.output_dir;
  j["cost"] = cost_to_json(t.cost_params);
  j["dataset"] = dataset_to_json(c.dataset);
  j["sweep"] = {{"kappa", c.sweep.kappa},
                {"density", c.sweep.density},
                {"n", c.sweep.n},
                {"sparsity", c.sweep.sparsity},
                {"epsilon_reg", c.sweep.epsilon_reg}};
  j["calibration"] = {{"sizes", c.calibration.sizes}, {"repetitions", c.calibration.repetitions}};
  return j;
}

RunConfig from_json(const json& j) {
  const std::string w = "config";
  check_keys(j,
             {"mode", "learning_rate", "sgd_learning_rate", "steps", "batch_size", "seed", "fd_step", "epsilon_reg",
              "target_sparsity", "pd_check", "target_loss", "sgd_time_per_step", "layer_sizes", "output_dir", "cost",
              "dataset", "sweep", "calibration"},
             w);
  RunConfig c;
  TrainConfig& t = c.train;
  std::string mode = "hybrid";
  read(j, "mode", mode, w);
  apply_mode(t, mode);
  read(j, "learning_rate", t.learning_rate, w);
  read(j, "sgd_learning_rate", c.sgd_learning_rate, w);
  read(j, "steps", t.steps, w);
  read(j, "batch_size", t.batch_size, w);
  read(j, "seed", t.seed, w);
  read(j, "fd_step", t.fd_step, w);
  read(j, "epsilon_reg", t.epsilon_reg, w);
  read(j, "target_sparsity", t.prune.target_sparsity, w);
  read(j, "pd_check", t.prune.pd_check, w);
  if (auto it = j.find("target_loss"); it != j.end() && !it->is_null()) {
    double v = 0.0;
    read(j, "target_loss", v, w);
    t.target_loss = v;
  }
  read(j, "sgd_time_per_step", t.sgd_seconds_per_step, w);
  read(j, "layer_sizes", t.layer_sizes, w);
  read(j, "output_dir", c.output_dir, w);
  if (auto it = j.find("cost"); it != j.end()) t.cost_params = cost_from_json(*it);
  if (auto it = j.find("dataset"); it != j.end()) c.dataset = dataset_from_json(*it);
  if (auto it = j.find("sweep"); it != j.end()) {
    check_keys(*it, {"kappa", "density", "n", "sparsity", "epsilon_reg"}, "sweep");
    read(*it, "kappa", c.sweep.kappa, "sweep");
    read(*it, "density", c.sweep.density, "sweep");
    read(*it, "n", c.sweep.n, "sweep");
    read(*it, "sparsity", c.sweep.sparsity, "sweep");
    read(*it, "epsilon_reg", c.sweep.epsilon_reg, "sweep");
  }
  if (auto it = j.find("calibration"); it != j.end()) {
    check_keys(*it, {"sizes", "repetitions"}, "calibration");
    read(*it, "sizes", c.calibration.sizes, "calibration");
    read(*it, "repetitions", c.calibration.repetitions, "calibration");
  }

  if (t.steps < 1) throw ConfigError("steps must be >= 1");
  if (t.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(t.learning_rate > 0.0) || !(c.sgd_learning_rate > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(t.fd_step > 0.0)) throw ConfigError("fd_step must be > 0");
  if (!(t.epsilon_reg >= 0.0)) throw ConfigError("epsilon_reg must be >= 0");
  if (t.prune.target_sparsity < 0.0 || t.prune.target_sparsity > 1.0)
    throw ConfigError("target_sparsity must be in [0, 1]");
  if (t.layer_sizes.size() < 2) throw ConfigError("layer_sizes needs at least two entries");
  if (c.calibration.repetitions < 1) throw ConfigError("calibration.repetitions must be >= 1");
  try {
    t.cost_params.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("cost: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << to_json(config).dump(2) << '\n';
}

Dataset load_dataset(const RunConfig& config) {
  const DatasetConfig& d = config.dataset;
  Dataset data;
  if (d.kind == "idx") {
    data = load_idx(d.images, d.labels, d.downsample_side);
    split_dataset(data, d.test_fraction, d.seed);
  } else {
    data = make_gaussian_blobs(d.blobs, d.seed);
  }
  if (data.in_dim != config.train.layer_sizes.front()) {
    throw ConfigError("dataset input dimension " + std::to_string(data.in_dim) +
                      " does not match layer_sizes[0] = " + std::to_string(config.train.layer_sizes.front()));
  }
  return data;
}

TrainConfig train_config_for(const RunConfig& config, const std::string& mode) {
  TrainConfig t = config.train;
  apply_mode(t, mode);
  if (t.optimizer == Optimizer::SGD) t.learning_rate = config.sgd_learning_rate;
  return t;
}

}  // namespace qnewton
