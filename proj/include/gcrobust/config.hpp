#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcrobust/datasets.hpp"
#include "gcrobust/label_noise.hpp"
#include "gcrobust/losses.hpp"
#include "gcrobust/model.hpp"
#include "gcrobust/psd_projection.hpp"

namespace gcr {

enum class LossKind { CrossEntropy, Gcod };

inline std::string to_string(LossKind k) { return k == LossKind::CrossEntropy ? "ce" : "gcod"; }

/// Everything that determines a training run. Defaults follow the usual
/// GCN/GIN noisy-label regimen: Adam at lr 1e-3, weight decay 1e-4, batch 32,
/// 5 layers of width 300, u learning rate 1.
struct RunConfig {
  // data
  std::string dataset_source = "synthetic";  // synthetic | tu
  std::string dataset_path;
  double subsample_fraction = 1.0;
  SyntheticSpec synthetic;
  double train_fraction = 0.8;

  // model
  LayerKind model_kind = LayerKind::GIN;
  int layers = 5;
  int hidden = 300;
  std::optional<ReadoutMode> readout;
  Propagation propagation = Propagation::NormAdjacency;
  double gin_epsilon = 0.0;
  bool train_epsilon = false;

  // optimisation
  double lr = 0.001;
  double weight_decay = 1e-4;
  int batch_size = 32;
  int epochs = 500;
  std::uint64_t seed = 0;

  // loss
  LossKind loss = LossKind::CrossEntropy;
  GcodConfig gcod;
  int u_dump_every = 10;

  // label noise (training split only)
  NoiseKind noise_kind = NoiseKind::Symmetric;
  double noise_rate = 0.0;
  std::optional<std::uint64_t> noise_seed;  // unset: derived from seed

  ProjectionPolicy projection;

  int energy_layer = -1;  // -1: last GNN layer; 0: input embedding; l: layer l
  bool log_wallclock = true;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  std::uint64_t resolved_noise_seed() const { return noise_seed ? *noise_seed : derive_seed(seed, "noise"); }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

inline long long to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return i;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  if (v.empty() || v[0] == '-') throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  const unsigned long long i = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return i;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

struct ConfigField {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline std::string bool_str(bool b) { return b ? "true" : "false"; }

inline const std::vector<ConfigField>& config_fields() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::vector<ConfigField> fields = {
      {"dataset.source", [](const C& c) { return c.dataset_source; },
       [](C& c, S v) {
         if (v != "synthetic" && v != "tu") throw ConfigError("dataset.source: expected synthetic|tu");
         c.dataset_source = v;
       }},
      {"dataset.path", [](const C& c) { return c.dataset_path; }, [](C& c, S v) { c.dataset_path = v; }},
      {"dataset.subsample_fraction", [](const C& c) { return format_double(c.subsample_fraction); },
       [](C& c, S v) { c.subsample_fraction = to_double("dataset.subsample_fraction", v); }},
      {"dataset.train_fraction", [](const C& c) { return format_double(c.train_fraction); },
       [](C& c, S v) { c.train_fraction = to_double("dataset.train_fraction", v); }},
      {"synthetic.num_graphs", [](const C& c) { return std::to_string(c.synthetic.num_graphs); },
       [](C& c, S v) { c.synthetic.num_graphs = static_cast<int>(to_int("synthetic.num_graphs", v)); }},
      {"synthetic.classes", [](const C& c) { return std::to_string(c.synthetic.classes); },
       [](C& c, S v) { c.synthetic.classes = static_cast<int>(to_int("synthetic.classes", v)); }},
      {"synthetic.min_nodes", [](const C& c) { return std::to_string(c.synthetic.min_nodes); },
       [](C& c, S v) { c.synthetic.min_nodes = static_cast<int>(to_int("synthetic.min_nodes", v)); }},
      {"synthetic.max_nodes", [](const C& c) { return std::to_string(c.synthetic.max_nodes); },
       [](C& c, S v) { c.synthetic.max_nodes = static_cast<int>(to_int("synthetic.max_nodes", v)); }},
      {"synthetic.edge_prob", [](const C& c) { return format_double(c.synthetic.edge_prob); },
       [](C& c, S v) { c.synthetic.edge_prob = to_double("synthetic.edge_prob", v); }},
      {"synthetic.motifs_per_graph", [](const C& c) { return std::to_string(c.synthetic.motifs_per_graph); },
       [](C& c, S v) { c.synthetic.motifs_per_graph = static_cast<int>(to_int("synthetic.motifs_per_graph", v)); }},
      {"synthetic.max_degree_feature", [](const C& c) { return std::to_string(c.synthetic.max_degree_feature); },
       [](C& c, S v) { c.synthetic.max_degree_feature = static_cast<int>(to_int("synthetic.max_degree_feature", v)); }},
      {"synthetic.seed", [](const C& c) { return std::to_string(c.synthetic.seed); },
       [](C& c, S v) { c.synthetic.seed = to_u64("synthetic.seed", v); }},
      {"model.kind", [](const C& c) { return to_string(c.model_kind); },
       [](C& c, S v) {
         if (v == "gin") c.model_kind = LayerKind::GIN;
         else if (v == "gcn") c.model_kind = LayerKind::GCN;
         else throw ConfigError("model.kind: expected gin|gcn");
       }},
      {"model.layers", [](const C& c) { return std::to_string(c.layers); },
       [](C& c, S v) { c.layers = static_cast<int>(to_int("model.layers", v)); }},
      {"model.hidden", [](const C& c) { return std::to_string(c.hidden); },
       [](C& c, S v) { c.hidden = static_cast<int>(to_int("model.hidden", v)); }},
      {"model.readout", [](const C& c) { return c.readout ? to_string(*c.readout) : std::string("auto"); },
       [](C& c, S v) {
         if (v == "auto") c.readout.reset();
         else if (v == "sum") c.readout = ReadoutMode::Sum;
         else if (v == "mean") c.readout = ReadoutMode::Mean;
         else throw ConfigError("model.readout: expected auto|sum|mean");
       }},
      {"model.propagation", [](const C& c) { return to_string(c.propagation); },
       [](C& c, S v) {
         if (v == "norm_adjacency") c.propagation = Propagation::NormAdjacency;
         else if (v == "laplacian") c.propagation = Propagation::Laplacian;
         else throw ConfigError("model.propagation: expected norm_adjacency|laplacian");
       }},
      {"model.gin_epsilon", [](const C& c) { return format_double(c.gin_epsilon); },
       [](C& c, S v) { c.gin_epsilon = to_double("model.gin_epsilon", v); }},
      {"model.train_epsilon", [](const C& c) { return bool_str(c.train_epsilon); },
       [](C& c, S v) { c.train_epsilon = to_bool("model.train_epsilon", v); }},
      {"train.lr", [](const C& c) { return format_double(c.lr); }, [](C& c, S v) { c.lr = to_double("train.lr", v); }},
      {"train.weight_decay", [](const C& c) { return format_double(c.weight_decay); },
       [](C& c, S v) { c.weight_decay = to_double("train.weight_decay", v); }},
      {"train.batch_size", [](const C& c) { return std::to_string(c.batch_size); },
       [](C& c, S v) { c.batch_size = static_cast<int>(to_int("train.batch_size", v)); }},
      {"train.epochs", [](const C& c) { return std::to_string(c.epochs); },
       [](C& c, S v) { c.epochs = static_cast<int>(to_int("train.epochs", v)); }},
      {"train.seed", [](const C& c) { return std::to_string(c.seed); }, [](C& c, S v) { c.seed = to_u64("train.seed", v); }},
      {"train.log_wallclock", [](const C& c) { return bool_str(c.log_wallclock); },
       [](C& c, S v) { c.log_wallclock = to_bool("train.log_wallclock", v); }},
      {"loss.kind", [](const C& c) { return to_string(c.loss); },
       [](C& c, S v) {
         if (v == "ce") c.loss = LossKind::CrossEntropy;
         else if (v == "gcod") c.loss = LossKind::Gcod;
         else throw ConfigError("loss.kind: expected ce|gcod");
       }},
      {"gcod.u_lr", [](const C& c) { return format_double(c.gcod.u_lr); },
       [](C& c, S v) { c.gcod.u_lr = to_double("gcod.u_lr", v); }},
      {"gcod.w_ce", [](const C& c) { return format_double(c.gcod.w_ce); },
       [](C& c, S v) { c.gcod.w_ce = to_double("gcod.w_ce", v); }},
      {"gcod.w_u", [](const C& c) { return format_double(c.gcod.w_u); },
       [](C& c, S v) { c.gcod.w_u = to_double("gcod.w_u", v); }},
      {"gcod.w_kl", [](const C& c) { return format_double(c.gcod.w_kl); },
       [](C& c, S v) { c.gcod.w_kl = to_double("gcod.w_kl", v); }},
      {"gcod.soft_targets", [](const C& c) { return bool_str(c.gcod.soft_targets); },
       [](C& c, S v) { c.gcod.soft_targets = to_bool("gcod.soft_targets", v); }},
      {"gcod.accuracy_scaling", [](const C& c) { return bool_str(c.gcod.accuracy_scaling); },
       [](C& c, S v) { c.gcod.accuracy_scaling = to_bool("gcod.accuracy_scaling", v); }},
      {"gcod.u_dump_every", [](const C& c) { return std::to_string(c.u_dump_every); },
       [](C& c, S v) { c.u_dump_every = static_cast<int>(to_int("gcod.u_dump_every", v)); }},
      {"noise.kind", [](const C& c) { return to_string(c.noise_kind); },
       [](C& c, S v) {
         if (v == "symmetric") c.noise_kind = NoiseKind::Symmetric;
         else if (v == "pairflip") c.noise_kind = NoiseKind::PairFlip;
         else throw ConfigError("noise.kind: expected symmetric|pairflip");
       }},
      {"noise.rate", [](const C& c) { return format_double(c.noise_rate); },
       [](C& c, S v) { c.noise_rate = to_double("noise.rate", v); }},
      {"noise.seed", [](const C& c) { return c.noise_seed ? std::to_string(*c.noise_seed) : std::string("auto"); },
       [](C& c, S v) {
         if (v == "auto") c.noise_seed.reset();
         else c.noise_seed = to_u64("noise.seed", v);
       }},
      {"projection.target", [](const C& c) { return to_string(c.projection.target); },
       [](C& c, S v) {
         if (v == "none") c.projection.target = ProjectionTarget::None;
         else if (v == "w2_only") c.projection.target = ProjectionTarget::W2Only;
         else if (v == "w1_and_w2") c.projection.target = ProjectionTarget::W1AndW2;
         else throw ConfigError("projection.target: expected none|w2_only|w1_and_w2");
       }},
      {"projection.frequency", [](const C& c) { return std::to_string(c.projection.frequency); },
       [](C& c, S v) { c.projection.frequency = static_cast<int>(to_int("projection.frequency", v)); }},
      {"projection.layers",
       [](const C& c) {
         if (c.projection.layers.empty()) return std::string("all");
         std::string s;
         for (std::size_t i = 0; i < c.projection.layers.size(); ++i) s += (i ? "," : "") + std::to_string(c.projection.layers[i]);
         return s;
       },
       [](C& c, S v) {
         c.projection.layers.clear();
         if (v == "all") return;
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.projection.layers.push_back(static_cast<int>(to_int("projection.layers", trim(item))));
       }},
      {"energy.layer", [](const C& c) { return c.energy_layer < 0 ? std::string("last") : std::to_string(c.energy_layer); },
       [](C& c, S v) { c.energy_layer = v == "last" ? -1 : static_cast<int>(to_int("energy.layer", v)); }},
  };
  return fields;
}

}  // namespace detail

/// Range checks on every numeric field.
inline void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.dataset_source == "tu" && c.dataset_path.empty()) fail("dataset.path is required for dataset.source = tu");
  if (!(c.subsample_fraction > 0.0 && c.subsample_fraction <= 1.0)) fail("dataset.subsample_fraction must lie in (0, 1]");
  if (!(c.train_fraction > 0.0 && c.train_fraction <= 1.0)) fail("dataset.train_fraction must lie in (0, 1]");
  if (c.layers < 1) fail("model.layers must be >= 1");
  if (c.hidden < 1) fail("model.hidden must be >= 1");
  if (!(c.lr > 0.0)) fail("train.lr must be > 0");
  if (!(c.weight_decay >= 0.0)) fail("train.weight_decay must be >= 0");
  if (c.batch_size < 1) fail("train.batch_size must be >= 1");
  if (c.epochs < 0) fail("train.epochs must be >= 0");
  if (!(c.noise_rate >= 0.0 && c.noise_rate <= 1.0)) fail("noise.rate must lie in [0, 1]");
  if (c.projection.frequency < 1) fail("projection.frequency must be >= 1");
  for (int l : c.projection.layers)
    if (l < 0 || l >= c.layers) fail("projection.layers: layer index out of range");
  if (c.energy_layer < -1 || c.energy_layer > c.layers) fail("energy.layer out of range");
  if (!(c.gcod.u_lr >= 0.0)) fail("gcod.u_lr must be >= 0");
  if (c.u_dump_every < 0) fail("gcod.u_dump_every must be >= 0");
  if (c.synthetic.classes < 2) fail("synthetic.classes must be >= 2");
  if (c.synthetic.num_graphs < 1) fail("synthetic.num_graphs must be >= 1");
  if (c.synthetic.min_nodes < 1 || c.synthetic.max_nodes < c.synthetic.min_nodes) fail("synthetic node range invalid");
  if (!(c.synthetic.edge_prob >= 0.0 && c.synthetic.edge_prob <= 1.0)) fail("synthetic.edge_prob must lie in [0, 1]");
}

/// Applies one `key = value` assignment.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : detail::config_fields()) {
    if (key == f.key) {
      f.set(c, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

inline std::string get_config_value(const RunConfig& c, const std::string& key) {
  for (const auto& f : detail::config_fields())
    if (key == f.key) return f.get(c);
  throw ConfigError("unknown config key '" + key + "'");
}

/// Parses flat `key = value` text. `#` starts a comment; blank lines are
/// ignored; unknown keys are errors. Unlisted keys keep their defaults.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Every key in a fixed order; parse_config(to_config_text(c)) == c.
inline std::string to_config_text(const RunConfig& c) {
  std::string out = "# gcrobust run configuration\n";
  for (const auto& f : detail::config_fields()) out += std::string(f.key) + " = " + f.get(c) + "\n";
  return out;
}

}  // namespace gcr
