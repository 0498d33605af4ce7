#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcrobust/adam.hpp"
#include "gcrobust/checkpoint.hpp"
#include "gcrobust/config.hpp"
#include "gcrobust/datasets.hpp"
#include "gcrobust/dirichlet.hpp"
#include "gcrobust/label_noise.hpp"
#include "gcrobust/losses.hpp"
#include "gcrobust/model.hpp"
#include "gcrobust/psd_projection.hpp"

namespace gcr {

inline constexpr const char* kMetricsSchema = "# gcrobust-metrics v1";
inline constexpr const char* kMetricsHeader =
    "epoch,train_loss,train_acc,test_acc,clean_train_acc,noisy_acc_vs_assigned,noisy_acc_vs_true,dirichlet_energy,"
    "wallclock_ms";

/// One row of metrics.csv.
struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;              // against assigned labels
  double test_acc = 0.0;               // against true labels
  double clean_train_acc = 0.0;        // clean training subset
  double noisy_acc_vs_assigned = 0.0;  // memorization of corrupted labels
  double noisy_acc_vs_true = 0.0;
  double dirichlet_energy = 0.0;
  long long wallclock_ms = 0;
};

inline std::string format_metrics_row(const EpochRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%lld", r.epoch, r.train_loss, r.train_acc,
                r.test_acc, r.clean_train_acc, r.noisy_acc_vs_assigned, r.noisy_acc_vs_true, r.dirichlet_energy,
                r.wallclock_ms);
  return buf;
}

/// Loads or generates the dataset, subsamples, splits and injects label
/// noise into the training split.
inline GraphDataset prepare_dataset(const RunConfig& cfg) {
  GraphDataset ds;
  if (cfg.dataset_source == "tu") {
    ds = load_tu_dataset(cfg.dataset_path);
  } else {
    ds = gen_synthetic(cfg.synthetic);
  }
  ds = subsample(ds, cfg.subsample_fraction, derive_seed(cfg.seed, "subsample"));
  if (ds.size() == 0) throw DataError("dataset is empty");
  stratified_split(ds, cfg.train_fraction, derive_seed(cfg.seed, "split"));

  std::vector<int> train_labels;
  for (int i : ds.train_idx) train_labels.push_back(ds.true_labels[static_cast<std::size_t>(i)]);
  const NoiseSpec spec{cfg.noise_kind, cfg.noise_rate, cfg.resolved_noise_seed()};
  const NoisyLabels noisy = inject(train_labels, ds.num_classes, spec);
  std::vector<int> assigned = ds.true_labels;
  for (std::size_t k = 0; k < ds.train_idx.size(); ++k) assigned[static_cast<std::size_t>(ds.train_idx[k])] = noisy.assigned[k];
  ds.set_assigned_labels(std::move(assigned));
  ds.validate();
  return ds;
}

inline ModelConfig model_config_for(const RunConfig& cfg, const GraphDataset& ds) {
  ModelConfig mc;
  mc.kind = cfg.model_kind;
  mc.input_dim = ds.graphs.front().feature_dim();
  mc.hidden = cfg.hidden;
  mc.layers = cfg.layers;
  mc.num_classes = ds.num_classes;
  mc.readout = cfg.readout;
  mc.gcn_propagation = cfg.propagation;
  mc.gin_epsilon = cfg.gin_epsilon;
  mc.train_epsilon = cfg.train_epsilon;
  return mc;
}

inline BatchInput make_batch(const GraphDataset& ds, std::span<const int> indices, const ModelConfig& mc) {
  std::vector<const Graph*> members;
  members.reserve(indices.size());
  for (int i : indices) members.push_back(&ds.graphs[static_cast<std::size_t>(i)]);
  return prepare_batch(block_diagonal_ptrs(members), mc);
}

/// Inference-mode pass over `indices`: predictions, pooled embeddings and
/// per-graph Dirichlet energy of the representations at `energy_layer`
/// (-1 = last layer).
struct Evaluation {
  std::vector<int> predictions;
  Matrix embeddings;
  std::vector<double> energies;

  double mean_energy() const {
    if (energies.empty()) return 0.0;
    return std::accumulate(energies.begin(), energies.end(), 0.0) / static_cast<double>(energies.size());
  }
};

inline Evaluation evaluate(Model& model, const GraphDataset& ds, std::span<const int> indices, int energy_layer = -1,
                           int batch_size = 64) {
  Evaluation ev;
  ev.embeddings.resize(static_cast<Eigen::Index>(indices.size()), model.config().hidden);
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
    const auto chunk = indices.subspan(start, stop - start);
    const BatchInput batch = make_batch(ds, chunk, model.config());
    Tape tape(Tape::Mode::Inference);
    const ForwardResult fwd = model.forward(tape, batch);
    const Matrix& logits = tape.value(fwd.logits);
    const Matrix& reps = energy_layer < 0 ? tape.value(fwd.node_reps)
                                          : tape.value(fwd.layer_outputs.at(static_cast<std::size_t>(energy_layer)));
    ev.embeddings.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(chunk.size())) =
        tape.value(fwd.graph_embeddings);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      Eigen::Index arg = 0;
      logits.row(static_cast<Eigen::Index>(k)).maxCoeff(&arg);
      ev.predictions.push_back(static_cast<int>(arg));
      const Graph& g = ds.graphs[static_cast<std::size_t>(chunk[k])];
      const Matrix z = reps.middleRows(batch.block.component_offsets[k], batch.block.component_sizes[k]);
      ev.energies.push_back(energy_spatial(z, g));
    }
  }
  return ev;
}

struct RunResult {
  std::vector<EpochRecord> records;
  GraphDataset dataset;
  Model model;
  std::optional<GcodState> gcod;
  double realized_noise_rate = 0.0;
  std::size_t noisy_count = 0;
  std::size_t clean_count = 0;
  // Smallest eigenvalue of any projected matrix, checked at every epoch end.
  double min_projected_eigenvalue = std::numeric_limits<double>::infinity();
  double peak_memorization = 0.0;
};

struct TrainOptions {
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Runs a full training job. When `out_dir` is given, writes
/// config.resolved, noise.csv, metrics.csv (flushed every epoch),
/// u.csv / u_history.csv for GCOD runs and checkpoint.txt.
inline RunResult train(const RunConfig& cfg, const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                       const TrainOptions& options = {}) {
  namespace fs = std::filesystem;
  validate(cfg);
  RunResult result;
  result.dataset = prepare_dataset(cfg);
  GraphDataset& ds = result.dataset;
  const ModelConfig mc = model_config_for(cfg, ds);
  result.model = Model(mc, derive_seed(cfg.seed, "init"));
  Model& model = result.model;

  AdamState adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;

  const std::size_t train_size = ds.train_idx.size();
  std::vector<int> train_assigned;
  std::vector<int> train_true;
  for (int i : ds.train_idx) {
    train_assigned.push_back(ds.assigned_labels[static_cast<std::size_t>(i)]);
    train_true.push_back(ds.true_labels[static_cast<std::size_t>(i)]);
  }
  for (std::size_t k = 0; k < train_size; ++k) {
    if (ds.noise_mask[static_cast<std::size_t>(ds.train_idx[k])]) ++result.noisy_count;
  }
  result.clean_count = train_size - result.noisy_count;
  result.realized_noise_rate = train_size ? static_cast<double>(result.noisy_count) / static_cast<double>(train_size) : 0.0;

  if (cfg.loss == LossKind::Gcod) result.gcod.emplace(train_size, ds.num_classes, mc.hidden, cfg.gcod);

  std::ofstream metrics;
  std::ofstream u_history;
  if (out_dir) {
    fs::create_directories(*out_dir);
    {
      std::ofstream resolved(*out_dir / "config.resolved");
      resolved << to_config_text(cfg);
      if (!resolved) throw DataError("cannot write " + (*out_dir / "config.resolved").string());
    }
    {
      std::ofstream noise(*out_dir / "noise.csv");
      noise << "graph_id,true_label,assigned_label,is_noisy\n";
      for (std::size_t i = 0; i < ds.size(); ++i) {
        noise << ds.graphs[i].id() << ',' << ds.true_labels[i] << ',' << ds.assigned_labels[i] << ','
              << (ds.noise_mask[i] ? 1 : 0) << '\n';
      }
      if (!noise) throw DataError("cannot write noise.csv");
    }
    metrics.open(*out_dir / "metrics.csv");
    if (!metrics) throw DataError("cannot write metrics.csv");
    metrics << kMetricsSchema << '\n' << kMetricsHeader << '\n';
    metrics.flush();
    if (result.gcod && cfg.u_dump_every > 0) {
      u_history.open(*out_dir / "u_history.csv");
      u_history << "epoch,graph_id,u_value,is_noisy\n";
    }
  }

  auto dump_u = [&](std::ostream& out, const char* prefix) {
    for (std::size_t k = 0; k < train_size; ++k) {
      const auto gi = static_cast<std::size_t>(ds.train_idx[k]);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.10g", result.gcod->u[k]);
      out << prefix << ds.graphs[gi].id() << ',' << buf << ',' << (ds.noise_mask[gi] ? 1 : 0) << '\n';
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  Rng shuffler(derive_seed(cfg.seed, "shuffle"));
  std::vector<int> order(train_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffler.shuffle(std::span<int>(order));
    double loss_sum = 0.0;
    std::size_t step_in_epoch = 0;
    try {
      for (std::size_t start = 0; start < train_size; start += static_cast<std::size_t>(cfg.batch_size)) {
        ++step_in_epoch;
        const std::size_t stop = std::min(train_size, start + static_cast<std::size_t>(cfg.batch_size));
        std::vector<int> slots(order.begin() + static_cast<std::ptrdiff_t>(start),
                               order.begin() + static_cast<std::ptrdiff_t>(stop));
        std::vector<int> graph_idx;
        std::vector<int> labels;
        for (int s : slots) {
          graph_idx.push_back(ds.train_idx[static_cast<std::size_t>(s)]);
          labels.push_back(train_assigned[static_cast<std::size_t>(s)]);
        }
        const BatchInput batch = make_batch(ds, graph_idx, mc);
        double batch_loss = 0.0;
        if (result.gcod) {
          batch_loss = gcod_step(model, adam, *result.gcod, batch, slots, labels).model_loss;
        } else {
          Tape tape;
          const ForwardResult fwd = model.forward(tape, batch);
          Var loss = cross_entropy(tape, fwd.logits, labels);
          auto params = model.parameters();
          for (Parameter* p : params) p->zero_grad();
          tape.backward(loss);
          adam_step(adam, params);
          for (Parameter* p : params) p->zero_grad();
          batch_loss = tape.value(loss)(0, 0);
        }
        if (cfg.projection.due(adam.step)) apply_policy(model, cfg.projection);
        loss_sum += batch_loss * static_cast<double>(slots.size());
      }
    } catch (const NumericalError& e) {
      throw NumericalError("epoch " + std::to_string(epoch) + " step " + std::to_string(step_in_epoch) + ": " + e.what());
    }

    // Evaluation never records gradients and never touches parameters.
    const Evaluation train_eval = evaluate(model, ds, ds.train_idx, cfg.energy_layer);
    const Evaluation test_eval = evaluate(model, ds, ds.test_idx, cfg.energy_layer);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_size ? loss_sum / static_cast<double>(train_size) : 0.0;
    std::size_t correct = 0, clean_n = 0, clean_ok = 0, noisy_n = 0, noisy_assigned_ok = 0, noisy_true_ok = 0;
    for (std::size_t k = 0; k < train_size; ++k) {
      const int pred = train_eval.predictions[k];
      const bool noisy = ds.noise_mask[static_cast<std::size_t>(ds.train_idx[k])];
      correct += pred == train_assigned[k];
      if (noisy) {
        ++noisy_n;
        noisy_assigned_ok += pred == train_assigned[k];
        noisy_true_ok += pred == train_true[k];
      } else {
        ++clean_n;
        clean_ok += pred == train_assigned[k];
      }
    }
    if (clean_n + noisy_n != train_size) throw std::logic_error("clean/noisy accounting does not cover the training set");
    std::size_t test_ok = 0;
    for (std::size_t k = 0; k < ds.test_idx.size(); ++k) {
      const auto gi = static_cast<std::size_t>(ds.test_idx[k]);
      if (ds.noise_mask[gi] || ds.assigned_labels[gi] != ds.true_labels[gi]) {
        throw std::logic_error("test label corrupted");
      }
      test_ok += test_eval.predictions[k] == ds.true_labels[gi];
    }
    auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    rec.train_acc = ratio(correct, train_size);
    rec.test_acc = ratio(test_ok, ds.test_idx.size());
    rec.clean_train_acc = ratio(clean_ok, clean_n);
    rec.noisy_acc_vs_assigned = ratio(noisy_assigned_ok, noisy_n);
    rec.noisy_acc_vs_true = ratio(noisy_true_ok, noisy_n);
    rec.dirichlet_energy = train_eval.mean_energy();
    if (cfg.log_wallclock) {
      rec.wallclock_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    }
    result.peak_memorization = std::max(result.peak_memorization, rec.noisy_acc_vs_assigned);

    if (result.gcod) {
      refresh_class_stats(*result.gcod, train_eval.embeddings, train_assigned);
      result.gcod->train_accuracy = rec.train_acc;
    }
    if (cfg.projection.target != ProjectionTarget::None) {
      result.min_projected_eigenvalue =
          std::min(result.min_projected_eigenvalue, min_targeted_eigenvalue(model, cfg.projection));
    }

    result.records.push_back(rec);
    if (metrics.is_open()) {
      metrics << format_metrics_row(rec) << '\n';
      metrics.flush();
      if (!metrics) throw DataError("failed writing metrics.csv");
    }
    if (u_history.is_open() && epoch % cfg.u_dump_every == 0) {
      dump_u(u_history, (std::to_string(epoch) + ",").c_str());
      u_history.flush();
    }
    if (options.on_epoch) options.on_epoch(rec);
  }

  if (out_dir) {
    if (result.gcod) {
      std::ofstream u(*out_dir / "u.csv");
      u << "graph_id,u_value,is_noisy\n";
      dump_u(u, "");
      if (!u) throw DataError("cannot write u.csv");
    }
    save_checkpoint(model, *out_dir / "checkpoint.txt");
  }
  return result;
}

}  // namespace gcr
