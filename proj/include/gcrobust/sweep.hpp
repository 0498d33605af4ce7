#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gcrobust/config.hpp"
#include "gcrobust/train.hpp"

namespace gcr {

enum class SweepAxis { NoiseRate, DatasetSize, Hidden, Epochs };

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::NoiseRate: return "noise_rate";
    case SweepAxis::DatasetSize: return "dataset_size";
    case SweepAxis::Hidden: return "hidden";
    case SweepAxis::Epochs: return "epochs";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "noise_rate") return SweepAxis::NoiseRate;
  if (s == "dataset_size") return SweepAxis::DatasetSize;
  if (s == "hidden") return SweepAxis::Hidden;
  if (s == "epochs") return SweepAxis::Epochs;
  throw ConfigError("unknown sweep axis '" + s + "' (noise_rate|dataset_size|hidden|epochs)");
}

/// Returns `base` with the axis set to `value`. dataset_size is the number
/// of synthetic graphs, or the subsample fraction for directory datasets.
inline RunConfig apply_axis(RunConfig base, SweepAxis axis, double value) {
  auto integral = [&](const char* what) {
    if (value != static_cast<double>(static_cast<long long>(value))) {
      throw ConfigError(std::string("sweep value for ") + what + " must be an integer");
    }
    return static_cast<int>(value);
  };
  switch (axis) {
    case SweepAxis::NoiseRate: base.noise_rate = value; break;
    case SweepAxis::DatasetSize:
      if (base.dataset_source == "tu") {
        base.subsample_fraction = value;
      } else {
        base.synthetic.num_graphs = integral("dataset_size");
      }
      break;
    case SweepAxis::Hidden: base.hidden = integral("hidden"); break;
    case SweepAxis::Epochs: base.epochs = integral("epochs"); break;
  }
  validate(base);
  return base;
}

inline constexpr const char* kSummaryHeader =
    "axis,value,seed,status,final_test_acc,final_energy,peak_memorization,run_dir,message";

struct SweepRow {
  SweepAxis axis{};
  double value = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  double final_test_acc = 0.0;
  double final_energy = 0.0;
  double peak_memorization = 0.0;
  std::string run_dir;
  std::string message;
};

inline std::string format_sweep_row(const SweepRow& r) {
  std::string msg = r.message;
  for (char& ch : msg)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.10g,%llu,%s,%.10g,%.10g,%.10g,", to_string(r.axis).c_str(), r.value,
                static_cast<unsigned long long>(r.seed), r.ok ? "ok" : "failed", r.final_test_acc, r.final_energy,
                r.peak_memorization);
  return buf + r.run_dir + "," + msg;
}

/// Runs one sub-run per (value, replicate). Replicate r uses seed
/// base.seed + r, so a single-replicate sweep reproduces plain runs. Sub-run
/// failures are recorded and the sweep moves on.
inline std::vector<SweepRow> sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values,
                                   const std::filesystem::path& out_dir, int replicates = 1,
                                   const std::function<void(const SweepRow&)>& on_row = {}) {
  namespace fs = std::filesystem;
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (replicates < 1) throw ConfigError("sweep replicates must be >= 1");
  std::vector<RunConfig> configs;
  for (double v : values) configs.push_back(apply_axis(base, axis, v));

  fs::create_directories(out_dir);
  std::ofstream summary(out_dir / "summary.csv");
  if (!summary) throw DataError("cannot write summary.csv");
  summary << kSummaryHeader << '\n';
  summary.flush();

  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < values.size(); ++k) {
    for (int r = 0; r < replicates; ++r) {
      RunConfig cfg = configs[k];
      cfg.seed = base.seed + static_cast<std::uint64_t>(r);
      SweepRow row;
      row.axis = axis;
      row.value = values[k];
      row.seed = cfg.seed;
      char name[96];
      std::snprintf(name, sizeof name, "%s_%.10g", to_string(axis).c_str(), values[k]);
      std::string dir = name;
      if (replicates > 1) dir += "_seed" + std::to_string(cfg.seed);
      row.run_dir = dir;
      try {
        const RunResult res = train(cfg, out_dir / dir);
        row.ok = true;
        if (!res.records.empty()) {
          row.final_test_acc = res.records.back().test_acc;
          row.final_energy = res.records.back().dirichlet_energy;
        }
        row.peak_memorization = res.peak_memorization;
      } catch (const std::exception& e) {
        row.ok = false;
        row.message = e.what();
      }
      summary << format_sweep_row(row) << '\n';
      summary.flush();
      if (on_row) on_row(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace gcr
