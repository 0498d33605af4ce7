// Command-line front end: training runs, sweeps, dataset generation and
// diagnostics.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "gcrobust/gradcheck_suite.hpp"
#include "gcrobust/selftest.hpp"
#include "gcrobust/svg_plot.hpp"
#include "gcrobust/sweep.hpp"
#include "gcrobust/train.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumerical = 4 };

// Base config from an optional file plus `key=value` overrides.
gcr::RunConfig build_config(const std::string& path, const std::vector<std::string>& overrides) {
  gcr::RunConfig cfg = path.empty() ? gcr::RunConfig{} : gcr::load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw gcr::ConfigError("override '" + kv + "' is not key=value");
    gcr::set_config_value(cfg, gcr::detail::trim(kv.substr(0, eq)), gcr::detail::trim(kv.substr(eq + 1)));
  }
  gcr::validate(cfg);
  return cfg;
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(gcr::detail::to_double("--values", gcr::detail::trim(tok)));
  return out;
}

void print_epoch(const gcr::EpochRecord& r) {
  std::printf("epoch %4d  loss %.4f  train %.3f  test %.3f  clean %.3f  noisy(assigned) %.3f  energy %.4g\n", r.epoch,
              r.train_loss, r.train_acc, r.test_acc, r.clean_train_acc, r.noisy_acc_vs_assigned, r.dirichlet_energy);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gcrobust: graph classification under label noise with Dirichlet-energy diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "train one configuration");
  run->add_option("-c,--config", config_path, "config file (key = value)");
  run->add_option("-s,--set", overrides, "override, key=value (repeatable)");
  run->add_option("-o,--out", out_dir, "output directory")->required();
  run->add_flag("-q,--quiet", quiet, "no per-epoch output");

  std::string axis;
  std::string values;
  int replicates = 1;
  auto* sweep = app.add_subcommand("sweep", "one run per axis value, plus summary.csv");
  sweep->add_option("-c,--config", config_path, "base config file");
  sweep->add_option("-s,--set", overrides, "override, key=value (repeatable)");
  sweep->add_option("-a,--axis", axis, "noise_rate | dataset_size | hidden | epochs")->required();
  sweep->add_option("-v,--values", values, "comma separated values")->required();
  sweep->add_option("--seeds", replicates, "replicates per value (seeds base, base+1, ...)")->check(CLI::PositiveNumber);
  sweep->add_option("-o,--out", out_dir, "output directory")->required();

  std::string ds_name = "SYNTH";
  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic dataset in the benchmark text format");
  gen->add_option("-c,--config", config_path, "config file (synthetic.* keys are used)");
  gen->add_option("-s,--set", overrides, "override, key=value (repeatable)");
  gen->add_option("-o,--out", out_dir, "output directory")->required();
  gen->add_option("-n,--name", ds_name, "dataset file prefix");

  std::string run_dir;
  std::string checkpoint_path;
  std::string energy_method = "spatial";
  int energy_layer = -2;
  auto* inspect = app.add_subcommand("inspect-energy", "dataset Dirichlet energy of a saved model");
  inspect->add_option("-r,--run", run_dir, "run directory (config.resolved + checkpoint.txt)");
  inspect->add_option("-c,--config", config_path, "config file (default: <run>/config.resolved)");
  inspect->add_option("-k,--checkpoint", checkpoint_path, "checkpoint file (default: <run>/checkpoint.txt)");
  inspect->add_option("-l,--layer", energy_layer, "-1 last layer, 0 input embedding, l layer l");
  inspect->add_option("-m,--method", energy_method, "spatial | spectral")->check(CLI::IsMember({"spatial", "spectral"}));

  gcr::GradcheckSuiteOptions gc_opts;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every layer and loss");
  gradcheck->add_option("--instances", gc_opts.instances, "random instances per component");
  gradcheck->add_option("--seed", gc_opts.seed, "seed");
  double gc_tol = 1e-4;
  gradcheck->add_option("--tol", gc_tol, "max relative error");

  std::vector<std::string> plot_runs;
  auto* plot = app.add_subcommand("plot", "SVG charts from one or more run directories");
  plot->add_option("runs", plot_runs, "run directories")->required();
  plot->add_option("-o,--out", out_dir, "output directory (default: first run)");

  std::uint64_t selftest_seed = 7;
  auto* selftest = app.add_subcommand("selftest", "energy identity, spectral and projection property checks");
  selftest->add_option("--seed", selftest_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) {
      const gcr::RunConfig cfg = build_config(config_path, overrides);
      gcr::TrainOptions opts;
      if (!quiet) opts.on_epoch = print_epoch;
      const gcr::RunResult res = gcr::train(cfg, fs::path(out_dir), opts);
      std::printf("train size %zu, noisy %zu (realized rate %.4f)\n", res.clean_count + res.noisy_count,
                  res.noisy_count, res.realized_noise_rate);
      if (cfg.projection.target != gcr::ProjectionTarget::None) {
        std::printf("min eigenvalue of projected matrices: %.3g\n", res.min_projected_eigenvalue);
      }
      std::printf("wrote %s\n", out_dir.c_str());
    } else if (*sweep) {
      const gcr::RunConfig cfg = build_config(config_path, overrides);
      const auto rows = gcr::sweep(cfg, gcr::parse_sweep_axis(axis), parse_values(values), out_dir, replicates,
                                   [](const gcr::SweepRow& r) { std::printf("%s\n", gcr::format_sweep_row(r).c_str()); });
      std::size_t failed = 0;
      for (const auto& r : rows) failed += !r.ok;
      std::printf("%zu runs, %zu failed; summary at %s\n", rows.size(), failed, (fs::path(out_dir) / "summary.csv").c_str());
      if (failed) return kFailure;
    } else if (*gen) {
      const gcr::RunConfig cfg = build_config(config_path, overrides);
      const gcr::GraphDataset ds = gcr::gen_synthetic(cfg.synthetic);
      gcr::write_tu_dataset(ds, out_dir, ds_name);
      std::printf("wrote %zu graphs (%d classes) to %s\n", ds.size(), ds.num_classes, out_dir.c_str());
    } else if (*inspect) {
      if (config_path.empty() && run_dir.empty()) throw gcr::ConfigError("need --run or --config");
      if (config_path.empty()) config_path = (fs::path(run_dir) / "config.resolved").string();
      if (checkpoint_path.empty()) {
        if (run_dir.empty()) throw gcr::ConfigError("need --run or --checkpoint");
        checkpoint_path = (fs::path(run_dir) / "checkpoint.txt").string();
      }
      gcr::RunConfig cfg = gcr::load_config(config_path);
      if (energy_layer != -2) cfg.energy_layer = energy_layer;
      gcr::validate(cfg);
      const gcr::GraphDataset ds = gcr::prepare_dataset(cfg);
      gcr::Model model = gcr::load_checkpoint(checkpoint_path);
      if (!(model.config() == gcr::model_config_for(cfg, ds))) {
        throw gcr::ConfigError("checkpoint architecture does not match the config");
      }
      const auto method = energy_method == "spectral" ? gcr::EnergyMethod::Spectral : gcr::EnergyMethod::Spatial;
      auto report = [&](const char* name, const std::vector<int>& idx) {
        if (idx.empty()) {
          std::printf("%-6s  (empty)\n", name);
          return;
        }
        // Recompute the representations, then hand them to dataset_energy.
        std::vector<gcr::Matrix> reps;
        std::vector<gcr::Representation> views;
        for (std::size_t start = 0; start < idx.size(); start += 64) {
          const std::size_t stop = std::min(idx.size(), start + 64);
          const std::span<const int> chunk(idx.data() + start, stop - start);
          const gcr::BatchInput batch = gcr::make_batch(ds, chunk, model.config());
          gcr::Tape tape(gcr::Tape::Mode::Inference);
          const gcr::ForwardResult fwd = model.forward(tape, batch);
          const gcr::Matrix& z = cfg.energy_layer < 0
                                     ? tape.value(fwd.node_reps)
                                     : tape.value(fwd.layer_outputs.at(static_cast<std::size_t>(cfg.energy_layer)));
          for (std::size_t k = 0; k < chunk.size(); ++k) {
            reps.push_back(z.middleRows(batch.block.component_offsets[k], batch.block.component_sizes[k]));
          }
        }
        for (std::size_t k = 0; k < idx.size(); ++k) views.push_back({&reps[k], &ds.graphs[static_cast<std::size_t>(idx[k])]});
        const gcr::EnergyReport er = gcr::dataset_energy(views, method);
        std::printf("%-6s  graphs %5zu  dataset energy %.10g\n", name, idx.size(), er.dataset_energy);
      };
      std::vector<int> all(ds.size());
      std::iota(all.begin(), all.end(), 0);
      report("train", ds.train_idx);
      report("test", ds.test_idx);
      report("all", all);
    } else if (*gradcheck) {
      bool ok = true;
      for (const auto& c : gcr::run_gradcheck_suite(gc_opts)) {
        const bool pass = c.max_relative_error < gc_tol;
        ok = ok && pass;
        std::printf("%-4s %-32s instances %3d  max rel err %.3e  (%s)\n", pass ? "ok" : "FAIL", c.component.c_str(),
                    c.instances, c.max_relative_error, c.worst.c_str());
      }
      if (!ok) return kNumerical;
    } else if (*plot) {
      std::vector<fs::path> dirs(plot_runs.begin(), plot_runs.end());
      const fs::path out = out_dir.empty() ? dirs.front() : fs::path(out_dir);
      const gcr::PlotReport rep = gcr::plot_runs(dirs, out);
      for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      for (const auto& f : rep.files) std::printf("wrote %s\n", f.c_str());
    } else if (*selftest) {
      bool ok = true;
      for (const auto& r : gcr::run_selftests(selftest_seed)) {
        ok = ok && r.passed;
        std::printf("%-4s %-40s worst %.3e  tol %.0e\n", r.passed ? "ok" : "FAIL", r.name.c_str(), r.worst, r.tolerance);
      }
      if (!ok) return kNumerical;
    }
  } catch (const gcr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const gcr::NumericalError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return kNumerical;
  } catch (const gcr::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
