#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "gcrobust/metrics_io.hpp"
#include "gcrobust/train.hpp"

using namespace gcr;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.synthetic.num_graphs = 60;
  c.hidden = 8;
  c.layers = 2;
  c.epochs = 3;
  c.batch_size = 16;
  c.log_wallclock = false;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gcrobust_train_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> flatten(Model& m) {
  std::vector<double> out;
  for (const Parameter* p : m.state()) out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

}  // namespace

TEST(Train, ZeroEpochsWritesHeaderAndUntrainedCheckpoint) {
  RunConfig c = small_config();
  c.epochs = 0;
  const fs::path dir = scratch("zero");
  RunResult r = train(c, dir);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(slurp(dir / "metrics.csv"), std::string(kMetricsSchema) + "\n" + kMetricsHeader + "\n");
  Model fresh(model_config_for(c, r.dataset), derive_seed(c.seed, "init"));
  Model saved = load_checkpoint(dir / "checkpoint.txt");
  EXPECT_EQ(flatten(saved), flatten(fresh));
  EXPECT_EQ(load_config(dir / "config.resolved"), c);
  fs::remove_all(dir);
}

TEST(Train, SameSeedGivesByteIdenticalOutputs) {
  RunConfig c = small_config();
  c.noise_rate = 0.3;
  c.loss = LossKind::Gcod;
  c.u_dump_every = 1;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  train(c, a);
  train(c, b);
  for (const char* f : {"metrics.csv", "noise.csv", "u.csv", "u_history.csv", "checkpoint.txt", "config.resolved"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  c.seed = 1;
  const fs::path d = scratch("det_c");
  train(c, d);
  EXPECT_NE(slurp(a / "metrics.csv"), slurp(d / "metrics.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(d);
}

TEST(Train, NoiseOnlyInTrainingSplitAndAccountingIdentity) {
  RunConfig c = small_config();
  c.noise_rate = 0.5;
  RunResult r = train(c);
  const GraphDataset& ds = r.dataset;
  for (int i : ds.test_idx) {
    EXPECT_FALSE(ds.noise_mask[i]);
    EXPECT_EQ(ds.assigned_labels[i], ds.true_labels[i]);
  }
  EXPECT_EQ(r.clean_count + r.noisy_count, ds.train_idx.size());
  EXPECT_GT(r.noisy_count, 0u);
  for (const auto& rec : r.records) {
    for (double v : {rec.train_acc, rec.test_acc, rec.clean_train_acc, rec.noisy_acc_vs_assigned, rec.noisy_acc_vs_true}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    // with two classes a noisy sample is right against exactly one of its labels
    EXPECT_NEAR(rec.noisy_acc_vs_assigned + rec.noisy_acc_vs_true, 1.0, 1e-12);
    EXPECT_GE(rec.dirichlet_energy, 0.0);
  }
}

TEST(Train, EvaluationLeavesParametersUntouched) {
  RunConfig c = small_config();
  RunResult r = train(c);
  const auto before = flatten(r.model);
  evaluate(r.model, r.dataset, r.dataset.train_idx, -1);
  evaluate(r.model, r.dataset, r.dataset.test_idx, 0);
  EXPECT_EQ(flatten(r.model), before);
}

TEST(Train, EpochsStrictlyIncreaseAndCsvMatchesRecords) {
  RunConfig c = small_config();
  c.epochs = 4;
  const fs::path dir = scratch("csv");
  RunResult r = train(c, dir);
  const MetricsTable t = read_metrics(dir / "metrics.csv");
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_TRUE(t.warnings.empty());
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(t.rows[i].epoch, static_cast<int>(i) + 1);
    EXPECT_NEAR(t.rows[i].test_acc, r.records[i].test_acc, 1e-9);
  }
  fs::remove_all(dir);
}

TEST(Train, ProjectionKeepsTargetsPsd) {
  RunConfig c = small_config();
  c.projection = {ProjectionTarget::W2Only, {}, 1};
  RunResult r = train(c);
  EXPECT_GE(r.min_projected_eigenvalue, -1e-10);
  for (const auto& layer : r.model.layers()) EXPECT_GE(min_eigenvalue(layer.w2.value), -1e-10);
}

TEST(Train, GcnAndEnergyLayerOptionsRun) {
  RunConfig c = small_config();
  c.model_kind = LayerKind::GCN;
  c.energy_layer = 0;
  c.train_fraction = 1.0;  // empty test split reports 0 accuracy
  RunResult r = train(c);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records.back().test_acc, 0.0);
}

TEST(Train, InvalidConfigRejected) {
  RunConfig c = small_config();
  c.noise_rate = 2.0;
  EXPECT_THROW(train(c), ConfigError);
  c = small_config();
  c.dataset_source = "tu";
  c.dataset_path = "/nonexistent/dir";
  EXPECT_THROW(train(c), DataError);
}

TEST(Train, DivergenceAbortsWithEpochAndStep) {
  RunConfig c = small_config();
  c.lr = 1e300;
  try {
    train(c);
    FAIL() << "expected a numerical abort";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1 step"), std::string::npos) << e.what();
  }
}
