// Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance            run every criterion
//   acceptance 1 4 9      run a subset
//
// Criterion 12 reads $GCROBUST_DATA/MUTAG and $GCROBUST_DATA/PROTEINS and is
// skipped when they are absent. Behavioral runs (8-11) write their run
// directories under ./acceptance_runs.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gcrobust/gradcheck_suite.hpp"
#include "gcrobust/selftest.hpp"
#include "gcrobust/train.hpp"

using namespace gcr;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Dense brute-force energy of a block-diagonal batch, built here from the
// raw edge lists without the library's batching code.
double brute_block_energy(const std::vector<Graph>& graphs, const std::vector<Matrix>& zs) {
  int total = 0;
  for (const auto& g : graphs) total += g.num_nodes();
  Matrix a = Matrix::Zero(total, total);
  Matrix z(total, zs.front().cols());
  int off = 0;
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    for (const auto& e : graphs[k].edges()) a(off + e.u, off + e.v) = a(off + e.v, off + e.u) = 1.0;
    z.middleRows(off, graphs[k].num_nodes()) = zs[k];
    off += graphs[k].num_nodes();
  }
  const Vector d = a.rowwise().sum();
  double e = 0.0;
  for (int i = 0; i < total; ++i)
    for (int j = i + 1; j < total; ++j)
      if (a(i, j) != 0.0) e += (z.row(i) / std::sqrt(d(i)) - z.row(j) / std::sqrt(d(j))).squaredNorm();
  return e;
}

Outcome criterion1() {
  Rng rng(101);
  double worst = 0.0, worst_brute = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int t = 0; t < 50; ++t) {
    const int count = 2 + rng.below(5);
    const int dim = 1 + rng.below(4);
    std::vector<Graph> graphs;
    std::vector<Matrix> zs;
    for (int g = 0; g < count; ++g) {
      graphs.push_back(random_graph(rng, 2, 8, dim));
      zs.push_back(random_matrix(rng, graphs.back().num_nodes(), dim));
    }
    std::vector<Representation> reps;
    for (int g = 0; g < count; ++g) reps.push_back({&zs[g], &graphs[g]});
    worst = std::max(worst, block_identity_residual(reps));
    const double avg = dataset_energy(reps).dataset_energy;
    worst_brute = std::max(worst_brute, std::abs(avg - brute_block_energy(graphs, zs) / count) / std::max(1.0, avg));
  }
  const double secs = seconds_since(t0);
  const bool ok = worst < 1e-10 && worst_brute < 1e-10 && secs < 1.0;
  return {ok ? Verdict::Pass : Verdict::Fail, "50 instances, max residual " + sci(worst) + ", vs brute block " +
                                                  sci(worst_brute) + " (tol 1e-10), " + sci(secs) + " s (limit 1 s)"};
}

Outcome criterion2() {
  Rng rng(102);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Graph g = random_graph(rng, 2, 16, 1, rng.uniform(0.15, 0.9));
    const Matrix z = random_matrix(rng, g.num_nodes(), 1 + rng.below(6));
    const double a = energy_spatial(z, g);
    const double b = energy_spectral(z, laplacian_spectrum(g));
    worst = std::max(worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}));
  }
  return {worst < 1e-8 ? Verdict::Pass : Verdict::Fail, "100 pairs, max relative difference " + sci(worst) + " (tol 1e-8)"};
}

Outcome criterion3() {
  Rng rng(103);
  double recon = 0.0, ortho = 0.0;
  for (int t = 0; t < 40; ++t) {
    const int n = t < 8 ? 64 : 1 + rng.below(64);
    Matrix a = random_matrix(rng, n, n);
    a = (a + a.transpose()).eval();
    const EigenDecomposition e = sym_eig(a);
    recon = std::max(recon, (e.reconstruct() - a).norm() / a.norm());
    ortho = std::max(ortho, (e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(n, n)).norm());
  }
  double lo = 0.0, hi = 0.0, first = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Graph g = random_graph(rng, 2, 30, 1, rng.uniform(0.05, 0.9));
    const auto e = laplacian_spectrum(g);
    lo = std::min(lo, e.eigenvalues(0));
    hi = std::max(hi, e.eigenvalues(e.eigenvalues.size() - 1));
    first = std::max(first, std::abs(e.eigenvalues(0)));
  }
  const bool ok = recon < 1e-10 && ortho < 1e-10 && lo >= -1e-10 && hi <= 2.0 + 1e-10 && first < 1e-10;
  return {ok ? Verdict::Pass : Verdict::Fail, "reconstruction " + sci(recon) + ", orthonormality " + sci(ortho) +
                                                  " (tol 1e-10); Laplacian spectra in [" + sci(lo) + ", " + sci(hi) +
                                                  "], max |lambda_0| " + sci(first)};
}

Outcome criterion4() {
  GradcheckSuiteOptions opt;
  opt.instances = 20;
  opt.seed = 104;
  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  int min_instances = 1 << 30;
  const auto cases = run_gradcheck_suite(opt);
  for (const auto& c : cases) {
    ok = ok && c.max_relative_error < 1e-4 && c.instances >= 20;
    min_instances = std::min(min_instances, c.instances);
    if (c.max_relative_error >= worst) {
      worst = c.max_relative_error;
      worst_name = c.component;
    }
  }
  return {ok ? Verdict::Pass : Verdict::Fail, std::to_string(cases.size()) + " components x " +
                                                  std::to_string(min_instances) + " instances, max rel error " +
                                                  sci(worst) + " in " + worst_name + " (tol 1e-4)"};
}

// Nearest PSD matrix to a 2x2 W by scanning rotations, independent of the
// eigensolver.
Matrix brute_psd_2x2(const Matrix& w) {
  const Matrix s = 0.5 * (w + w.transpose());
  auto build = [&](double th) {
    Matrix r(2, 2);
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Matrix d = r.transpose() * s * r;
    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = std::max(0.0, d(0, 0));
    diag(1, 1) = std::max(0.0, d(1, 1));
    return Matrix(r * diag * r.transpose());
  };
  auto cost = [&](double th) { return (build(th) - w).squaredNorm(); };
  const int grid = 20000;
  double best = 0.0, best_cost = cost(0.0);
  for (int k = 1; k < grid; ++k) {
    const double th = std::numbers::pi * k / grid;
    if (const double c = cost(th); c < best_cost) {
      best_cost = c;
      best = th;
    }
  }
  double lo = best - std::numbers::pi / grid, hi = best + std::numbers::pi / grid;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) * 0.381966, m2 = hi - (hi - lo) * 0.381966;
    if (cost(m1) < cost(m2)) hi = m2;
    else lo = m1;
  }
  return build(0.5 * (lo + hi));
}

Outcome criterion5() {
  Rng rng(105);
  double neg = 0.0, idem = 0.0, oracle = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + rng.below(64);
    const Matrix p = project_positive(random_matrix(rng, n, n));
    neg = std::min(neg, min_eigenvalue(p));
    idem = std::max(idem, (project_positive(p) - p).norm());
  }
  for (int t = 0; t < 50; ++t) {
    const Matrix w = 3.0 * random_matrix(rng, 2, 2);
    oracle = std::max(oracle, (project_positive(w) - brute_psd_2x2(w)).norm());
  }
  const bool ok = neg >= -1e-10 && idem < 1e-10 && oracle < 1e-6;
  return {ok ? Verdict::Pass : Verdict::Fail, "min eigenvalue " + sci(neg) + " (>= -1e-10), idempotence " + sci(idem) +
                                                  " (< 1e-10), 2x2 oracle " + sci(oracle) + " (< 1e-6)"};
}

Outcome criterion6() {
  std::vector<int> y(10000);
  for (int i = 0; i < 10000; ++i) y[static_cast<std::size_t>(i)] = i % 5;
  const NoisyLabels sym = inject(y, 5, {NoiseKind::Symmetric, 0.2, 2024});
  const double rate = sym.realized_rate();
  bool ok = rate >= 0.18 && rate <= 0.22;

  const NoisyLabels pf = inject(y, 5, {NoiseKind::PairFlip, 0.3, 2024});
  const Matrix conf = confusion_estimate(y, pf.assigned, 5);
  double pattern_err = 0.0;
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) {
      const double expect = c == r ? 0.7 : (c == (r + 1) % 5 ? 0.3 : 0.0);
      const double tol = expect == 0.0 ? 0.0 : 0.05;
      pattern_err = std::max(pattern_err, std::abs(conf(r, c) - expect) - tol);
    }
  ok = ok && pattern_err <= 0.0;

  auto serialize = [](const NoisyLabels& n) {
    std::string s;
    for (std::size_t i = 0; i < n.assigned.size(); ++i) s += std::to_string(n.assigned[i]) + (n.noise_mask[i] ? "*" : ",");
    return s;
  };
  const bool same = serialize(sym) == serialize(inject(y, 5, {NoiseKind::Symmetric, 0.2, 2024})) &&
                    serialize(pf) == serialize(inject(y, 5, {NoiseKind::PairFlip, 0.3, 2024}));
  ok = ok && same;
  return {ok ? Verdict::Pass : Verdict::Fail, "symmetric 0.2 realized " + sci(rate) + " (in [0.18, 0.22]); pairflip " +
                                                  (pattern_err <= 0.0 ? "c->c+1 pattern holds" : "pattern broken") +
                                                  "; reseeded output " + (same ? "byte-identical" : "differs")};
}

Outcome criterion7() {
  Rng rng(107);
  // (a) disabled terms reduce to cross entropy
  double ce_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 1 + rng.below(16), C = 2 + rng.below(4);
    const Matrix z = 3.0 * random_matrix(rng, n, C);
    const Matrix emb = random_matrix(rng, n, 5);
    std::vector<int> y;
    for (int i = 0; i < n; ++i) y.push_back(rng.below(C));
    GcodConfig cfg;
    cfg.w_kl = 0.0;
    cfg.soft_targets = false;
    GcodState state(static_cast<std::size_t>(n), C, 5, cfg);
    state.train_accuracy = rng.uniform(0.0, 1.0);
    const std::vector<double> u(static_cast<std::size_t>(n), 0.0);
    Tape tape;
    Var logits = tape.constant(z);
    const GcodTerms terms = gcod_terms(tape, logits, emb, y, u, state);
    ce_gap = std::max(ce_gap, std::abs(tape.value(terms.model_loss)(0, 0) - tape.value(cross_entropy(tape, logits, y))(0, 0)));
  }

  // (b) u stays in [0, 1] through a noisy training run
  RunConfig rc;
  rc.synthetic.num_graphs = 120;
  rc.hidden = 16;
  rc.layers = 3;
  rc.epochs = 15;
  rc.noise_rate = 0.4;
  rc.loss = LossKind::Gcod;
  rc.gcod.u_lr = 5.0;
  rc.log_wallclock = false;
  const RunResult run = train(rc);
  double u_lo = 1.0, u_hi = 0.0;
  for (double v : run.gcod->u) {
    u_lo = std::min(u_lo, v);
    u_hi = std::max(u_hi, v);
  }
  const bool u_ok = u_lo >= 0.0 && u_hi <= 1.0 && u_hi > 0.0;

  // (c) separation: reweighting one objective leaves the other's update
  // bit-identical.
  ModelConfig mc;
  mc.input_dim = 4;
  mc.hidden = 6;
  mc.layers = 2;
  mc.num_classes = 3;
  std::vector<Graph> graphs;
  std::vector<int> labels, slots;
  for (int i = 0; i < 6; ++i) {
    graphs.push_back(random_graph(rng, 3, 7, 4));
    labels.push_back(i % 3);
    slots.push_back(i);
  }
  const BatchInput batch = prepare_batch(block_diagonal(graphs), mc);
  auto step_with = [&](double w_u, double w_ce) {
    GcodConfig cfg;
    cfg.w_u = w_u;
    cfg.w_ce = w_ce;
    GcodState state(6, 3, 6, cfg);
    state.u = {0.1, 0.3, 0.5, 0.7, 0.9, 0.2};
    state.train_accuracy = 0.4;
    Model model(mc, 5);
    AdamState adam;
    gcod_step(model, adam, state, batch, slots, labels);
    std::vector<double> params;
    for (const Parameter* p : model.state()) params.insert(params.end(), p->value.data(), p->value.data() + p->value.size());
    return std::make_pair(params, state.u);
  };
  const auto base = step_with(1.0, 1.0);
  const auto more_u = step_with(3.0, 1.0);
  const auto more_ce = step_with(1.0, 3.0);
  const bool model_blind_to_u = base.first == more_u.first;
  const bool u_blind_to_model = base.second == more_ce.second && base.second != more_u.second;

  const bool ok = ce_gap <= 1e-12 && u_ok && model_blind_to_u && u_blind_to_model;
  return {ok ? Verdict::Pass : Verdict::Fail,
          "disabled-terms gap " + sci(ce_gap) + " (tol 1e-12); u range [" + sci(u_lo) + ", " + sci(u_hi) + "]; " +
              "model update " + (model_blind_to_u ? "independent of" : "DEPENDS ON") + " u-objective weight, u update " +
              (u_blind_to_model ? "independent of" : "DEPENDS ON") + " model-objective weight"};
}

// ---- behavioral runs -------------------------------------------------------

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

RunConfig desk_config(std::uint64_t seed) {
  RunConfig c;
  c.synthetic.num_graphs = 500;
  c.synthetic.classes = 2;
  c.model_kind = LayerKind::GIN;
  c.layers = 5;
  c.hidden = 64;
  c.epochs = 500;
  c.seed = seed;
  c.log_wallclock = false;
  return c;
}

struct Summary {
  std::vector<EpochRecord> finals;
  std::vector<double> energy_at_20;
  double min_projected = std::numeric_limits<double>::infinity();
  std::vector<std::string> errors;

  double mean(double EpochRecord::*field) const {
    double s = 0.0;
    for (const auto& r : finals) s += r.*field;
    return finals.empty() ? 0.0 : s / static_cast<double>(finals.size());
  }
};

std::map<std::string, Summary> g_runs;

const Summary& behavioral(const std::string& name, const std::function<void(RunConfig&)>& tweak) {
  if (auto it = g_runs.find(name); it != g_runs.end()) return it->second;
  Summary s;
  for (std::uint64_t seed : kSeeds) {
    RunConfig c = desk_config(seed);
    tweak(c);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const RunResult r = train(c, fs::path("acceptance_runs") / (name + "_seed" + std::to_string(seed)));
      s.finals.push_back(r.records.back());
      s.energy_at_20.push_back(r.records.at(19).dirichlet_energy);
      s.min_projected = std::min(s.min_projected, r.min_projected_eigenvalue);
      const auto& f = r.records.back();
      std::printf("    [%s seed %llu] train %.3f test %.3f noisy(assigned) %.3f energy %.4g (epoch 20: %.4g)  %.0f s\n",
                  name.c_str(), static_cast<unsigned long long>(seed), f.train_acc, f.test_acc, f.noisy_acc_vs_assigned,
                  f.dirichlet_energy, r.records.at(19).dirichlet_energy, seconds_since(t0));
    } catch (const std::exception& e) {
      s.errors.push_back(e.what());
      std::printf("    [%s seed %llu] error: %s\n", name.c_str(), static_cast<unsigned long long>(seed), e.what());
    }
    std::fflush(stdout);
  }
  return g_runs.emplace(name, std::move(s)).first->second;
}

const Summary& ce_clean() { return behavioral("ce_clean", [](RunConfig&) {}); }
const Summary& ce_noisy() {
  return behavioral("ce_noise30", [](RunConfig& c) { c.noise_rate = 0.3; });
}
const Summary& gcod_noisy() {
  return behavioral("gcod_noise30", [](RunConfig& c) {
    c.noise_rate = 0.3;
    c.loss = LossKind::Gcod;
  });
}
const Summary& ce_w2_clean() {
  return behavioral("ce_w2_clean", [](RunConfig& c) { c.projection = {ProjectionTarget::W2Only, {}, 1}; });
}
const Summary& gcod_clean() {
  return behavioral("gcod_clean", [](RunConfig& c) { c.loss = LossKind::Gcod; });
}

bool complete(const Summary& s) { return s.errors.empty() && s.finals.size() == kSeeds.size(); }

Outcome criterion8() {
  const Summary& s = ce_clean();
  if (!complete(s)) return {Verdict::Fail, "runs failed: " + s.errors.front()};
  double min_train = 1.0, min_test = 1.0;
  for (const auto& f : s.finals) {
    min_train = std::min(min_train, f.train_acc);
    min_test = std::min(min_test, f.test_acc);
  }
  const bool ok = min_train >= 0.9 && min_test >= 0.85;
  return {ok ? Verdict::Pass : Verdict::Fail, "worst seed: final train_acc " + sci(min_train) + " (>= 0.9), test_acc " +
                                                  sci(min_test) + " (>= 0.85)"};
}

Outcome criterion9() {
  const Summary& s = ce_noisy();
  if (!complete(s)) return {Verdict::Fail, "runs failed: " + s.errors.front()};
  int memorized = 0, rising = 0;
  std::string mem;
  for (std::size_t k = 0; k < s.finals.size(); ++k) {
    memorized += s.finals[k].noisy_acc_vs_assigned > 0.6;
    rising += s.finals[k].dirichlet_energy > s.energy_at_20[k];
    mem += (k ? "/" : "") + sci(s.finals[k].noisy_acc_vs_assigned);
  }
  const bool ok = memorized >= 2 && rising == static_cast<int>(s.finals.size());
  return {ok ? Verdict::Pass : Verdict::Fail, "final noisy_acc_vs_assigned " + mem + " (> 0.6 in " +
                                                  std::to_string(memorized) + "/3 seeds, need 2); energy final > epoch 20 in " +
                                                  std::to_string(rising) + "/3 seeds"};
}

Outcome criterion10() {
  const Summary& ce = ce_noisy();
  const Summary& gc = gcod_noisy();
  if (!complete(ce) || !complete(gc)) return {Verdict::Fail, "runs failed"};
  const double acc_ce = ce.mean(&EpochRecord::test_acc), acc_gc = gc.mean(&EpochRecord::test_acc);
  const double e_ce = ce.mean(&EpochRecord::dirichlet_energy), e_gc = gc.mean(&EpochRecord::dirichlet_energy);
  const bool ok = acc_gc >= acc_ce && e_gc <= e_ce;
  return {ok ? Verdict::Pass : Verdict::Fail, "mean test_acc GCOD " + sci(acc_gc) + " vs CE " + sci(acc_ce) +
                                                  "; mean energy GCOD " + sci(e_gc) + " vs CE " + sci(e_ce)};
}

Outcome criterion11() {
  const Summary& ce = ce_clean();
  const Summary& w2 = ce_w2_clean();
  const Summary& gc = gcod_clean();
  if (!complete(ce) || !complete(w2) || !complete(gc)) return {Verdict::Fail, "runs failed"};
  const double base = ce.mean(&EpochRecord::test_acc);
  const double acc_w2 = w2.mean(&EpochRecord::test_acc), acc_gc = gc.mean(&EpochRecord::test_acc);
  const bool ok = w2.min_projected >= -1e-10 && acc_w2 >= base - 0.05 && acc_gc >= base - 0.05;
  return {ok ? Verdict::Pass : Verdict::Fail, "min projected W2 eigenvalue over all epochs " + sci(w2.min_projected) +
                                                  "; mean test_acc CE " + sci(base) + ", CE+W2 " + sci(acc_w2) +
                                                  ", GCOD " + sci(acc_gc) + " (need >= " + sci(base - 0.05) + ")"};
}

Outcome criterion12() {
  const char* root = std::getenv("GCROBUST_DATA");
  if (root == nullptr) return {Verdict::Skip, "GCROBUST_DATA not set"};
  std::string detail;
  bool any = false, ok = true;
  for (const auto& [name, expected] : std::vector<std::pair<std::string, std::size_t>>{{"MUTAG", 188}, {"PROTEINS", 1113}}) {
    const fs::path dir = fs::path(root) / name;
    if (!fs::is_directory(dir)) {
      detail += name + " absent; ";
      continue;
    }
    any = true;
    const GraphDataset ds = load_tu_dataset(dir);
    double nodes = 0.0;
    for (const auto& g : ds.graphs) nodes += g.num_nodes();
    nodes /= static_cast<double>(std::max<std::size_t>(1, ds.size()));
    ok = ok && ds.size() == expected;
    detail += name + " " + std::to_string(ds.size()) + " graphs (expect " + std::to_string(expected) +
              "), mean nodes " + sci(nodes) + "; ";
  }
  if (!any) return {Verdict::Skip, detail + "no dataset directories"};
  return {ok ? Verdict::Pass : Verdict::Fail, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"block-diagonal energy identity", criterion1},
      {"spatial vs spectral energy agreement", criterion2},
      {"Jacobi eigensolver accuracy and Laplacian spectra", criterion3},
      {"gradcheck of every layer, readout and loss", criterion4},
      {"PSD projection", criterion5},
      {"label noise injector", criterion6},
      {"GCOD plumbing", criterion7},
      {"clean baseline (GIN + CE)", criterion8},
      {"memorization signature under 30% noise", criterion9},
      {"robustness ordering GCOD vs CE under 30% noise", criterion10},
      {"W2 projection and GCOD non-harm on clean data", criterion11},
      {"dataset ingestion (MUTAG, PROTEINS)", criterion12},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = out.verdict == Verdict::Pass ? "PASS" : out.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    failed += out.verdict == Verdict::Fail;
    std::printf("%s  criterion %2d  %s: %s\n", tag, id, criteria[k].first.c_str(), out.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
