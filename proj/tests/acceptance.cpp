// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria with tolerances pin them here, in code.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "asba/bounds.hpp"
#include "asba/cli.hpp"
#include "asba/fragment.hpp"
#include "asba/generate.hpp"
#include "asba/gnn.hpp"
#include "asba/mol_graph.hpp"
#include "asba/rng.hpp"
#include "asba/ssl.hpp"
#include "asba/tensor.hpp"
#include "asba/train.hpp"
#include "oracles.hpp"

using namespace asba;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"asba"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "asba_acceptance";
  fs::create_directories(dir);
  return dir;
}

Dataset dataset_from(const std::vector<GeneratedMolecule>& mols) {
  Dataset ds;
  ds.num_tasks = 1;
  for (const auto& m : mols) {
    ds.molecules.push_back(m.graph);
    ds.labels.push_back({m.label});
    ds.targets.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  return ds;
}

// --- criterion 1: gradient correctness of the full combined loss ------------

bool criterion_gradients(std::string& detail) {
  const auto start = Clock::now();
  Rng rng(1001);
  std::vector<MolGraph> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(oracles::random_molecule(rng, 8));
  const SubgraphVocabulary vocab = mine_vocabulary(corpus, 12, 6);

  std::vector<MolGraph> mols;
  std::vector<Decomposition> decomps;
  std::vector<QuotientGraph> quotients;
  std::vector<std::vector<int>> labels;
  Rng pick(1002);
  while (mols.size() < 3) {
    MolGraph g = oracles::random_molecule(pick, 8);
    if (g.num_atoms() < 2) continue;
    bool covered = true;
    for (int t : g.atom_types()) covered = covered && vocab.has_atom_type(t);
    if (!covered) continue;
    mols.push_back(g);
    decomps.push_back(decompose(mols.back(), vocab));
    quotients.push_back(quotient_graph(mols.back(), decomps.back()));
    labels.push_back({static_cast<int>(pick.uniform_int(2)), static_cast<int>(pick.uniform_int(2))});
  }

  EncoderConfig cfg;
  cfg.hidden_dim = 8;
  cfg.atom_layers = 2;
  cfg.subgraph_layers = 2;
  cfg.polymer_layers = 2;
  cfg.num_tasks = 2;
  ParamStore store;
  Rng init = rng.child("params");
  init_encoder_params(store, cfg, vocab.size(), init);

  auto build_loss = [&](Tape& tape) {
    std::vector<PretrainItem> batch;
    std::vector<TensorRef> f_logits, g_logits;
    for (size_t i = 0; i < mols.size(); ++i) {
      batch.push_back({&mols[i], &decomps[i], &quotients[i]});
      f_logits.push_back(atom_branch(tape, cfg, mols[i]).logits);
      TensorRef parts = subgraph_embed(tape, cfg, mols[i], decomps[i]);
      g_logits.push_back(polymerize(tape, cfg, parts, quotients[i]).logits);
    }
    TensorRef sup_f = supervised_loss(tape, tape.concat_rows(f_logits), labels, false, {});
    TensorRef sup_g = supervised_loss(tape, tape.concat_rows(g_logits), labels, false, {});
    Rng masks(1003);  // identical masks on every evaluation
    TensorRef ssl_total = pretrain_step(tape, cfg, batch, vocab.size(), 0.3, 1.0, masks, nullptr);
    return tape.add(tape.add(sup_f, sup_g), ssl_total);
  };
  const FiniteDiffReport report = finite_diff_check(store, build_loss, 1e-5, 1e-4);
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d params checked, max rel err %.2e, %d excluded, %.1fs",
                report.checked, report.max_rel_err, report.excluded, elapsed);
  detail = buf;
  return report.pass && elapsed < 60.0;
}

// --- criterion 2: context independence of subgraph embeddings ----------------

bool criterion_context_independence(std::string& detail) {
  EncoderConfig cfg;
  cfg.hidden_dim = 16;
  cfg.subgraph_layers = 2;
  ParamStore store;
  Rng init(2001);
  init_encoder_params(store, cfg, 8, init);

  Rng rng(2002);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    MolGraph pattern = oracles::random_molecule(rng, 6);
    // two hosts embed the same pattern with different decorations
    auto make_host = [&](uint64_t salt) {
      Rng host_rng = rng.child(salt);
      const int extra = 1 + static_cast<int>(host_rng.uniform_int(4));
      std::vector<int> types = pattern.atom_types();
      std::vector<Bond> bonds = pattern.bonds();
      int prev = static_cast<int>(host_rng.uniform_int(pattern.num_atoms()));
      for (int k = 0; k < extra; ++k) {
        const int idx = pattern.num_atoms() + k;
        types.push_back(static_cast<int>(host_rng.uniform_int(kAtomAlphabetSize)));
        bonds.push_back({prev, idx, 1});
        prev = idx;
      }
      return MolGraph::build(std::move(types), std::move(bonds));
    };
    const MolGraph host1 = make_host(17);
    const MolGraph host2 = make_host(23);

    auto embedding_of_pattern = [&](const MolGraph& host) {
      Decomposition d;
      std::vector<int> pattern_atoms(pattern.num_atoms());
      for (int i = 0; i < pattern.num_atoms(); ++i) pattern_atoms[i] = i;
      d.parts.push_back({0, false, pattern_atoms});
      for (int i = pattern.num_atoms(); i < host.num_atoms(); ++i) {
        d.parts.push_back({1, false, {i}});
      }
      Tape tape(&store);
      const Tensor parts = tape.value(subgraph_embed(tape, cfg, host, d));
      std::vector<double> row(cfg.hidden_dim);
      for (int j = 0; j < cfg.hidden_dim; ++j) row[j] = parts.at(0, j);
      return row;
    };
    if (embedding_of_pattern(host1) != embedding_of_pattern(host2)) {
      detail = "embedding differed at trial " + std::to_string(trial);
      return false;
    }
    checked++;
  }
  detail = std::to_string(checked) + " pattern/host pairs bitwise equal";
  return checked == 50;
}

// --- criterion 3: permutation invariance --------------------------------------

bool criterion_permutation_invariance(std::string& detail) {
  Rng rng(3001);
  const auto generated = generate_motif_task(20, rng);
  std::vector<MolGraph> mols;
  for (const auto& m : generated) mols.push_back(m.graph);
  const SubgraphVocabulary vocab = mine_vocabulary(mols, 40, 8);

  EncoderConfig cfg;
  cfg.hidden_dim = 16;
  ParamStore store;
  Rng init(3002);
  init_encoder_params(store, cfg, vocab.size(), init);

  auto outputs = [&](const MolGraph& g) {
    Tape tape(&store);
    BranchOutput f = atom_branch(tape, cfg, g);
    const Decomposition d = decompose(g, vocab);
    TensorRef parts = subgraph_embed(tape, cfg, g, d);
    BranchOutput s = polymerize(tape, cfg, parts, quotient_graph(g, d));
    std::vector<double> all = tape.value(f.pooled).data;
    auto append = [&](const Tensor& t) { all.insert(all.end(), t.data.begin(), t.data.end()); };
    append(tape.value(s.pooled));
    append(tape.value(f.logits));
    append(tape.value(s.logits));
    return all;
  };

  double max_dev = 0;
  Rng perm_rng(3003);
  for (const auto& g : mols) {
    const auto base = outputs(g);
    for (int k = 0; k < 20; ++k) {
      const auto perm = oracles::random_permutation(perm_rng, g.num_atoms());
      const auto relabeled = outputs(relabel(g, perm));
      for (size_t j = 0; j < base.size(); ++j) {
        max_dev = std::max(max_dev, std::abs(base[j] - relabeled[j]));
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max abs deviation %.3e over 400 relabelings", max_dev);
  detail = buf;
  return max_dev <= 1e-9;
}

// --- criterion 4: partition property at scale ----------------------------------

bool criterion_partition(std::string& detail) {
  Rng rng(4001);
  const auto corpus_gen = generate_motif_task(500, rng);
  std::vector<MolGraph> corpus;
  for (const auto& m : corpus_gen) corpus.push_back(m.graph);
  const SubgraphVocabulary vocab = mine_vocabulary(corpus, 100, kDefaultPatternCap);

  Rng rng2(4002);
  const auto probe_gen = generate_motif_task(1000, rng2);
  int violations = 0;
  std::string first_reason;
  for (const auto& m : probe_gen) {
    const Decomposition d = decompose(m.graph, vocab);
    std::string why;
    if (!validate_decomposition(m.graph, d, &vocab, &why)) {
      violations++;
      if (first_reason.empty()) first_reason = why;
    }
  }
  detail = "vocab size " + std::to_string(vocab.size()) + ", violations " +
           std::to_string(violations) + "/1000" +
           (first_reason.empty() ? "" : " (" + first_reason + ")");
  return violations == 0;
}

// --- criterion 5: mining frequency oracle --------------------------------------

bool criterion_mining_oracle(std::string& detail) {
  Rng rng(5001);
  int patterns_checked = 0;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<MolGraph> corpus;
    const int n = 10 + static_cast<int>(rng.uniform_int(11));  // 10..20 molecules
    for (int i = 0; i < n; ++i) corpus.push_back(oracles::random_molecule(rng, 8));
    const SubgraphVocabulary vocab = mine_vocabulary(corpus, 15, 6);
    for (const auto& p : vocab.patterns) {
      long long expected = 0;
      for (const auto& g : corpus) expected += oracles::brute_occurrences(p.graph, g);
      if (p.frequency != expected) {
        detail = "pattern " + std::to_string(p.index) + " recorded " +
                 std::to_string(p.frequency) + " vs brute force " + std::to_string(expected);
        return false;
      }
      patterns_checked++;
    }
  }
  detail = std::to_string(patterns_checked) + " pattern frequencies match exactly";
  return true;
}

// --- criterion 6: bayes bound validation ----------------------------------------

bool criterion_bayes_bound(std::string& detail) {
  const auto start = Clock::now();
  Rng rng(6001);
  int violations = 0;
  for (int i = 0; i < 200; ++i) {
    GaussianTask t;
    t.mean1 = {rng.uniform(-2, 2)};
    t.mean2 = {rng.uniform(-2, 2)};
    t.cov1 = {rng.uniform(0.5, 2.0)};
    t.cov2 = {rng.uniform(0.5, 2.0)};
    t.prior1 = rng.uniform(0.2, 0.8);
    t.prior2 = 1 - t.prior1;
    const double bound = bayes_bound(t);
    const MonteCarloResult mc = monte_carlo_bayes(t, 100000, rng);
    if (mc.error_rate > bound + 3 * mc.ci_half_width) violations++;
  }
  const double elapsed = seconds_since(start);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d/200 within bound, %.1fs", 200 - violations, elapsed);
  detail = buf;
  return violations == 0 && elapsed < 120.0;
}

// --- criterion 7: ensemble-improvement condition ---------------------------------

bool criterion_ensemble_condition(std::string& detail) {
  const GaussianTask base = GaussianTask::one_dim(0, 1, 2, 1, 0.5);
  const double bayes = bayes_bound(base);
  const double tau1 = 0.3;
  auto single = [&]() {
    return expected_error_single(bayes, BranchNoise::uniform(tau1, tau1), base);
  };
  auto ensemble = [&](double ratio) {
    return expected_error_ensemble(bayes, BranchNoise::uniform(tau1, tau1),
                                   BranchNoise::uniform(ratio * tau1, ratio * tau1), base);
  };
  // formula level: strict improvement below sqrt(3) on the sweep grid
  for (double ratio = 0.1; ratio < std::sqrt(3.0) - 1e-12; ratio += 0.05) {
    if (!(ensemble(ratio) < single())) {
      detail = "no improvement at ratio " + std::to_string(ratio);
      return false;
    }
  }
  // analytic crossing by bisection
  double lo = 0.1, hi = 3.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ensemble(mid) < single()) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double crossing = 0.5 * (lo + hi);
  if (std::abs(crossing - std::sqrt(3.0)) > 1e-9) {
    detail = "crossing " + std::to_string(crossing) + " off sqrt(3)";
    return false;
  }

  // simulation level: tau2 = tau1, iid uniform noise
  Rng rng(7001);
  int improved = 0;
  for (int i = 0; i < 20; ++i) {
    const double gap = rng.uniform(0.5, 2.0);
    const double var = rng.uniform(0.7, 1.5);
    const double p1 = rng.uniform(0.3, 0.7);
    const GaussianTask t = GaussianTask::one_dim(0, var, gap, var, p1);
    const double tau = rng.uniform(0.15, 0.35);
    const BranchNoise noise = BranchNoise::uniform(tau, tau);
    const NoisyClassifierResult r = monte_carlo_noisy_classifiers(t, noise, noise, 100000, rng);
    if (r.ensemble.error_rate <= r.single_f.error_rate) improved++;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "crossing %.12f, simulation improved %d/20", crossing, improved);
  detail = buf;
  return improved >= 19;
}

// --- criterion 8: desk-scale learnability -----------------------------------------

struct TaskOutcome {
  BranchMetrics test;
  double elapsed = 0;
};

TaskOutcome run_synthetic_task(bool motif_kind, uint64_t seed) {
  const auto start = Clock::now();
  Rng gen(seed);
  auto make = [&](int n, uint64_t salt) {
    Rng r = gen.child(salt);
    return motif_kind ? generate_motif_task(n, r) : generate_atom_count_task(n, r);
  };
  Dataset train = dataset_from(make(200, 1));
  Dataset valid = dataset_from(make(50, 2));
  Dataset test = dataset_from(make(50, 3));
  const SubgraphVocabulary vocab = mine_vocabulary(train.molecules, 100, kDefaultPatternCap);
  EncodedDataset train_enc = EncodedDataset::prepare(train, vocab);
  EncodedDataset valid_enc = EncodedDataset::prepare(valid, vocab);
  EncodedDataset test_enc = EncodedDataset::prepare(test, vocab);

  FinetuneConfig cfg;
  cfg.encoder.hidden_dim = 64;
  cfg.encoder.atom_layers = 3;
  cfg.encoder.subgraph_layers = 2;
  cfg.encoder.polymer_layers = 3;
  cfg.encoder.num_tasks = 1;
  cfg.epochs = 40;
  cfg.batch_size = 32;
  cfg.lr = 1e-3;
  cfg.seed = seed;
  ParamStore store;
  Rng init = Rng(seed).child("params");
  init_encoder_params(store, cfg.encoder, vocab.size(), init);
  const FinetuneResult result = finetune(store, train_enc, valid_enc, test_enc, cfg);
  return {result.test, seconds_since(start)};
}

bool criterion_learnability(std::string& detail) {
  const TaskOutcome motif = run_synthetic_task(true, 8101);
  const TaskOutcome atoms = run_synthetic_task(false, 8202);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "motif f=%.3f g=%.3f asba=%.3f (%.0fs); atoms f=%.3f g=%.3f asba=%.3f (%.0fs)",
                motif.test.atom, motif.test.subgraph, motif.test.combined, motif.elapsed,
                atoms.test.atom, atoms.test.subgraph, atoms.test.combined, atoms.elapsed);
  detail = buf;
  const bool motif_ok = motif.test.subgraph >= 0.90 &&
                        motif.test.combined >= std::max(motif.test.atom, motif.test.subgraph) - 0.02 &&
                        motif.elapsed < 600;
  const bool atoms_ok = atoms.test.atom >= 0.90 &&
                        atoms.test.combined >= std::max(atoms.test.atom, atoms.test.subgraph) - 0.02 &&
                        atoms.elapsed < 600;
  return motif_ok && atoms_ok;
}

// --- criterion 9: pretraining efficacy ---------------------------------------------

bool criterion_pretraining(std::string& detail) {
  Rng gen(9001);
  const auto corpus_gen = generate_motif_task(500, gen);
  Dataset corpus = dataset_from(corpus_gen);
  const SubgraphVocabulary vocab = mine_vocabulary(corpus.molecules, 100, kDefaultPatternCap);
  EncodedDataset enc = EncodedDataset::prepare(corpus, vocab);

  EncoderConfig cfg;
  cfg.hidden_dim = 64;
  cfg.atom_layers = 3;
  cfg.subgraph_layers = 2;
  cfg.polymer_layers = 3;
  ParamStore store;
  Rng run(9002);
  Rng init = run.child("params");
  init_encoder_params(store, cfg, vocab.size(), init);
  AdamOptimizer opt(store.names(), 1e-3);
  Rng masks = run.child("masks");
  Rng shuffle = run.child("shuffle");

  std::vector<int> order(corpus.size());
  for (int i = 0; i < corpus.size(); ++i) order[i] = i;
  size_t cursor = order.size();
  double last_contrastive = 0;
  for (int step = 0; step < 300; ++step) {
    std::vector<PretrainItem> batch;
    while (static_cast<int>(batch.size()) < 32) {
      if (cursor >= order.size()) {
        shuffle.shuffle(order);
        cursor = 0;
      }
      const int i = order[cursor++];
      batch.push_back({&corpus.molecules[i], &enc.decompositions[i], &enc.quotients[i]});
    }
    store.zero_grads();
    Tape tape(&store);
    PretrainStepStats stats;
    TensorRef loss = pretrain_step(tape, cfg, batch, vocab.size(), 0.25, 1.0, masks, &stats);
    tape.backward(loss);
    opt.step(store);
    last_contrastive = stats.contrastive;
  }

  Rng eval = run.child("eval");
  long long hits = 0, positions = 0;
  for (int i = 0; i < corpus.size(); ++i) {
    const MaskPlan plan = mask_subgraphs(enc.decompositions[i], 0.25, eval);
    if (plan.empty()) continue;
    Tape tape(&store);
    const auto pred = mstm_predict(tape, cfg, corpus.molecules[i], enc.decompositions[i],
                                   enc.quotients[i], plan, vocab.size());
    for (size_t k = 0; k < plan.masked_parts.size(); ++k) {
      positions++;
      if (pred[k] == enc.decompositions[i].parts[plan.masked_parts[k]].token) hits++;
    }
  }
  const double accuracy = positions > 0 ? static_cast<double>(hits) / positions : 0.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "top-1 %.3f (chance %.3f, need >= 0.05), final contrastive %.3f (ln 32 = %.3f)",
                accuracy, 1.0 / vocab.size(), last_contrastive, std::log(32.0));
  detail = buf;
  return accuracy >= 0.05 && last_contrastive < std::log(32.0);
}

// --- criterion 10: determinism and round-trips -------------------------------------

bool criterion_determinism(std::string& detail) {
  const fs::path dir = work_dir();
  auto p = [&](const char* name) { return (dir / name).string(); };

  if (cli({"generate", "--kind", "motif", "--n", "40", "--seed", "77", "--out", p("d.jsonl")}) != 0) {
    detail = "generate failed";
    return false;
  }
  // vocabularies: identical command reruns must rewrite identical bytes
  const std::vector<std::string> mine{"mine-vocab", "--corpus", p("d.jsonl"), "--size", "25",
                                      "--cap", "8", "--out", p("v1.jsonl")};
  if (cli(mine) != 0) {
    detail = "mine-vocab failed";
    return false;
  }
  const std::string vocab_bytes = slurp(p("v1.jsonl"));
  if (cli(mine) != 0 || slurp(p("v1.jsonl")) != vocab_bytes) {
    detail = "vocabulary files differ between reruns";
    return false;
  }
  // pretraining checkpoints + reports
  const std::vector<std::string> pre{"pretrain",     "--corpus", p("d.jsonl"), "--vocab",
                                     p("v1.jsonl"),  "--steps",  "8",          "--batch-size",
                                     "8",            "--hidden-dim", "8",      "--seed", "3",
                                     "--out", p("p1.ckpt"), "--report", p("p1.json")};
  if (cli(pre) != 0) {
    detail = "pretrain failed";
    return false;
  }
  const std::string pre_ck = slurp(p("p1.ckpt"));
  const std::string pre_rp = slurp(p("p1.json"));
  if (cli(pre) != 0 || slurp(p("p1.ckpt")) != pre_ck || slurp(p("p1.json")) != pre_rp) {
    detail = "pretrain outputs differ between reruns";
    return false;
  }
  // finetune reports + checkpoints
  if (cli({"generate", "--kind", "motif", "--n", "16", "--seed", "78", "--out", p("va.jsonl")}) != 0 ||
      cli({"generate", "--kind", "motif", "--n", "16", "--seed", "79", "--out", p("te.jsonl")}) != 0) {
    detail = "generate splits failed";
    return false;
  }
  const std::vector<std::string> fit{"finetune", "--train", p("d.jsonl"),  "--valid", p("va.jsonl"),
                                     "--test",   p("te.jsonl"), "--vocab", p("v1.jsonl"),
                                     "--epochs", "2",        "--hidden-dim", "8", "--seeds", "0",
                                     "--out", p("f1.ckpt"), "--report", p("f1.json")};
  if (cli(fit) != 0) {
    detail = "finetune failed";
    return false;
  }
  const std::string fit_ck = slurp(p("f1.ckpt"));
  const std::string fit_rp = slurp(p("f1.json"));
  if (cli(fit) != 0 || slurp(p("f1.ckpt")) != fit_ck || slurp(p("f1.json")) != fit_rp) {
    detail = "finetune outputs differ between reruns";
    return false;
  }
  // checkpoint save/load preserves forward outputs bitwise
  const SubgraphVocabulary vocab = SubgraphVocabulary::load(p("v1.jsonl"));
  ParamStore loaded;
  const CheckpointHeader header = load_checkpoint(loaded, p("f1.ckpt"));
  const EncoderConfig cfg = EncoderConfig::from_json(header.meta.at("encoder"));
  Dataset probe = Dataset::load_native(p("te.jsonl"));
  EncodedDataset probe_enc = EncodedDataset::prepare(probe, vocab);
  const ScoreTable s1 = score_dataset(loaded, cfg, probe_enc);

  const std::string copy = p("f1_copy.ckpt");
  save_checkpoint(loaded, copy, header.adam_steps, header.meta);
  ParamStore reloaded;
  load_checkpoint(reloaded, copy);
  const ScoreTable s2 = score_dataset(reloaded, cfg, probe_enc);
  if (s1.atom != s2.atom || s1.subgraph != s2.subgraph || s1.combined != s2.combined) {
    detail = "forward outputs changed across save/load";
    return false;
  }
  detail = "vocab, checkpoint, and report bytes identical; forward outputs bitwise stable";
  return true;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "gradient correctness (finite differences at 1e-4)", criterion_gradients},
      {2, "context independence of subgraph embeddings (bitwise)", criterion_context_independence},
      {3, "permutation invariance (<= 1e-9)", criterion_permutation_invariance},
      {4, "partition property on 1000 molecules under |V|=100", criterion_partition},
      {5, "mining frequencies equal brute-force counts", criterion_mining_oracle},
      {6, "bayes bound holds on 200 Monte-Carlo tasks", criterion_bayes_bound},
      {7, "ensemble-improvement condition (formula + simulation)", criterion_ensemble_condition},
      {8, "desk-scale learnability of both branches", criterion_learnability},
      {9, "pretraining efficacy (masked-token accuracy, contrastive)", criterion_pretraining},
      {10, "determinism and checkpoint round-trips", criterion_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", c.id, c.name,
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
    if (!ok) failures++;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
