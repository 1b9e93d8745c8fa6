#include "asba/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "asba/bounds.hpp"
#include "asba/fragment.hpp"
#include "asba/generate.hpp"
#include "asba/gnn.hpp"
#include "asba/mol_graph.hpp"
#include "asba/rng.hpp"
#include "asba/ssl.hpp"
#include "asba/tensor.hpp"
#include "asba/train.hpp"

namespace asba {

namespace {

using nlohmann::json;

// Binds CLI flags and config-file keys to the same fields. Flags win over
// the file; unknown file keys are rejected; the resolved config is logged
// with its hash.
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App* app) : app_(app) {
    app->add_option("--config", config_path_, "JSON config file; explicit flags override it");
  }

  template <typename T>
  void bind(const std::string& flag, const std::string& key, T* field, const std::string& desc) {
    CLI::Option* opt = app_->add_option(flag, *field, desc);
    items_.push_back({key, opt,
                      [field](const json& v) { *field = v.get<T>(); },
                      [field]() { return json(*field); }});
  }

  void bind_flag(const std::string& flag, const std::string& key, bool* field,
                 const std::string& desc) {
    CLI::Option* opt = app_->add_flag(flag, *field, desc);
    items_.push_back({key, opt,
                      [field](const json& v) { *field = v.get<bool>(); },
                      [field]() { return json(*field); }});
  }

  // call after CLI11 parsing; applies the file and returns resolved config
  json resolve() {
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) fail(ErrorCode::FileError, "cannot open config '" + config_path_ + "'");
      json cfg = json::parse(in, nullptr, false);
      if (cfg.is_discarded() || !cfg.is_object()) {
        fail(ErrorCode::ConfigError, "config file is not a JSON object");
      }
      for (const auto& [key, value] : cfg.items()) {
        auto it = std::find_if(items_.begin(), items_.end(),
                               [&](const Item& i) { return i.key == key; });
        if (it == items_.end()) fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
        if (it->opt->count() == 0) it->apply(value);
      }
    }
    json resolved;
    for (const auto& i : items_) resolved[i.key] = i.get();
    return resolved;
  }

 private:
  struct Item {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> apply;
    std::function<json()> get;
  };
  CLI::App* app_;
  std::string config_path_;
  std::vector<Item> items_;
};

std::string hash_of(const json& resolved) { return to_hex(fnv1a64(resolved.dump())); }

void log_config(const std::string& command, const json& resolved) {
  std::cout << command << " config: " << resolved.dump() << "\n";
  std::cout << command << " config_hash: " << hash_of(resolved) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::FileError, "cannot write '" + path + "'");
  out << text;
}

struct EncoderFlags {
  int hidden_dim = 64;
  int atom_layers = 3;
  int subgraph_layers = 2;
  int polymer_layers = 3;
  double eps = 0.0;
  int degree_slots = 16;

  void bind(ConfigBinder& b) {
    b.bind("--hidden-dim", "hidden_dim", &hidden_dim, "embedding width");
    b.bind("--atom-layers", "atom_layers", &atom_layers, "atom-branch GIN depth");
    b.bind("--sub-layers", "subgraph_layers", &subgraph_layers, "subgraph-embedding GIN depth");
    b.bind("--poly-layers", "polymer_layers", &polymer_layers, "polymerization GIN depth");
    b.bind("--eps", "self_weight_eps", &eps, "GIN self-weight epsilon");
    b.bind("--degree-slots", "degree_slots", &degree_slots, "degree embedding slots");
  }

  EncoderConfig to_config(int num_tasks) const {
    EncoderConfig cfg;
    cfg.hidden_dim = hidden_dim;
    cfg.atom_layers = atom_layers;
    cfg.subgraph_layers = subgraph_layers;
    cfg.polymer_layers = polymer_layers;
    cfg.num_tasks = num_tasks;
    cfg.self_weight_eps = eps;
    cfg.degree_slots = degree_slots;
    cfg.validate();
    return cfg;
  }
};

std::vector<MolGraph> graphs_of(const std::vector<ParsedMolecule>& parsed) {
  std::vector<MolGraph> out;
  out.reserve(parsed.size());
  for (const auto& p : parsed) out.push_back(p.graph);
  return out;
}

json metrics_json(const BranchMetrics& m) {
  return {{"atom", m.atom}, {"subgraph", m.subgraph}, {"combined", m.combined}};
}

// --- generate ------------------------------------------------------------------

int run_generate(const std::string& kind, int n, uint64_t seed, const std::string& out_path,
                 bool with_labels) {
  Rng rng = Rng(seed).child("generate");
  std::vector<GeneratedMolecule> mols;
  if (kind == "atoms") {
    mols = generate_atom_count_task(n, rng);
  } else if (kind == "motif") {
    mols = generate_motif_task(n, rng);
  } else {
    fail(ErrorCode::ConfigError, "unknown kind '" + kind + "'");
  }
  write_generated(mols, out_path, with_labels);
  int positives = 0;
  for (const auto& m : mols) positives += m.label;
  std::cout << "generate wrote " << mols.size() << " molecules (" << positives
            << " positive) to " << out_path << "\n";
  return 0;
}

// --- mine-vocab ----------------------------------------------------------------

int run_mine_vocab(const std::string& corpus_path, int size, int cap, const std::string& out_path) {
  const auto parsed = load_molecule_file(corpus_path);
  const auto corpus = graphs_of(parsed);
  SubgraphVocabulary vocab = mine_vocabulary(corpus, size, cap);
  vocab.save(out_path);
  std::map<int, int> size_hist;
  for (const auto& p : vocab.patterns) size_hist[p.graph.num_atoms()]++;
  std::cout << "mined " << vocab.size() << " patterns (cap " << cap << ") from " << corpus.size()
            << " molecules\n";
  for (const auto& [atoms, count] : size_hist) {
    std::cout << "  " << atoms << "-atom patterns: " << count << "\n";
  }
  std::cout << "corpus_hash: " << to_hex(vocab.corpus_hash) << "\n";
  return 0;
}

// --- decompose -----------------------------------------------------------------

int run_decompose(const std::string& vocab_path, const std::string& input_path,
                  const std::string& out_path, const std::string& method) {
  const SubgraphVocabulary vocab = SubgraphVocabulary::load(vocab_path);
  const auto parsed = load_molecule_file(input_path);
  const CleavageRuleSet rules = default_cleavage_rules();
  std::ostringstream out;
  for (size_t i = 0; i < parsed.size(); ++i) {
    const MolGraph& g = parsed[i].graph;
    Decomposition d;
    if (method == "greedy") {
      d = decompose(g, vocab);
    } else if (method == "rules") {
      d = fragment_rules(g, rules, &vocab);
    } else {
      fail(ErrorCode::ConfigError, "unknown method '" + method + "'");
    }
    json line;
    line["index"] = i;
    auto& tokens = line["tokens"] = json::array();
    auto& parts = line["parts"] = json::array();
    for (const auto& part : d.parts) {
      tokens.push_back(part.token);
      parts.push_back(part.atoms);
    }
    line["inter_edges"] = d.inter_bonds.size();
    out << line.dump() << "\n";
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_text(out_path, out.str());
  }
  return 0;
}

// --- pretrain -------------------------------------------------------------------

struct PretrainOptions {
  std::string corpus, vocab, out_checkpoint, report;
  int steps = 300;
  int epochs = 0;  // > 0: full corpus passes instead of a step count
  int batch_size = 32;
  double mask_ratio = 0.25;
  double lambda_cl = 1.0;
  double lr = 1e-3;
  uint64_t seed = 0;
  EncoderFlags encoder;
};

int run_pretrain(const PretrainOptions& opt, const json& resolved) {
  const SubgraphVocabulary vocab = SubgraphVocabulary::load(opt.vocab);
  Dataset corpus = Dataset::from_parsed(load_molecule_file(opt.corpus));
  if (corpus.size() == 0) fail(ErrorCode::EmptyCorpus, "no molecules in '" + opt.corpus + "'");
  EncodedDataset encoded = EncodedDataset::prepare(corpus, vocab);
  const EncoderConfig cfg = opt.encoder.to_config(1);

  Rng run_rng(opt.seed);
  ParamStore store;
  Rng init_rng = run_rng.child("params");
  init_encoder_params(store, cfg, vocab.size(), init_rng);
  AdamOptimizer optimizer(store.names(), opt.lr);
  Rng mask_rng = run_rng.child("masks");
  Rng shuffle_rng = run_rng.child("shuffle");

  json curve = json::array();
  std::vector<int> order(corpus.size());
  for (int i = 0; i < corpus.size(); ++i) order[i] = i;
  size_t cursor = order.size();  // trigger reshuffle at start
  const int total_steps =
      opt.epochs > 0 ? opt.epochs * ((corpus.size() + opt.batch_size - 1) / opt.batch_size)
                     : opt.steps;
  int step = 0;
  while (step < total_steps) {
    std::vector<PretrainItem> batch;
    while (static_cast<int>(batch.size()) < opt.batch_size) {
      if (cursor >= order.size()) {
        shuffle_rng.shuffle(order);
        cursor = 0;
      }
      const int i = order[cursor++];
      batch.push_back({&corpus.molecules[i], &encoded.decompositions[i], &encoded.quotients[i]});
    }
    store.zero_grads();
    Tape tape(&store);
    PretrainStepStats stats;
    TensorRef loss =
        pretrain_step(tape, cfg, batch, vocab.size(), opt.mask_ratio, opt.lambda_cl, mask_rng, &stats);
    tape.backward(loss);
    optimizer.step(store);
    step++;
    curve.push_back({{"step", step},
                     {"total", stats.total},
                     {"mstm", stats.mstm},
                     {"atom_mask", stats.atom_mask},
                     {"contrastive", stats.contrastive},
                     {"mstm_skipped", stats.mstm_skipped}});
  }

  // deterministic evaluation pass: fresh mask stream, corpus order
  Rng eval_rng = run_rng.child("eval");
  long long hits = 0, positions = 0;
  for (int i = 0; i < corpus.size(); ++i) {
    const MaskPlan plan = mask_subgraphs(encoded.decompositions[i], opt.mask_ratio, eval_rng);
    if (plan.empty()) continue;
    Tape tape(&store);
    const std::vector<int> predicted = mstm_predict(tape, cfg, corpus.molecules[i],
                                                    encoded.decompositions[i], encoded.quotients[i],
                                                    plan, vocab.size());
    for (size_t k = 0; k < plan.masked_parts.size(); ++k) {
      positions++;
      if (predicted[k] == encoded.decompositions[i].parts[plan.masked_parts[k]].token) hits++;
    }
  }
  double contrastive_eval = 0;
  int contrastive_batches = 0;
  for (int start = 0; start + 2 <= corpus.size(); start += opt.batch_size) {
    const int end = std::min(start + opt.batch_size, corpus.size());
    if (end - start < 2) break;
    Tape tape(&store);
    std::vector<std::pair<TensorRef, TensorRef>> pairs;
    for (int i = start; i < end; ++i) {
      BranchOutput f = atom_branch(tape, cfg, corpus.molecules[i]);
      TensorRef parts = subgraph_embed(tape, cfg, corpus.molecules[i], encoded.decompositions[i]);
      BranchOutput s = polymerize(tape, cfg, parts, encoded.quotients[i]);
      pairs.emplace_back(f.pooled, s.pooled);
    }
    contrastive_eval += tape.value(contrastive_loss(tape, pairs)).data[0];
    contrastive_batches++;
  }
  if (contrastive_batches > 0) contrastive_eval /= contrastive_batches;

  save_checkpoint(store, opt.out_checkpoint, {{"pretrain", optimizer.step_count()}},
                  {{"encoder", cfg.to_json()}, {"vocab_size", vocab.size()}, {"task", "pretrain"}});

  json report;
  report["command"] = "pretrain";
  report["config"] = resolved;
  report["config_hash"] = hash_of(resolved);
  report["curve"] = curve;
  report["final"] = {{"mstm_top1_accuracy",
                      positions > 0 ? static_cast<double>(hits) / positions : 0.0},
                     {"mstm_chance", 1.0 / vocab.size()},
                     {"mstm_eval_positions", positions},
                     {"contrastive", contrastive_eval}};
  if (!opt.report.empty()) write_text(opt.report, report.dump(2) + "\n");
  std::cout << "pretrain " << total_steps << " steps done; masked-token top-1 "
            << (positions > 0 ? static_cast<double>(hits) / positions : 0.0) << " (chance "
            << 1.0 / vocab.size() << "), eval contrastive " << contrastive_eval << "\n";
  std::cout << "checkpoint: " << opt.out_checkpoint << "\n";
  return 0;
}

// --- finetune -------------------------------------------------------------------

struct FinetuneOptions {
  std::string train_path, valid_path, test_path;
  std::string data_path, split = "scaffold";
  double frac_train = 0.8, frac_valid = 0.1;
  std::string vocab, init_checkpoint, out_checkpoint, report;
  std::string protocol = "full";
  std::string task = "classification";
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  std::string seeds = "0,1,2";  // three replicates by default
  EncoderFlags encoder;
};

int copy_matching_params(const ParamStore& src, ParamStore& dst) {
  int copied = 0;
  for (const auto& name : src.names()) {
    if (!dst.has(name)) continue;
    const Tensor& s = src.value(name);
    Tensor& d = dst.value(name);
    if (!d.same_shape(s)) continue;
    d.data = s.data;
    copied++;
  }
  return copied;
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
  std::vector<uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) fail(ErrorCode::ConfigError, "no seeds given");
  return seeds;
}

int run_finetune(const FinetuneOptions& opt, const json& resolved) {
  const bool regression = opt.task == "regression";
  if (!regression && opt.task != "classification") {
    fail(ErrorCode::ConfigError, "task must be classification or regression");
  }
  if (opt.protocol != "full" && opt.protocol != "linear-probe") {
    fail(ErrorCode::ConfigError, "protocol must be full or linear-probe");
  }
  const SubgraphVocabulary vocab = SubgraphVocabulary::load(opt.vocab);

  Dataset train_ds, valid_ds, test_ds;
  if (!opt.data_path.empty()) {
    Dataset all = Dataset::load_native(opt.data_path);
    std::string warning;
    std::vector<Split> tags;
    if (opt.split == "scaffold") {
      tags = scaffold_split(all, opt.frac_train, opt.frac_valid, 1.0 - opt.frac_train - opt.frac_valid,
                            false, 0, &warning);
    } else if (opt.split == "scaffold-random") {
      tags = scaffold_split(all, opt.frac_train, opt.frac_valid, 1.0 - opt.frac_train - opt.frac_valid,
                            true, parse_seed_list(opt.seeds)[0], &warning);
    } else {
      fail(ErrorCode::ConfigError, "split must be scaffold or scaffold-random");
    }
    if (!warning.empty()) std::cout << "warning: " << warning << "\n";
    auto pick = [&](Split s) {
      Dataset out;
      out.num_tasks = all.num_tasks;
      out.has_targets = all.has_targets;
      for (int i = 0; i < all.size(); ++i) {
        if (tags[i] != s) continue;
        out.molecules.push_back(all.molecules[i]);
        out.labels.push_back(all.labels[i]);
        out.targets.push_back(all.targets[i]);
      }
      return out;
    };
    train_ds = pick(Split::Train);
    valid_ds = pick(Split::Valid);
    test_ds = pick(Split::Test);
  } else {
    if (opt.train_path.empty() || opt.valid_path.empty() || opt.test_path.empty()) {
      fail(ErrorCode::ConfigError, "give --data or all of --train/--valid/--test");
    }
    train_ds = Dataset::load_native(opt.train_path);
    valid_ds = Dataset::load_native(opt.valid_path);
    test_ds = Dataset::load_native(opt.test_path);
  }
  const int num_tasks = regression ? 1 : std::max(1, train_ds.num_tasks);
  const EncoderConfig cfg = opt.encoder.to_config(num_tasks);

  EncodedDataset train_enc = EncodedDataset::prepare(train_ds, vocab);
  EncodedDataset valid_enc = EncodedDataset::prepare(valid_ds, vocab);
  EncodedDataset test_enc = EncodedDataset::prepare(test_ds, vocab);

  const std::vector<uint64_t> seeds = parse_seed_list(opt.seeds);
  json runs = json::array();
  std::vector<BranchMetrics> tests;
  for (size_t si = 0; si < seeds.size(); ++si) {
    const uint64_t seed = seeds[si];
    ParamStore store;
    Rng init_rng = Rng(seed).child("params");
    init_encoder_params(store, cfg, vocab.size(), init_rng);
    if (!opt.init_checkpoint.empty()) {
      ParamStore loaded;
      load_checkpoint(loaded, opt.init_checkpoint);
      const int copied = copy_matching_params(loaded, store);
      std::cout << "loaded " << copied << " tensors from " << opt.init_checkpoint << "\n";
    }
    FinetuneConfig fcfg;
    fcfg.encoder = cfg;
    fcfg.epochs = opt.epochs;
    fcfg.batch_size = opt.batch_size;
    fcfg.lr = opt.lr;
    fcfg.linear_probe = opt.protocol == "linear-probe";
    fcfg.regression = regression;
    fcfg.seed = seed;
    FinetuneResult result = finetune(store, train_enc, valid_enc, test_enc, fcfg);
    tests.push_back(result.test);

    json curve = json::array();
    for (const auto& r : result.curve) {
      curve.push_back({{"epoch", r.epoch},
                       {"train_loss_atom", r.train_loss_atom},
                       {"train_loss_subgraph", r.train_loss_subgraph},
                       {"valid", metrics_json(r.valid)}});
    }
    runs.push_back({{"seed", seed},
                    {"best_epoch", result.best_epoch},
                    {"curve", curve},
                    {"valid_best", metrics_json(result.valid_at_best)},
                    {"test", metrics_json(result.test)},
                    {"skipped_tasks", result.skipped_tasks}});

    if (!opt.out_checkpoint.empty()) {
      const std::string path = seeds.size() == 1
                                   ? opt.out_checkpoint
                                   : opt.out_checkpoint + ".seed" + std::to_string(seed);
      save_checkpoint(store, path, {{"atom", 0}, {"subgraph", 0}},
                      {{"encoder", cfg.to_json()},
                       {"vocab_size", vocab.size()},
                       {"task", regression ? "regression" : "classification"}});
    }
    std::cout << "seed " << seed << " test atom=" << result.test.atom
              << " subgraph=" << result.test.subgraph << " combined=" << result.test.combined
              << "\n";
  }

  auto aggregate = [&](auto pick) {
    double mean = 0;
    for (const auto& t : tests) mean += pick(t);
    mean /= tests.size();
    double var = 0;
    for (const auto& t : tests) var += (pick(t) - mean) * (pick(t) - mean);
    var = tests.size() > 1 ? var / (tests.size() - 1) : 0.0;
    return json{{"mean", mean}, {"std", std::sqrt(var)}};
  };

  json report;
  report["command"] = "finetune";
  report["config"] = resolved;
  report["config_hash"] = hash_of(resolved);
  report["metric"] = regression ? "rmse" : "roc_auc";
  report["runs"] = runs;
  report["aggregate"] = {{"test_atom", aggregate([](const BranchMetrics& m) { return m.atom; })},
                         {"test_subgraph", aggregate([](const BranchMetrics& m) { return m.subgraph; })},
                         {"test_combined", aggregate([](const BranchMetrics& m) { return m.combined; })}};
  if (!opt.report.empty()) write_text(opt.report, report.dump(2) + "\n");
  return 0;
}

// --- eval -----------------------------------------------------------------------

int run_eval(const std::string& checkpoint, const std::string& vocab_path,
             const std::string& data_path, const std::string& report_path, const json& resolved) {
  const SubgraphVocabulary vocab = SubgraphVocabulary::load(vocab_path);
  ParamStore store;
  const CheckpointHeader header = load_checkpoint(store, checkpoint);
  if (!header.meta.contains("encoder")) {
    fail(ErrorCode::MalformedDocument, "checkpoint has no encoder metadata");
  }
  const EncoderConfig cfg = EncoderConfig::from_json(header.meta["encoder"]);
  const bool regression = header.meta.value("task", "classification") == "regression";
  Dataset ds = Dataset::load_native(data_path);
  EncodedDataset encoded = EncodedDataset::prepare(ds, vocab);
  ScoreTable scores = score_dataset(store, cfg, encoded);
  int skipped = 0;
  const BranchMetrics m = metrics_from_scores(scores, ds, regression, &skipped);
  const char* metric = regression ? "rmse" : "roc_auc";
  std::cout << "atom      " << metric << "=" << m.atom << "\n";
  std::cout << "subgraph  " << metric << "=" << m.subgraph << "\n";
  std::cout << "combined  " << metric << "=" << m.combined << "\n";
  if (skipped > 0) std::cout << "skipped single-class tasks: " << skipped << "\n";
  if (!report_path.empty()) {
    json report;
    report["command"] = "eval";
    report["config"] = resolved;
    report["config_hash"] = hash_of(resolved);
    report["metric"] = metric;
    report["test"] = metrics_json(m);
    report["skipped_tasks"] = skipped;
    write_text(report_path, report.dump(2) + "\n");
  }
  return 0;
}

// --- bounds-sim -----------------------------------------------------------------

struct BoundsOptions {
  std::string preset = "bayes-bound";
  int tasks = 200;
  long long samples = 100000;
  uint64_t seed = 0;
  std::string out, csv;
};

GaussianTask random_1d_task(Rng& rng, bool equal_variance) {
  const double mu1 = rng.uniform(-2.0, 0.0);
  // equal-variance tasks keep a moderate separation so posterior noise
  // actually flips decisions (the equal-noise simulation needs signal)
  const double mu2 = mu1 + (equal_variance ? rng.uniform(0.5, 2.0) : rng.uniform(0.5, 3.0));
  const double v1 = equal_variance ? rng.uniform(0.7, 1.5) : rng.uniform(0.5, 2.0);
  const double v2 = equal_variance ? v1 : rng.uniform(0.5, 2.0);
  const double p1 = rng.uniform(0.3, 0.7);
  return GaussianTask::one_dim(mu1, v1, mu2, v2, p1);
}

int run_bounds_sim(const BoundsOptions& opt, const json& resolved) {
  Rng rng = Rng(opt.seed).child("bounds");
  json report;
  report["command"] = "bounds-sim";
  report["config"] = resolved;
  report["config_hash"] = hash_of(resolved);
  report["preset"] = opt.preset;

  if (opt.preset == "bayes-bound") {
    json tasks = json::array();
    int violations = 0;
    for (int i = 0; i < opt.tasks; ++i) {
      const GaussianTask t = random_1d_task(rng, false);
      const double bound = bayes_bound(t);
      const MonteCarloResult mc = monte_carlo_bayes(t, opt.samples, rng);
      const bool ok = mc.error_rate <= bound + 3.0 * mc.ci_half_width;
      if (!ok) violations++;
      tasks.push_back({{"mu1", t.mean1[0]},
                       {"var1", t.cov1[0]},
                       {"mu2", t.mean2[0]},
                       {"var2", t.cov2[0]},
                       {"prior1", t.prior1},
                       {"bound", bound},
                       {"empirical", mc.error_rate},
                       {"ci", mc.ci_half_width},
                       {"within_bound", ok}});
    }
    report["tasks"] = tasks;
    report["summary"] = {{"count", opt.tasks}, {"violations", violations}};
    std::cout << "bayes-bound: " << (opt.tasks - violations) << "/" << opt.tasks
              << " tasks within bound\n";
  } else if (opt.preset == "ensemble-sweep") {
    // formula-level sweep: uniform noise, sigma^2 = tau^2 / 3
    const GaussianTask base = GaussianTask::one_dim(0.0, 1.0, 2.0, 1.0, 0.5);
    const double bayes = bayes_bound(base);
    const double tau1 = 0.3;
    json sweep = json::array();
    std::ostringstream csv;
    csv << "ratio,single_bound,ensemble_bound\n";
    for (double ratio = 0.1; ratio <= 3.0 + 1e-9; ratio += 0.05) {
      const BranchNoise f = BranchNoise::uniform(tau1, tau1);
      const BranchNoise g = BranchNoise::uniform(ratio * tau1, ratio * tau1);
      const double single = expected_error_single(bayes, f, base);
      const double ensemble = expected_error_ensemble(bayes, f, g, base);
      sweep.push_back({{"ratio", ratio}, {"single", single}, {"ensemble", ensemble}});
      char line[128];
      std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g\n", ratio, single, ensemble);
      csv << line;
    }
    // bisection for the crossing of the two bound curves
    auto diff = [&](double ratio) {
      const BranchNoise f = BranchNoise::uniform(tau1, tau1);
      const BranchNoise g = BranchNoise::uniform(ratio * tau1, ratio * tau1);
      return expected_error_ensemble(bayes, f, g, base) - expected_error_single(bayes, f, base);
    };
    double lo = 0.1, hi = 3.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (diff(mid) < 0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double crossing = 0.5 * (lo + hi);
    report["sweep"] = sweep;
    report["crossing_ratio"] = crossing;
    report["crossing_expected"] = std::sqrt(3.0);

    // simulation: iid uniform noise with tau2 = tau1
    json sims = json::array();
    int improved = 0;
    const int sim_tasks = std::min(opt.tasks, 20);
    for (int i = 0; i < sim_tasks; ++i) {
      const GaussianTask t = random_1d_task(rng, true);
      const double tau = rng.uniform(0.15, 0.35);
      const BranchNoise noise = BranchNoise::uniform(tau, tau);
      const NoisyClassifierResult r = monte_carlo_noisy_classifiers(t, noise, noise, opt.samples, rng);
      const bool better = r.ensemble.error_rate <= r.single_f.error_rate;
      if (better) improved++;
      sims.push_back({{"tau", tau},
                      {"err_f", r.single_f.error_rate},
                      {"err_g", r.single_g.error_rate},
                      {"err_ensemble", r.ensemble.error_rate},
                      {"ci", r.single_f.ci_half_width},
                      {"improved", better}});
    }
    report["simulation"] = {{"tasks", sims}, {"improved_count", improved}, {"count", sim_tasks}};
    if (!opt.csv.empty()) write_text(opt.csv, csv.str());
    std::cout << "ensemble-sweep: crossing at ratio " << crossing << " (expected "
              << std::sqrt(3.0) << "); simulation improved " << improved << "/" << sim_tasks << "\n";
  } else {
    fail(ErrorCode::ConfigError, "unknown preset '" + opt.preset + "'");
  }
  if (!opt.out.empty()) write_text(opt.out, report.dump(2) + "\n");
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"atomic and subgraph-aware bilateral aggregation for molecular property prediction"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "emit a synthetic labeled molecule file");
  ConfigBinder gen_cfg(gen);
  std::string gen_kind = "motif", gen_out;
  int gen_n = 200;
  uint64_t gen_seed = 0;
  bool gen_no_labels = false;
  gen_cfg.bind("--kind", "kind", &gen_kind, "atoms | motif");
  gen_cfg.bind("--n", "n", &gen_n, "number of molecules");
  gen_cfg.bind("--seed", "seed", &gen_seed, "generator seed");
  gen_cfg.bind("--out", "out", &gen_out, "output file");
  gen_cfg.bind_flag("--no-labels", "no_labels", &gen_no_labels, "omit labels");

  // mine-vocab
  auto* mine = app.add_subcommand("mine-vocab", "mine a subgraph vocabulary from a corpus");
  ConfigBinder mine_cfg(mine);
  std::string mine_corpus, mine_out;
  int mine_size = 100, mine_cap = kDefaultPatternCap;
  mine_cfg.bind("--corpus", "corpus", &mine_corpus, "corpus file (native or SMILES)");
  mine_cfg.bind("--size", "size", &mine_size, "target vocabulary size");
  mine_cfg.bind("--cap", "cap", &mine_cap, "max pattern atoms");
  mine_cfg.bind("--out", "out", &mine_out, "vocabulary output file");

  // decompose
  auto* dec = app.add_subcommand("decompose", "dump tokenized decompositions");
  ConfigBinder dec_cfg(dec);
  std::string dec_vocab, dec_input, dec_out, dec_method = "greedy";
  dec_cfg.bind("--vocab", "vocab", &dec_vocab, "vocabulary file");
  dec_cfg.bind("--input", "input", &dec_input, "molecule file");
  dec_cfg.bind("--out", "out", &dec_out, "output file (default stdout)");
  dec_cfg.bind("--method", "method", &dec_method, "greedy | rules");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "masked-token + contrastive pretraining");
  ConfigBinder pre_cfg(pre);
  PretrainOptions pre_opt;
  pre_cfg.bind("--corpus", "corpus", &pre_opt.corpus, "unlabeled corpus file");
  pre_cfg.bind("--vocab", "vocab", &pre_opt.vocab, "vocabulary file");
  pre_cfg.bind("--out", "out", &pre_opt.out_checkpoint, "checkpoint output");
  pre_cfg.bind("--report", "report", &pre_opt.report, "metrics report output");
  pre_cfg.bind("--steps", "steps", &pre_opt.steps, "optimizer steps");
  pre_cfg.bind("--epochs", "epochs", &pre_opt.epochs, "full corpus passes (overrides --steps)");
  pre_cfg.bind("--batch-size", "batch_size", &pre_opt.batch_size, "batch size");
  pre_cfg.bind("--mask-ratio", "mask_ratio", &pre_opt.mask_ratio, "masked fraction");
  pre_cfg.bind("--lambda-cl", "lambda_cl", &pre_opt.lambda_cl, "contrastive weight");
  pre_cfg.bind("--lr", "lr", &pre_opt.lr, "Adam learning rate");
  pre_cfg.bind("--seed", "seed", &pre_opt.seed, "run seed");
  pre_opt.encoder.bind(pre_cfg);

  // finetune
  auto* fit = app.add_subcommand("finetune", "supervised training of both branches");
  ConfigBinder fit_cfg(fit);
  FinetuneOptions fit_opt;
  fit_cfg.bind("--train", "train", &fit_opt.train_path, "training molecules");
  fit_cfg.bind("--valid", "valid", &fit_opt.valid_path, "validation molecules");
  fit_cfg.bind("--test", "test", &fit_opt.test_path, "test molecules");
  fit_cfg.bind("--data", "data", &fit_opt.data_path, "single file, split by scaffold");
  fit_cfg.bind("--split", "split", &fit_opt.split, "scaffold | scaffold-random");
  fit_cfg.bind("--frac-train", "frac_train", &fit_opt.frac_train, "train fraction");
  fit_cfg.bind("--frac-valid", "frac_valid", &fit_opt.frac_valid, "valid fraction");
  fit_cfg.bind("--vocab", "vocab", &fit_opt.vocab, "vocabulary file");
  fit_cfg.bind("--init", "init", &fit_opt.init_checkpoint, "initial checkpoint");
  fit_cfg.bind("--out", "out", &fit_opt.out_checkpoint, "checkpoint output");
  fit_cfg.bind("--report", "report", &fit_opt.report, "metrics report output");
  fit_cfg.bind("--protocol", "protocol", &fit_opt.protocol, "full | linear-probe");
  fit_cfg.bind("--task", "task", &fit_opt.task, "classification | regression");
  fit_cfg.bind("--epochs", "epochs", &fit_opt.epochs, "training epochs");
  fit_cfg.bind("--batch-size", "batch_size", &fit_opt.batch_size, "batch size");
  fit_cfg.bind("--lr", "lr", &fit_opt.lr, "Adam learning rate");
  fit_cfg.bind("--seeds", "seeds", &fit_opt.seeds, "comma-separated seeds");
  fit_opt.encoder.bind(fit_cfg);

  // eval
  auto* ev = app.add_subcommand("eval", "score a dataset with a trained checkpoint");
  ConfigBinder ev_cfg(ev);
  std::string ev_ckpt, ev_vocab, ev_data, ev_report;
  ev_cfg.bind("--checkpoint", "checkpoint", &ev_ckpt, "checkpoint file");
  ev_cfg.bind("--vocab", "vocab", &ev_vocab, "vocabulary file");
  ev_cfg.bind("--data", "data", &ev_data, "molecule file");
  ev_cfg.bind("--report", "report", &ev_report, "report output");

  // bounds-sim
  auto* bs = app.add_subcommand("bounds-sim", "error-bound evaluation and Monte-Carlo validation");
  ConfigBinder bs_cfg(bs);
  BoundsOptions bs_opt;
  bs_cfg.bind("--preset", "preset", &bs_opt.preset, "bayes-bound | ensemble-sweep");
  bs_cfg.bind("--tasks", "tasks", &bs_opt.tasks, "number of random tasks");
  bs_cfg.bind("--samples", "samples", &bs_opt.samples, "Monte-Carlo samples per task");
  bs_cfg.bind("--seed", "seed", &bs_opt.seed, "run seed");
  bs_cfg.bind("--out", "out", &bs_opt.out, "report output");
  bs_cfg.bind("--csv", "csv", &bs_opt.csv, "CSV sweep output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return 0;
    }
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) {
      const json resolved = gen_cfg.resolve();
      log_config("generate", resolved);
      if (gen_out.empty()) fail(ErrorCode::ConfigError, "--out is required");
      return run_generate(gen_kind, gen_n, gen_seed, gen_out, !gen_no_labels);
    }
    if (mine->parsed()) {
      const json resolved = mine_cfg.resolve();
      log_config("mine-vocab", resolved);
      if (mine_corpus.empty() || mine_out.empty()) {
        fail(ErrorCode::ConfigError, "--corpus and --out are required");
      }
      return run_mine_vocab(mine_corpus, mine_size, mine_cap, mine_out);
    }
    if (dec->parsed()) {
      const json resolved = dec_cfg.resolve();
      log_config("decompose", resolved);
      if (dec_vocab.empty() || dec_input.empty()) {
        fail(ErrorCode::ConfigError, "--vocab and --input are required");
      }
      return run_decompose(dec_vocab, dec_input, dec_out, dec_method);
    }
    if (pre->parsed()) {
      const json resolved = pre_cfg.resolve();
      log_config("pretrain", resolved);
      if (pre_opt.corpus.empty() || pre_opt.vocab.empty() || pre_opt.out_checkpoint.empty()) {
        fail(ErrorCode::ConfigError, "--corpus, --vocab, and --out are required");
      }
      return run_pretrain(pre_opt, resolved);
    }
    if (fit->parsed()) {
      const json resolved = fit_cfg.resolve();
      log_config("finetune", resolved);
      if (fit_opt.vocab.empty()) fail(ErrorCode::ConfigError, "--vocab is required");
      return run_finetune(fit_opt, resolved);
    }
    if (ev->parsed()) {
      const json resolved = ev_cfg.resolve();
      log_config("eval", resolved);
      if (ev_ckpt.empty() || ev_vocab.empty() || ev_data.empty()) {
        fail(ErrorCode::ConfigError, "--checkpoint, --vocab, and --data are required");
      }
      return run_eval(ev_ckpt, ev_vocab, ev_data, ev_report, resolved);
    }
    if (bs->parsed()) {
      const json resolved = bs_cfg.resolve();
      log_config("bounds-sim", resolved);
      return run_bounds_sim(bs_opt, resolved);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return error_exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace asba
