#include <doctest.h>

#include <cmath>
#include <set>

#include "asba/generate.hpp"
#include "asba/ssl.hpp"
#include "asba/train.hpp"
#include "oracles.hpp"

using namespace asba;

namespace {

EncoderConfig small_config(int tasks = 1) {
  EncoderConfig cfg;
  cfg.hidden_dim = 8;
  cfg.atom_layers = 2;
  cfg.subgraph_layers = 2;
  cfg.polymer_layers = 2;
  cfg.num_tasks = tasks;
  return cfg;
}

void zero_param(ParamStore& store, const std::string& name) {
  auto& t = store.value(name);
  std::fill(t.data.begin(), t.data.end(), 0.0);
}

struct Fixture {
  EncoderConfig cfg = small_config();
  SubgraphVocabulary vocab;
  ParamStore store;
  std::vector<MolGraph> mols;
  std::vector<Decomposition> decomps;
  std::vector<QuotientGraph> quotients;

  explicit Fixture(uint64_t seed = 1, int vocab_size = 12) {
    Rng rng(seed);
    std::vector<MolGraph> corpus;
    for (int i = 0; i < 20; ++i) corpus.push_back(oracles::random_molecule(rng, 8));
    vocab = mine_vocabulary(corpus, vocab_size, 6);
    Rng init = rng.child("params");
    init_encoder_params(store, cfg, vocab.size(), init);
    for (int i = 0; i < 8; ++i) {
      MolGraph g = oracles::random_molecule(rng, 8);
      bool covered = true;
      for (int t : g.atom_types()) covered = covered && vocab.has_atom_type(t);
      if (!covered || g.num_atoms() < 2) {
        --i;
        continue;
      }
      mols.push_back(g);
      decomps.push_back(decompose(mols.back(), vocab));
      quotients.push_back(quotient_graph(mols.back(), decomps.back()));
    }
  }

  std::vector<PretrainItem> batch() const {
    std::vector<PretrainItem> items;
    for (size_t i = 0; i < mols.size(); ++i) {
      items.push_back({&mols[i], &decomps[i], &quotients[i]});
    }
    return items;
  }
};

}  // namespace

TEST_SUITE("ssl") {

TEST_CASE("mask plans follow the size rule") {
  Decomposition d;
  for (int i = 0; i < 4; ++i) d.parts.push_back({i, false, {i}});
  Rng rng(1);
  CHECK(mask_subgraphs(d, 0.25, rng).masked_parts.size() == 1);
  CHECK(mask_subgraphs(d, 0.5, rng).masked_parts.size() == 2);
  CHECK(mask_subgraphs(d, 0.0, rng).empty());

  Decomposition single;
  single.parts.push_back({0, false, {0}});
  CHECK(mask_subgraphs(single, 0.5, rng).empty());
}

TEST_CASE("mask plans skip local parts and are seed-deterministic") {
  Decomposition d;
  d.parts.push_back({0, false, {0}});
  d.parts.push_back({-1, true, {1}});
  d.parts.push_back({2, false, {2}});
  Rng a(7), b(7);
  const MaskPlan p1 = mask_subgraphs(d, 0.9, a);
  const MaskPlan p2 = mask_subgraphs(d, 0.9, b);
  CHECK(p1.masked_parts == p2.masked_parts);
  for (int p : p1.masked_parts) CHECK_FALSE(d.parts[p].local);
}

TEST_CASE("uniform mstm head yields ln(M)") {
  Fixture fx(2, 12);
  zero_param(fx.store, "mstm.w");
  zero_param(fx.store, "mstm.b");
  // first molecule with at least 2 parts
  for (size_t i = 0; i < fx.mols.size(); ++i) {
    if (fx.decomps[i].num_parts() < 2) continue;
    Rng rng(3);
    const MaskPlan plan = mask_subgraphs(fx.decomps[i], 0.5, rng);
    REQUIRE_FALSE(plan.empty());
    Tape tape(&fx.store);
    TensorRef loss =
        mstm_loss(tape, fx.cfg, fx.mols[i], fx.decomps[i], fx.quotients[i], plan, fx.vocab.size());
    CHECK(tape.value(loss).data[0] ==
          doctest::Approx(std::log(static_cast<double>(fx.vocab.size()))).epsilon(1e-9));
    return;
  }
  FAIL("no multi-part molecule in fixture");
}

TEST_CASE("confident mstm head drives the loss to zero") {
  Fixture fx(3, 12);
  // make W_p produce a +20 margin on the true token via the bias alone
  zero_param(fx.store, "mstm.w");
  zero_param(fx.store, "mstm.b");
  for (size_t i = 0; i < fx.mols.size(); ++i) {
    if (fx.decomps[i].num_parts() < 2) continue;
    Rng rng(5);
    const MaskPlan plan = mask_subgraphs(fx.decomps[i], 0.25, rng);
    if (plan.masked_parts.size() != 1) continue;
    const int token = fx.decomps[i].parts[plan.masked_parts[0]].token;
    fx.store.value("mstm.b").at(0, token) = 20.0;
    Tape tape(&fx.store);
    TensorRef loss =
        mstm_loss(tape, fx.cfg, fx.mols[i], fx.decomps[i], fx.quotients[i], plan, fx.vocab.size());
    CHECK(tape.value(loss).data[0] <= 1e-6);
    return;
  }
  FAIL("no multi-part molecule in fixture");
}

TEST_CASE("masked parts do not leak their content") {
  // two molecules identical except inside one part; masking that part must
  // give identical losses
  Fixture fx(11, 12);
  const int kC = atom_type_from_symbol("C");
  const int kO = atom_type_from_symbol("O");
  const int kN = atom_type_from_symbol("N");
  const MolGraph a = MolGraph::build({kC, kC, kO}, {{0, 1, 1}, {1, 2, 1}});
  const MolGraph b = MolGraph::build({kC, kC, kN}, {{0, 1, 1}, {1, 2, 1}});
  // identical partitions: part 0 = {0,1}, part 1 = {2}; mask part 1
  Decomposition da, db;
  da.parts.push_back({0, false, {0, 1}});
  da.parts.push_back({1, false, {2}});
  da.inter_bonds = {1};
  db = da;
  const QuotientGraph qa = quotient_graph(a, da);
  const QuotientGraph qb = quotient_graph(b, db);
  MaskPlan plan;
  plan.masked_parts = {1};
  Tape ta(&fx.store), tb(&fx.store);
  const double la = ta.value(mstm_loss(ta, fx.cfg, a, da, qa, plan, fx.vocab.size())).data[0];
  const double lb = tb.value(mstm_loss(tb, fx.cfg, b, db, qb, plan, fx.vocab.size())).data[0];
  CHECK(la == lb);
}

TEST_CASE("uniform atom head yields ln(alphabet)") {
  EncoderConfig cfg = small_config();
  cfg.atom_type_count = 8;  // single-letter alphabet
  ParamStore store;
  Rng init(13);
  init_encoder_params(store, cfg, 6, init);
  zero_param(store, "atom.typehead.w");
  zero_param(store, "atom.typehead.b");
  const MolGraph g = parse_smiles_subset("CCNCO");
  Rng rng(17);
  Tape tape(&store);
  TensorRef loss = atom_mask_loss(tape, cfg, g, 0.25, rng);
  CHECK(tape.value(loss).data[0] == doctest::Approx(std::log(8.0)).epsilon(1e-9));
}

TEST_CASE("atom masking size rule and determinism") {
  EncoderConfig cfg = small_config();
  ParamStore store;
  Rng init(19);
  init_encoder_params(store, cfg, 6, init);
  const MolGraph g = parse_smiles_subset("CCCCCCCCCC");  // 10 atoms
  Rng r1(23), r2(23);
  Tape t1(&store), t2(&store);
  const double l1 = t1.value(atom_mask_loss(t1, cfg, g, 0.05, r1)).data[0];  // 1 atom masked
  const double l2 = t2.value(atom_mask_loss(t2, cfg, g, 0.05, r2)).data[0];
  CHECK(l1 == l2);
}

TEST_CASE("contrastive loss closed forms") {
  Tape tape;
  auto row = [&](std::vector<double> v) { return tape.constant(Tensor::row(std::move(v))); };

  // B=2, all embeddings equal -> ln 2
  {
    std::vector<std::pair<TensorRef, TensorRef>> batch{{row({1, 1}), row({1, 1})},
                                                       {row({1, 1}), row({1, 1})}};
    CHECK(tape.value(contrastive_loss(tape, batch)).data[0] ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  // B=3, all dot products equal -> ln 3
  {
    std::vector<std::pair<TensorRef, TensorRef>> batch{{row({1, 0}), row({0, 1})},
                                                       {row({1, 0}), row({0, 1})},
                                                       {row({1, 0}), row({0, 1})}};
    CHECK(tape.value(contrastive_loss(tape, batch)).data[0] ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
  // dominant positive with margin 20 -> per-anchor term ~ 0
  {
    std::vector<std::pair<TensorRef, TensorRef>> batch{{row({20, 0}), row({1, 0})},
                                                       {row({0, 0}), row({0, 1})}};
    const double loss = tape.value(contrastive_loss(tape, batch)).data[0];
    // anchor 0: exp(20) vs exp(0); anchor 1: 0 vs 0 -> ln 2 / 2 total
    CHECK(loss == doctest::Approx(std::log(2.0) / 2).epsilon(1e-7));
  }
  // B=1 rejected
  {
    std::vector<std::pair<TensorRef, TensorRef>> batch{{row({1}), row({1})}};
    CHECK_THROWS_AS(contrastive_loss(tape, batch), Error);
  }
}

TEST_CASE("contrastive loss is invariant under batch permutation") {
  Fixture fx(29, 12);
  auto run = [&](const std::vector<int>& order) {
    Tape tape(&fx.store);
    std::vector<std::pair<TensorRef, TensorRef>> pairs;
    for (int i : order) {
      BranchOutput f = atom_branch(tape, fx.cfg, fx.mols[i]);
      TensorRef parts = subgraph_embed(tape, fx.cfg, fx.mols[i], fx.decomps[i]);
      BranchOutput s = polymerize(tape, fx.cfg, parts, fx.quotients[i]);
      pairs.emplace_back(f.pooled, s.pooled);
    }
    return tape.value(contrastive_loss(tape, pairs)).data[0];
  };
  const double l1 = run({0, 1, 2, 3});
  const double l2 = run({3, 1, 0, 2});
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-10));
}

TEST_CASE("contrastive loss is nonnegative") {
  Fixture fx(31, 12);
  Tape tape(&fx.store);
  std::vector<std::pair<TensorRef, TensorRef>> pairs;
  for (size_t i = 0; i < 4; ++i) {
    BranchOutput f = atom_branch(tape, fx.cfg, fx.mols[i]);
    TensorRef parts = subgraph_embed(tape, fx.cfg, fx.mols[i], fx.decomps[i]);
    BranchOutput s = polymerize(tape, fx.cfg, parts, fx.quotients[i]);
    pairs.emplace_back(f.pooled, s.pooled);
  }
  CHECK(tape.value(contrastive_loss(tape, pairs)).data[0] >= 0.0);
}

TEST_CASE("pretrain_step composes the three terms") {
  Fixture fx(37, 12);
  Rng rng(41);
  Tape tape(&fx.store);
  PretrainStepStats stats;
  TensorRef total = pretrain_step(tape, fx.cfg, fx.batch(), fx.vocab.size(), 0.25, 1.0, rng, &stats);
  CHECK(tape.value(total).data[0] ==
        doctest::Approx(stats.mstm + stats.atom_mask + stats.contrastive).epsilon(1e-9));
  CHECK(stats.atom_mask_molecules == static_cast<int>(fx.mols.size()));

  // lambda 0 drops the contrastive term from the total
  Rng rng2(41);
  Tape tape2(&fx.store);
  PretrainStepStats stats2;
  TensorRef total2 = pretrain_step(tape2, fx.cfg, fx.batch(), fx.vocab.size(), 0.25, 0.0, rng2, &stats2);
  CHECK(tape2.value(total2).data[0] == doctest::Approx(stats2.mstm + stats2.atom_mask).epsilon(1e-9));
}

TEST_CASE("all-single-part batches skip the masked-token term") {
  EncoderConfig cfg = small_config();
  const std::vector<MolGraph> corpus{parse_smiles_subset("CC"), parse_smiles_subset("CC")};
  const SubgraphVocabulary vocab = mine_vocabulary(corpus, 2, 3);
  ParamStore store;
  Rng init(43);
  init_encoder_params(store, cfg, vocab.size(), init);
  const MolGraph cc = parse_smiles_subset("CC");
  const Decomposition d = decompose(cc, vocab);
  REQUIRE(d.num_parts() == 1);
  const QuotientGraph q = quotient_graph(cc, d);
  std::vector<PretrainItem> batch{{&cc, &d, &q}, {&cc, &d, &q}};
  Rng rng(47);
  Tape tape(&store);
  PretrainStepStats stats;
  pretrain_step(tape, cfg, batch, vocab.size(), 0.25, 1.0, rng, &stats);
  CHECK(stats.mstm_skipped);
  CHECK(stats.mstm_molecules == 0);
}

TEST_CASE("all three losses pass the finite-difference check at 1e-4") {
  Fixture fx(53, 10);
  std::vector<PretrainItem> batch;
  for (size_t i = 0; i < 3; ++i) batch.push_back({&fx.mols[i], &fx.decomps[i], &fx.quotients[i]});
  auto build = [&](Tape& tape) {
    Rng rng(59);  // same masks every evaluation
    return pretrain_step(tape, fx.cfg, batch, fx.vocab.size(), 0.3, 1.0, rng, nullptr);
  };
  const FiniteDiffReport report = finite_diff_check(fx.store, build, 1e-5, 1e-4);
  CHECK_MESSAGE(report.pass, "max rel err ", report.max_rel_err, " failures ",
                report.failures.size());
}

TEST_CASE("a few hundred steps beat chance by 5x on a synthetic corpus") {
  // learnability smoke: structured corpus, small model, fixed seed
  EncoderConfig cfg = small_config();
  cfg.hidden_dim = 16;
  Rng rng(61);
  std::vector<MolGraph> corpus;
  {
    Rng gen = rng.child("corpus");
    for (const auto& m : generate_motif_task(50, gen)) corpus.push_back(m.graph);
  }
  const SubgraphVocabulary vocab = mine_vocabulary(corpus, 60, 12);
  std::vector<MolGraph> usable;
  std::vector<Decomposition> decomps;
  std::vector<QuotientGraph> quotients;
  for (const auto& g : corpus) {
    usable.push_back(g);
    decomps.push_back(decompose(g, vocab));
    quotients.push_back(quotient_graph(g, decomps.back()));
  }
  ParamStore store;
  Rng init = rng.child("params");
  init_encoder_params(store, cfg, vocab.size(), init);
  AdamOptimizer opt(store.names(), 1e-3);
  Rng masks = rng.child("masks");
  for (int step = 0; step < 300; ++step) {
    std::vector<PretrainItem> batch;
    for (int k = 0; k < 8; ++k) {
      const int i = (step * 8 + k) % static_cast<int>(usable.size());
      batch.push_back({&usable[i], &decomps[i], &quotients[i]});
    }
    store.zero_grads();
    Tape tape(&store);
    TensorRef loss = pretrain_step(tape, cfg, batch, vocab.size(), 0.25, 0.0, masks, nullptr);
    tape.backward(loss);
    opt.step(store);
  }
  Rng eval = rng.child("eval");
  long long hits = 0, total = 0;
  for (size_t i = 0; i < usable.size(); ++i) {
    const MaskPlan plan = mask_subgraphs(decomps[i], 0.25, eval);
    if (plan.empty()) continue;
    Tape tape(&store);
    const auto pred = mstm_predict(tape, cfg, usable[i], decomps[i], quotients[i], plan, vocab.size());
    for (size_t k = 0; k < plan.masked_parts.size(); ++k) {
      total++;
      if (pred[k] == decomps[i].parts[plan.masked_parts[k]].token) hits++;
    }
  }
  REQUIRE(total > 0);
  const double accuracy = static_cast<double>(hits) / total;
  CHECK(accuracy >= 5.0 / vocab.size());
}

}  // TEST_SUITE
