#include "asba/gnn.hpp"

#include <algorithm>
#include <cmath>

#include "asba/rng.hpp"

namespace asba {

void EncoderConfig::validate() const {
  if (hidden_dim < 1 || atom_layers < 1 || subgraph_layers < 1 || polymer_layers < 1 || num_tasks < 1) {
    fail(ErrorCode::ConfigError, "encoder dimensions and depths must be >= 1");
  }
  if (atom_type_count < 1 || atom_type_count > kAtomAlphabetSize) {
    fail(ErrorCode::ConfigError, "atom_type_count must be in [1, " + std::to_string(kAtomAlphabetSize) + "]");
  }
  if (degree_slots < 2) fail(ErrorCode::ConfigError, "degree_slots must be >= 2");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"hidden_dim", hidden_dim},     {"atom_layers", atom_layers},
          {"subgraph_layers", subgraph_layers}, {"polymer_layers", polymer_layers},
          {"num_tasks", num_tasks},       {"atom_type_count", atom_type_count},
          {"degree_slots", degree_slots}, {"self_weight_eps", self_weight_eps}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig cfg;
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.atom_layers = j.value("atom_layers", cfg.atom_layers);
  cfg.subgraph_layers = j.value("subgraph_layers", cfg.subgraph_layers);
  cfg.polymer_layers = j.value("polymer_layers", cfg.polymer_layers);
  cfg.num_tasks = j.value("num_tasks", cfg.num_tasks);
  cfg.atom_type_count = j.value("atom_type_count", cfg.atom_type_count);
  cfg.degree_slots = j.value("degree_slots", cfg.degree_slots);
  cfg.self_weight_eps = j.value("self_weight_eps", cfg.self_weight_eps);
  cfg.validate();
  return cfg;
}

namespace {

constexpr int kBondOrders = 3;

void init_uniform(Tensor& t, double bound, Rng& rng) {
  for (double& v : t.data) v = rng.uniform(-bound, bound);
}

void create_gin_stack(ParamStore& store, const std::string& prefix, int layers, int d, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (int k = 0; k < layers; ++k) {
    const std::string base = prefix + ".gin" + std::to_string(k) + ".";
    init_uniform(store.create(base + "w1", d, d), bound, rng);
    store.create(base + "b1", 1, d);
    init_uniform(store.create(base + "w2", d, d), bound, rng);
    store.create(base + "b2", 1, d);
    init_uniform(store.create(base + "edge", kBondOrders, d), bound, rng);
  }
}

void create_input_tables(ParamStore& store, const std::string& prefix, const EncoderConfig& cfg,
                         Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  init_uniform(store.create(prefix + ".embed.type", cfg.atom_type_count, cfg.hidden_dim), bound, rng);
  init_uniform(store.create(prefix + ".embed.degree", cfg.degree_slots, cfg.hidden_dim), bound, rng);
}

}  // namespace

void init_encoder_params(ParamStore& store, const EncoderConfig& cfg, int vocab_size, Rng& rng) {
  cfg.validate();
  const int d = cfg.hidden_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));

  create_input_tables(store, "atom", cfg, rng);
  create_gin_stack(store, "atom", cfg.atom_layers, d, rng);
  init_uniform(store.create("atom.head.w", d, cfg.num_tasks), bound, rng);
  store.create("atom.head.b", 1, cfg.num_tasks);
  // attribute-masking pretext pieces
  init_uniform(store.create("atom.mask", 1, d), bound, rng);
  init_uniform(store.create("atom.typehead.w", d, cfg.atom_type_count), bound, rng);
  store.create("atom.typehead.b", 1, cfg.atom_type_count);

  create_input_tables(store, "sub", cfg, rng);
  create_gin_stack(store, "sub", cfg.subgraph_layers, d, rng);

  create_gin_stack(store, "poly", cfg.polymer_layers, d, rng);
  init_uniform(store.create("poly.head.w", d, cfg.num_tasks), bound, rng);
  store.create("poly.head.b", 1, cfg.num_tasks);

  // masked-token modeling head: logits = h W^T + b over the vocabulary
  init_uniform(store.create("mstm.w", vocab_size, d), bound, rng);
  store.create("mstm.b", 1, vocab_size);
  init_uniform(store.create("mstm.mask", 1, d), bound, rng);
}

namespace {

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::vector<std::string> params_with_prefixes(const ParamStore& store,
                                              const std::vector<std::string>& prefixes) {
  std::vector<std::string> out;
  for (const auto& name : store.names()) {
    for (const auto& p : prefixes) {
      if (starts_with(name, p)) {
        out.push_back(name);
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> atom_branch_params(const ParamStore& store) {
  return params_with_prefixes(store, {"atom."});
}

std::vector<std::string> subgraph_branch_params(const ParamStore& store) {
  return params_with_prefixes(store, {"sub.", "poly."});
}

std::vector<std::string> head_params(const ParamStore& store) {
  return params_with_prefixes(store, {"atom.head.", "poly.head."});
}

GinLayerRefs gin_layer_refs(Tape& tape, const std::string& prefix, int layer) {
  const std::string base = prefix + ".gin" + std::to_string(layer) + ".";
  return {tape.param(base + "w1"), tape.param(base + "b1"), tape.param(base + "w2"),
          tape.param(base + "b2"), tape.param(base + "edge")};
}

TensorRef gin_layer(Tape& tape, TensorRef h, const std::vector<Bond>& edges,
                    const GinLayerRefs& params, double eps) {
  const int n = tape.value(h).rows;
  TensorRef pre = tape.scale(h, 1.0 + eps);
  if (!edges.empty()) {
    std::vector<int> us, vs, orders, seg;
    us.reserve(edges.size());
    vs.reserve(edges.size());
    orders.reserve(edges.size());
    for (const auto& e : edges) {
      if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
        fail(ErrorCode::IndexOutOfRange, "edge endpoint out of range");
      }
      if (e.order < 1 || e.order > kBondOrders) {
        fail(ErrorCode::IndexOutOfRange, "bond order " + std::to_string(e.order));
      }
      us.push_back(e.u);
      vs.push_back(e.v);
      orders.push_back(e.order - 1);
    }
    TensorRef edge_emb = tape.embedding_lookup(params.edge_table, orders);
    TensorRef h_u = tape.gather_rows(h, us);
    TensorRef h_v = tape.gather_rows(h, vs);
    // message into u comes from v (and vice versa), both offset by the edge
    TensorRef into_u = tape.add(h_v, edge_emb);
    TensorRef into_v = tape.add(h_u, edge_emb);
    TensorRef messages = tape.concat_rows({into_u, into_v});
    seg = us;
    seg.insert(seg.end(), vs.begin(), vs.end());
    TensorRef agg = tape.segment_sum(messages, seg, n);
    pre = tape.add(pre, agg);
  }
  TensorRef hidden = tape.relu(tape.add_bias_row(tape.matmul(pre, params.w1), params.b1));
  return tape.add_bias_row(tape.matmul(hidden, params.w2), params.b2);
}

namespace {

TensorRef input_embedding(Tape& tape, const EncoderConfig& cfg, const std::string& prefix,
                          const MolGraph& g) {
  std::vector<int> types, degrees;
  types.reserve(g.num_atoms());
  degrees.reserve(g.num_atoms());
  for (int v = 0; v < g.num_atoms(); ++v) {
    if (g.atom_type(v) >= cfg.atom_type_count) {
      fail(ErrorCode::IndexOutOfRange, "atom type " + std::to_string(g.atom_type(v)) +
                                           " outside configured alphabet of " +
                                           std::to_string(cfg.atom_type_count));
    }
    if (g.degree(v) >= cfg.degree_slots) {
      fail(ErrorCode::IndexOutOfRange, "degree " + std::to_string(g.degree(v)) + " exceeds " +
                                           std::to_string(cfg.degree_slots) + " slots");
    }
    types.push_back(g.atom_type(v));
    degrees.push_back(g.degree(v));
  }
  TensorRef te = tape.embedding_lookup(tape.param(prefix + ".embed.type"), types);
  TensorRef de = tape.embedding_lookup(tape.param(prefix + ".embed.degree"), degrees);
  return tape.add(te, de);
}

TensorRef head_logits(Tape& tape, const std::string& prefix, TensorRef pooled) {
  return tape.add_bias_row(tape.matmul(pooled, tape.param(prefix + ".head.w")),
                           tape.param(prefix + ".head.b"));
}

}  // namespace

BranchOutput atom_branch(Tape& tape, const EncoderConfig& cfg, const MolGraph& g) {
  if (g.num_atoms() == 0) fail(ErrorCode::EmptyGraph, "atom branch needs at least one atom");
  TensorRef h = input_embedding(tape, cfg, "atom", g);
  for (int k = 0; k < cfg.atom_layers; ++k) {
    h = gin_layer(tape, h, g.bonds(), gin_layer_refs(tape, "atom", k), cfg.self_weight_eps);
  }
  BranchOutput out;
  out.nodes = h;
  out.pooled = tape.row_mean(h);
  out.logits = head_logits(tape, "atom", out.pooled);
  return out;
}

TensorRef subgraph_embed(Tape& tape, const EncoderConfig& cfg, const MolGraph& g,
                         const Decomposition& d) {
  std::vector<TensorRef> pooled;
  pooled.reserve(d.num_parts());
  for (const auto& part : d.parts) {
    MolGraph sub = g.induced_subgraph(part.atoms);
    // canonical order makes the embedding a pure function of the pattern
    if (sub.num_atoms() <= kDefaultPatternCap) sub = canonical_form(sub).graph;
    TensorRef h = input_embedding(tape, cfg, "sub", sub);
    for (int k = 0; k < cfg.subgraph_layers; ++k) {
      h = gin_layer(tape, h, sub.bonds(), gin_layer_refs(tape, "sub", k), cfg.self_weight_eps);
    }
    pooled.push_back(tape.row_mean(h));
  }
  if (pooled.empty()) fail(ErrorCode::EmptyGraph, "decomposition has no parts");
  return tape.concat_rows(pooled);
}

TensorRef polymer_nodes(Tape& tape, const EncoderConfig& cfg, TensorRef part_embeddings,
                        const QuotientGraph& q) {
  if (tape.value(part_embeddings).rows != q.num_nodes()) {
    fail(ErrorCode::ShapeMismatch, "quotient nodes " + std::to_string(q.num_nodes()) +
                                       " != embeddings " +
                                       std::to_string(tape.value(part_embeddings).rows));
  }
  TensorRef h = part_embeddings;
  for (int k = 0; k < cfg.polymer_layers; ++k) {
    h = gin_layer(tape, h, q.edges, gin_layer_refs(tape, "poly", k), cfg.self_weight_eps);
  }
  return h;
}

BranchOutput polymerize(Tape& tape, const EncoderConfig& cfg, TensorRef part_embeddings,
                        const QuotientGraph& q) {
  BranchOutput out;
  out.nodes = polymer_nodes(tape, cfg, part_embeddings, q);
  out.pooled = tape.row_mean(out.nodes);
  out.logits = head_logits(tape, "poly", out.pooled);
  return out;
}

std::vector<double> bilateral_predict(const std::vector<double>& f_logits,
                                      const std::vector<double>& g_logits) {
  if (f_logits.size() != g_logits.size()) {
    fail(ErrorCode::ShapeMismatch, "bilateral_predict lengths " + std::to_string(f_logits.size()) +
                                       " vs " + std::to_string(g_logits.size()));
  }
  std::vector<double> out(f_logits.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (f_logits[i] + g_logits[i]);
  return out;
}

}  // namespace asba
