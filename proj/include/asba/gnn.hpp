#pragma once

#include <string>
#include <vector>

#include "asba/fragment.hpp"
#include "asba/mol_graph.hpp"
#include "asba/tensor.hpp"

namespace asba {

class Rng;

struct EncoderConfig {
  int hidden_dim = 64;       // embedding width
  int atom_layers = 3;       // depth of the atom-wise branch
  int subgraph_layers = 2;   // depth of the per-subgraph embedding GNN
  int polymer_layers = 3;    // depth of the quotient-graph GNN
  int num_tasks = 1;         // property head width
  int atom_type_count = kAtomAlphabetSize;
  int degree_slots = 16;
  double self_weight_eps = 0.0;  // GIN (1 + eps) self term

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

// Creates every learnable tensor for both branches plus the self-supervised
// heads: atom.*, sub.*, poly.*, mstm.* (weights uniform +-1/sqrt(fan_in),
// biases zero). Deterministic for a given rng stream.
void init_encoder_params(ParamStore& store, const EncoderConfig& cfg, int vocab_size, Rng& rng);

// parameter name prefixes per optimization unit
std::vector<std::string> atom_branch_params(const ParamStore& store);
std::vector<std::string> subgraph_branch_params(const ParamStore& store);
std::vector<std::string> head_params(const ParamStore& store);

struct GinLayerRefs {
  TensorRef w1, b1, w2, b2, edge_table;
};
GinLayerRefs gin_layer_refs(Tape& tape, const std::string& prefix, int layer);

// One GIN update: h_v <- MLP((1+eps) h_v + sum_{u in N(v)} (h_u + E[order])).
// `edges` are undirected; each contributes to both endpoints.
TensorRef gin_layer(Tape& tape, TensorRef h, const std::vector<Bond>& edges,
                    const GinLayerRefs& params, double eps);

struct BranchOutput {
  TensorRef nodes;   // final per-node (or per-part) embeddings
  TensorRef pooled;  // mean readout, 1 x d
  TensorRef logits;  // 1 x L
};

// Atom-wise branch: type+degree input embedding, K GIN layers, mean readout,
// linear property head.
BranchOutput atom_branch(Tape& tape, const EncoderConfig& cfg, const MolGraph& g);

// Per-part embeddings with inter-subgraph edges discarded: each part is
// embedded on its induced subgraph in canonical atom order, so the result
// depends only on (pattern, params). Returns a T x d matrix.
TensorRef subgraph_embed(Tape& tape, const EncoderConfig& cfg, const MolGraph& g,
                         const Decomposition& d);

// K2 GIN layers over the quotient graph, without the readout head.
TensorRef polymer_nodes(Tape& tape, const EncoderConfig& cfg, TensorRef part_embeddings,
                        const QuotientGraph& q);

// polymer_nodes + mean readout + linear property head
BranchOutput polymerize(Tape& tape, const EncoderConfig& cfg, TensorRef part_embeddings,
                        const QuotientGraph& q);

// element-wise average of the two branch outputs
std::vector<double> bilateral_predict(const std::vector<double>& f_logits,
                                      const std::vector<double>& g_logits);

}  // namespace asba
