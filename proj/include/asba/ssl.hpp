#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "asba/gnn.hpp"
#include "asba/rng.hpp"

namespace asba {

struct MaskPlan {
  std::vector<int> masked_parts;  // ascending part indices

  bool empty() const { return masked_parts.empty(); }
};

// Uniformly random subset of max(1, round(ratio*T)) parts when ratio > 0 and
// T >= 2; single-part molecules and parts without a vocabulary token are
// skipped. Deterministic given the rng state.
MaskPlan mask_subgraphs(const Decomposition& d, double ratio, Rng& rng);

// Masked-token objective: embed parts, swap masked rows for the learnable
// mask embedding, polymerize, and score each masked position against the
// vocabulary. Mean negative log-likelihood over masked positions.
TensorRef mstm_loss(Tape& tape, const EncoderConfig& cfg, const MolGraph& g,
                    const Decomposition& d, const QuotientGraph& q, const MaskPlan& plan,
                    int vocab_size);

// Argmax vocabulary tokens at the masked positions (evaluation only).
std::vector<int> mstm_predict(Tape& tape, const EncoderConfig& cfg, const MolGraph& g,
                              const Decomposition& d, const QuotientGraph& q, const MaskPlan& plan,
                              int vocab_size);

// Attribute masking on the atom branch: replace input embeddings of
// max(1, round(ratio*|V|)) atoms with the learnable atom mask and predict
// their types. Requires |V| >= 2.
TensorRef atom_mask_loss(Tape& tape, const EncoderConfig& cfg, const MolGraph& g, double ratio,
                         Rng& rng);

// In-batch contrastive coupling of the two branches: for each anchor i,
// -log softmax over dot(z_S_i, z_A_j) at j = i. Logits are shifted by the
// row max before exponentiation.
TensorRef contrastive_loss(Tape& tape, const std::vector<std::pair<TensorRef, TensorRef>>& batch);

struct PretrainItem {
  const MolGraph* graph = nullptr;
  const Decomposition* decomposition = nullptr;
  const QuotientGraph* quotient = nullptr;
};

struct PretrainStepStats {
  double total = 0;
  double mstm = 0;
  double atom_mask = 0;
  double contrastive = 0;
  int mstm_molecules = 0;      // molecules contributing a masked-token term
  int atom_mask_molecules = 0;
  bool mstm_skipped = false;   // every plan in the batch was empty
};

// total = mean masked-token loss + mean atom-mask loss + lambda_cl *
// contrastive over clean encodings. Returns the loss node; stats carry the
// per-term values.
TensorRef pretrain_step(Tape& tape, const EncoderConfig& cfg, const std::vector<PretrainItem>& batch,
                        int vocab_size, double mask_ratio, double lambda_cl, Rng& rng,
                        PretrainStepStats* stats);

}  // namespace asba
