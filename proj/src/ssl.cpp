#include "asba/ssl.hpp"

#include <algorithm>
#include <cmath>

namespace asba {

MaskPlan mask_subgraphs(const Decomposition& d, double ratio, Rng& rng) {
  MaskPlan plan;
  const int t = d.num_parts();
  if (ratio <= 0.0 || t < 2) return plan;
  std::vector<int> eligible;
  for (int i = 0; i < t; ++i) {
    if (!d.parts[i].local && d.parts[i].token >= 0) eligible.push_back(i);
  }
  if (eligible.empty()) return plan;
  int want = std::max(1, static_cast<int>(std::lround(ratio * t)));
  want = std::min(want, static_cast<int>(eligible.size()));
  const auto picks = rng.sample_without_replacement(static_cast<int>(eligible.size()), want);
  plan.masked_parts.reserve(picks.size());
  for (int p : picks) plan.masked_parts.push_back(eligible[p]);
  std::sort(plan.masked_parts.begin(), plan.masked_parts.end());
  return plan;
}

TensorRef mstm_loss(Tape& tape, const EncoderConfig& cfg, const MolGraph& g,
                    const Decomposition& d, const QuotientGraph& q, const MaskPlan& plan,
                    int vocab_size) {
  if (plan.empty()) fail(ErrorCode::EmptyInput, "mask plan is empty");
  std::vector<int> targets;
  targets.reserve(plan.masked_parts.size());
  for (int p : plan.masked_parts) {
    const auto& part = d.parts[p];
    if (part.local || part.token < 0 || part.token >= vocab_size) {
      fail(ErrorCode::LocalTokenNotPredictable, "part " + std::to_string(p));
    }
    targets.push_back(part.token);
  }
  TensorRef embeddings = subgraph_embed(tape, cfg, g, d);
  TensorRef corrupted = tape.replace_rows(embeddings, plan.masked_parts, tape.param("mstm.mask"));
  TensorRef polymerized = polymer_nodes(tape, cfg, corrupted, q);
  TensorRef at_masked = tape.gather_rows(polymerized, plan.masked_parts);
  TensorRef logits = tape.add_bias_row(tape.matmul(at_masked, tape.transpose(tape.param("mstm.w"))),
                                       tape.param("mstm.b"));
  return tape.softmax_cross_entropy(logits, targets);
}

std::vector<int> mstm_predict(Tape& tape, const EncoderConfig& cfg, const MolGraph& g,
                              const Decomposition& d, const QuotientGraph& q, const MaskPlan& plan,
                              int vocab_size) {
  if (plan.empty()) return {};
  TensorRef embeddings = subgraph_embed(tape, cfg, g, d);
  TensorRef corrupted = tape.replace_rows(embeddings, plan.masked_parts, tape.param("mstm.mask"));
  TensorRef polymerized = polymer_nodes(tape, cfg, corrupted, q);
  TensorRef at_masked = tape.gather_rows(polymerized, plan.masked_parts);
  TensorRef logits = tape.add_bias_row(tape.matmul(at_masked, tape.transpose(tape.param("mstm.w"))),
                                       tape.param("mstm.b"));
  const Tensor& L = tape.value(logits);
  (void)vocab_size;
  std::vector<int> out;
  out.reserve(plan.masked_parts.size());
  for (int i = 0; i < L.rows; ++i) {
    int best = 0;
    for (int j = 1; j < L.cols; ++j) {
      if (L.at(i, j) > L.at(i, best)) best = j;
    }
    out.push_back(best);
  }
  return out;
}

TensorRef atom_mask_loss(Tape& tape, const EncoderConfig& cfg, const MolGraph& g, double ratio,
                         Rng& rng) {
  const int n = g.num_atoms();
  if (n < 2) fail(ErrorCode::EmptyGraph, "atom masking needs at least 2 atoms");
  int want = std::max(1, static_cast<int>(std::lround(ratio * n)));
  want = std::min(want, n);
  const std::vector<int> masked = rng.sample_without_replacement(n, want);
  std::vector<int> targets;
  targets.reserve(masked.size());
  for (int v : masked) targets.push_back(g.atom_type(v));

  std::vector<int> types, degrees;
  for (int v = 0; v < n; ++v) {
    types.push_back(g.atom_type(v));
    degrees.push_back(g.degree(v));
  }
  TensorRef te = tape.embedding_lookup(tape.param("atom.embed.type"), types);
  TensorRef de = tape.embedding_lookup(tape.param("atom.embed.degree"), degrees);
  TensorRef h = tape.replace_rows(tape.add(te, de), masked, tape.param("atom.mask"));
  for (int k = 0; k < cfg.atom_layers; ++k) {
    h = gin_layer(tape, h, g.bonds(), gin_layer_refs(tape, "atom", k), cfg.self_weight_eps);
  }
  TensorRef at_masked = tape.gather_rows(h, masked);
  TensorRef logits = tape.add_bias_row(tape.matmul(at_masked, tape.param("atom.typehead.w")),
                                       tape.param("atom.typehead.b"));
  return tape.softmax_cross_entropy(logits, targets);
}

TensorRef contrastive_loss(Tape& tape, const std::vector<std::pair<TensorRef, TensorRef>>& batch) {
  if (batch.size() < 2) {
    fail(ErrorCode::BatchTooSmall, "contrastive batch of " + std::to_string(batch.size()));
  }
  std::vector<TensorRef> anchors, candidates;
  anchors.reserve(batch.size());
  candidates.reserve(batch.size());
  for (const auto& [z_a, z_s] : batch) {
    anchors.push_back(z_s);
    candidates.push_back(z_a);
  }
  TensorRef s = tape.concat_rows(anchors);
  TensorRef a = tape.concat_rows(candidates);
  TensorRef logits = tape.matmul(s, tape.transpose(a));
  std::vector<int> targets(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) targets[i] = static_cast<int>(i);
  return tape.softmax_cross_entropy(logits, targets);
}

TensorRef pretrain_step(Tape& tape, const EncoderConfig& cfg, const std::vector<PretrainItem>& batch,
                        int vocab_size, double mask_ratio, double lambda_cl, Rng& rng,
                        PretrainStepStats* stats) {
  if (batch.empty()) fail(ErrorCode::EmptyInput, "empty pretraining batch");
  std::vector<TensorRef> mstm_terms, atom_terms;
  std::vector<std::pair<TensorRef, TensorRef>> pairs;
  for (const auto& item : batch) {
    const MolGraph& g = *item.graph;
    const MaskPlan plan = mask_subgraphs(*item.decomposition, mask_ratio, rng);
    if (!plan.empty()) {
      mstm_terms.push_back(mstm_loss(tape, cfg, g, *item.decomposition, *item.quotient, plan, vocab_size));
    }
    if (g.num_atoms() >= 2) {
      atom_terms.push_back(atom_mask_loss(tape, cfg, g, mask_ratio, rng));
    }
    // clean encodings for the graph-level term
    BranchOutput f = atom_branch(tape, cfg, g);
    TensorRef parts = subgraph_embed(tape, cfg, g, *item.decomposition);
    BranchOutput s = polymerize(tape, cfg, parts, *item.quotient);
    pairs.emplace_back(f.pooled, s.pooled);
  }
  auto mean_of = [&](const std::vector<TensorRef>& terms) {
    TensorRef acc = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) acc = tape.add(acc, terms[i]);
    return tape.scale(acc, 1.0 / terms.size());
  };
  TensorRef total = tape.constant(Tensor::scalar(0.0));
  PretrainStepStats local;
  if (!mstm_terms.empty()) {
    TensorRef m = mean_of(mstm_terms);
    local.mstm = tape.value(m).data[0];
    total = tape.add(total, m);
  } else {
    local.mstm_skipped = true;
  }
  local.mstm_molecules = static_cast<int>(mstm_terms.size());
  if (!atom_terms.empty()) {
    TensorRef a = mean_of(atom_terms);
    local.atom_mask = tape.value(a).data[0];
    total = tape.add(total, a);
  }
  local.atom_mask_molecules = static_cast<int>(atom_terms.size());
  if (lambda_cl != 0.0 && pairs.size() >= 2) {
    TensorRef c = contrastive_loss(tape, pairs);
    local.contrastive = tape.value(c).data[0];
    total = tape.add(total, tape.scale(c, lambda_cl));
  }
  local.total = tape.value(total).data[0];
  if (stats) *stats = local;
  return total;
}

}  // namespace asba
