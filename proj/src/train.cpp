#include "asba/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace asba {

Dataset Dataset::from_parsed(const std::vector<ParsedMolecule>& mols) {
  Dataset ds;
  for (const auto& m : mols) {
    ds.molecules.push_back(m.graph);
    ds.labels.push_back(m.labels);
    if (m.target) {
      ds.targets.push_back(*m.target);
      ds.has_targets = true;
    } else {
      ds.targets.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    ds.num_tasks = std::max(ds.num_tasks, static_cast<int>(m.labels.size()));
  }
  for (auto& l : ds.labels) l.resize(ds.num_tasks, -1);
  return ds;
}

Dataset Dataset::load_native(const std::string& path) {
  return from_parsed(load_native_file(path));
}

std::vector<Split> scaffold_split(const Dataset& ds, double f_train, double f_valid, double f_test,
                                  bool random_mode, uint64_t seed, std::string* warning) {
  (void)f_test;  // remainder goes to test
  if (ds.size() == 0) fail(ErrorCode::EmptyInput, "cannot split an empty dataset");
  std::map<std::string, std::vector<int>> groups;
  for (int i = 0; i < ds.size(); ++i) {
    groups[scaffold_key(ds.molecules[i])].push_back(i);
  }
  std::vector<std::pair<std::string, std::vector<int>>> ordered(groups.begin(), groups.end());
  if (random_mode) {
    Rng rng(seed);
    rng.shuffle(ordered);
  } else {
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.second.size() != b.second.size()) return a.second.size() > b.second.size();
      return a.first < b.first;
    });
  }
  const double n = ds.size();
  std::vector<Split> tags(ds.size(), Split::Test);
  double n_train = 0, n_valid = 0;
  int c_train = 0, c_valid = 0, c_test = 0;
  for (const auto& [key, members] : ordered) {
    Split where;
    if (n_train < f_train * n) {
      where = Split::Train;
      n_train += members.size();
      c_train += static_cast<int>(members.size());
    } else if (n_valid < f_valid * n) {
      where = Split::Valid;
      n_valid += members.size();
      c_valid += static_cast<int>(members.size());
    } else {
      where = Split::Test;
      c_test += static_cast<int>(members.size());
    }
    for (int i : members) tags[i] = where;
  }
  if (warning) {
    warning->clear();
    if (c_valid == 0 || c_test == 0) {
      *warning = "scaffold split produced an empty split (" + std::to_string(c_train) + "/" +
                 std::to_string(c_valid) + "/" + std::to_string(c_test) + ")";
    }
  }
  return tags;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::ShapeMismatch, "scores vs labels length");
  int pos = 0, neg = 0;
  for (int l : labels) {
    if (l == 1) {
      pos++;
    } else if (l == 0) {
      neg++;
    }
  }
  if (pos == 0 || neg == 0) fail(ErrorCode::SingleClass, "need both classes for ROC-AUC");
  // rank-sum with average ranks for ties
  std::vector<int> idx;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0 || labels[i] == 1) idx.push_back(static_cast<int>(i));
  }
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  return (rank_sum_pos - pos * (pos + 1.0) / 2.0) / (static_cast<double>(pos) * neg);
}

double roc_auc_multitask(const std::vector<std::vector<double>>& scores,
                         const std::vector<std::vector<int>>& labels, int* skipped_tasks) {
  if (scores.size() != labels.size() || scores.empty()) {
    fail(ErrorCode::ShapeMismatch, "scores vs labels shape");
  }
  const int num_tasks = static_cast<int>(scores[0].size());
  double sum = 0;
  int used = 0, skipped = 0;
  for (int t = 0; t < num_tasks; ++t) {
    std::vector<double> s;
    std::vector<int> l;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (labels[i][t] >= 0) {
        s.push_back(scores[i][t]);
        l.push_back(labels[i][t]);
      }
    }
    const bool has_pos = std::count(l.begin(), l.end(), 1) > 0;
    const bool has_neg = std::count(l.begin(), l.end(), 0) > 0;
    if (!has_pos || !has_neg) {
      skipped++;
      continue;
    }
    sum += roc_auc(s, l);
    used++;
  }
  if (skipped_tasks) *skipped_tasks = skipped;
  if (used == 0) fail(ErrorCode::SingleClass, "every task is single-class");
  return sum / used;
}

double rmse(const std::vector<double>& preds, const std::vector<double>& targets) {
  if (preds.size() != targets.size()) fail(ErrorCode::ShapeMismatch, "preds vs targets length");
  if (preds.empty()) fail(ErrorCode::EmptyInput, "rmse of nothing");
  double sum = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    sum += d * d;
  }
  return std::sqrt(sum / preds.size());
}

TensorRef supervised_loss(Tape& tape, TensorRef logits, const std::vector<std::vector<int>>& labels,
                          bool regression, const std::vector<double>& targets) {
  const Tensor& L = tape.value(logits);
  if (regression) {
    if (L.cols != 1) fail(ErrorCode::ShapeMismatch, "regression expects 1 task");
    Tensor t(L.rows, 1);
    for (int i = 0; i < L.rows; ++i) {
      if (std::isnan(targets[i])) fail(ErrorCode::AllLabelsMissing, "missing regression target");
      t.at(i, 0) = targets[i];
    }
    TensorRef diff = tape.add(logits, tape.scale(tape.constant(std::move(t)), -1.0));
    return tape.mean_all(tape.mul(diff, diff));
  }
  if (static_cast<int>(labels.size()) != L.rows) {
    fail(ErrorCode::ShapeMismatch, "labels " + std::to_string(labels.size()) + " for logits rows " +
                                       std::to_string(L.rows));
  }
  Tensor y(L.rows, L.cols), mask(L.rows, L.cols);
  for (int i = 0; i < L.rows; ++i) {
    if (static_cast<int>(labels[i].size()) != L.cols) {
      fail(ErrorCode::ShapeMismatch, "label width mismatch at row " + std::to_string(i));
    }
    for (int j = 0; j < L.cols; ++j) {
      if (labels[i][j] >= 0) {
        y.at(i, j) = labels[i][j];
        mask.at(i, j) = 1.0;
      }
    }
  }
  return tape.bce_with_logits(logits, y, mask);
}

AdamOptimizer::AdamOptimizer(std::vector<std::string> param_names, double lr, double beta1,
                             double beta2, double eps)
    : names_(std::move(param_names)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(ParamStore& store) {
  step_++;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (const auto& name : names_) {
    Tensor& value = store.value(name);
    Tensor& grad = store.grad(name);
    Tensor& m = store.moment1(name);
    Tensor& v = store.moment2(name);
    for (size_t k = 0; k < value.data.size(); ++k) {
      const double g = grad.data[k];
      m.data[k] = beta1_ * m.data[k] + (1.0 - beta1_) * g;
      v.data[k] = beta2_ * v.data[k] + (1.0 - beta2_) * g * g;
      const double m_hat = m.data[k] / bc1;
      const double v_hat = v.data[k] / bc2;
      value.data[k] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

EncodedDataset EncodedDataset::prepare(const Dataset& ds, const SubgraphVocabulary& vocab) {
  EncodedDataset out;
  out.data = &ds;
  out.decompositions.reserve(ds.size());
  out.quotients.reserve(ds.size());
  for (const auto& g : ds.molecules) {
    out.decompositions.push_back(decompose(g, vocab));
    out.quotients.push_back(quotient_graph(g, out.decompositions.back()));
  }
  return out;
}

ScoreTable score_dataset(ParamStore& store, const EncoderConfig& cfg, const EncodedDataset& ds) {
  ScoreTable table;
  const int n = ds.data->size();
  table.atom.reserve(n);
  table.subgraph.reserve(n);
  table.combined.reserve(n);
  for (int i = 0; i < n; ++i) {
    Tape tape(&store);
    BranchOutput f = atom_branch(tape, cfg, ds.data->molecules[i]);
    TensorRef parts = subgraph_embed(tape, cfg, ds.data->molecules[i], ds.decompositions[i]);
    BranchOutput g = polymerize(tape, cfg, parts, ds.quotients[i]);
    table.atom.push_back(tape.value(f.logits).data);
    table.subgraph.push_back(tape.value(g.logits).data);
    table.combined.push_back(bilateral_predict(table.atom.back(), table.subgraph.back()));
  }
  return table;
}

BranchMetrics metrics_from_scores(const ScoreTable& scores, const Dataset& ds, bool regression,
                                  int* skipped_tasks) {
  BranchMetrics m;
  if (regression) {
    std::vector<double> fa, fs, fc;
    for (const auto& row : scores.atom) fa.push_back(row[0]);
    for (const auto& row : scores.subgraph) fs.push_back(row[0]);
    for (const auto& row : scores.combined) fc.push_back(row[0]);
    m.atom = rmse(fa, ds.targets);
    m.subgraph = rmse(fs, ds.targets);
    m.combined = rmse(fc, ds.targets);
  } else {
    m.atom = roc_auc_multitask(scores.atom, ds.labels, skipped_tasks);
    m.subgraph = roc_auc_multitask(scores.subgraph, ds.labels, nullptr);
    m.combined = roc_auc_multitask(scores.combined, ds.labels, nullptr);
  }
  return m;
}

namespace {

// higher is better for AUC, lower for RMSE; ties go to the later epoch so a
// saturated validation metric does not freeze selection on an early,
// undertrained checkpoint
bool better(double candidate, double incumbent, bool regression) {
  return regression ? candidate <= incumbent : candidate >= incumbent;
}

}  // namespace

FinetuneResult finetune(ParamStore& store, const EncodedDataset& train, const EncodedDataset& valid,
                        const EncodedDataset& test, const FinetuneConfig& cfg) {
  cfg.encoder.validate();
  const Dataset& train_ds = *train.data;
  if (train_ds.size() == 0) fail(ErrorCode::EmptyInput, "empty training set");

  const std::vector<std::string> atom_params =
      cfg.linear_probe ? std::vector<std::string>{"atom.head.w", "atom.head.b"}
                       : atom_branch_params(store);
  const std::vector<std::string> sub_params =
      cfg.linear_probe ? std::vector<std::string>{"poly.head.w", "poly.head.b"}
                       : subgraph_branch_params(store);
  AdamOptimizer opt_atom(atom_params, cfg.lr);
  AdamOptimizer opt_sub(sub_params, cfg.lr);

  Rng run_rng = Rng(cfg.seed).child("finetune");
  FinetuneResult result;
  auto best_values = store.snapshot_values();
  double best_metric = cfg.regression ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();

  auto evaluate_valid = [&]() {
    ScoreTable scores = score_dataset(store, cfg.encoder, valid);
    return metrics_from_scores(scores, *valid.data, cfg.regression, nullptr);
  };

  if (cfg.epochs == 0) {
    result.valid_at_best = evaluate_valid();
    result.best_epoch = -1;
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(train_ds.size());
    for (int i = 0; i < train_ds.size(); ++i) order[i] = i;
    Rng epoch_rng = run_rng.child(static_cast<uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double loss_atom_sum = 0, loss_sub_sum = 0;
    int batches = 0;
    for (int start = 0; start < train_ds.size(); start += cfg.batch_size) {
      const int end = std::min(start + cfg.batch_size, train_ds.size());
      std::vector<int> batch(order.begin() + start, order.begin() + end);
      std::vector<std::vector<int>> batch_labels;
      std::vector<double> batch_targets;
      for (int i : batch) {
        batch_labels.push_back(train_ds.labels[i]);
        batch_targets.push_back(train_ds.targets[i]);
      }
      // atom-wise branch
      {
        store.zero_grads();
        Tape tape(&store);
        std::vector<TensorRef> logits;
        for (int i : batch) logits.push_back(atom_branch(tape, cfg.encoder, train_ds.molecules[i]).logits);
        TensorRef loss =
            supervised_loss(tape, tape.concat_rows(logits), batch_labels, cfg.regression, batch_targets);
        loss_atom_sum += tape.value(loss).data[0];
        tape.backward(loss);
        opt_atom.step(store);
      }
      // subgraph-wise branch, trained independently
      {
        store.zero_grads();
        Tape tape(&store);
        std::vector<TensorRef> logits;
        for (int i : batch) {
          TensorRef parts = subgraph_embed(tape, cfg.encoder, train_ds.molecules[i], train.decompositions[i]);
          logits.push_back(polymerize(tape, cfg.encoder, parts, train.quotients[i]).logits);
        }
        TensorRef loss =
            supervised_loss(tape, tape.concat_rows(logits), batch_labels, cfg.regression, batch_targets);
        loss_sub_sum += tape.value(loss).data[0];
        tape.backward(loss);
        opt_sub.step(store);
      }
      batches++;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss_atom = loss_atom_sum / batches;
    record.train_loss_subgraph = loss_sub_sum / batches;
    record.valid = evaluate_valid();
    result.curve.push_back(record);
    if (better(record.valid.combined, best_metric, cfg.regression)) {
      best_metric = record.valid.combined;
      best_values = store.snapshot_values();
      result.best_epoch = epoch;
      result.valid_at_best = record.valid;
    }
  }

  store.restore_values(best_values);
  ScoreTable test_scores = score_dataset(store, cfg.encoder, test);
  result.test = metrics_from_scores(test_scores, *test.data, cfg.regression, &result.skipped_tasks);
  return result;
}

}  // namespace asba
