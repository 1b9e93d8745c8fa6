#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asba/fragment.hpp"
#include "asba/gnn.hpp"
#include "asba/rng.hpp"
#include "asba/tensor.hpp"

namespace asba {

struct Dataset {
  std::vector<MolGraph> molecules;
  std::vector<std::vector<int>> labels;  // per molecule, length L; -1 = missing
  std::vector<double> targets;           // regression targets (aligned; NaN when absent)
  int num_tasks = 0;
  bool has_targets = false;

  int size() const { return static_cast<int>(molecules.size()); }
  static Dataset from_parsed(const std::vector<ParsedMolecule>& mols);
  static Dataset load_native(const std::string& path);
};

enum class Split { Train, Valid, Test };

// Groups molecules by scaffold key; deterministic mode orders groups by
// (size desc, key asc), random mode shuffles group order by seed. Whole
// groups land in one split. `warning` is set when a split ends up empty.
std::vector<Split> scaffold_split(const Dataset& ds, double f_train, double f_valid, double f_test,
                                  bool random_mode, uint64_t seed, std::string* warning);

// Probability a random positive outscores a random negative, ties at 1/2.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);
// Mean over tasks with both classes among non-missing labels; tasks with a
// single class are skipped and counted. SingleClass when no task is usable.
double roc_auc_multitask(const std::vector<std::vector<double>>& scores,
                         const std::vector<std::vector<int>>& labels, int* skipped_tasks = nullptr);
double rmse(const std::vector<double>& preds, const std::vector<double>& targets);

// classification: masked BCE (per-row mean over valid labels, then mean over
// rows); regression: mean squared error
TensorRef supervised_loss(Tape& tape, TensorRef logits, const std::vector<std::vector<int>>& labels,
                          bool regression, const std::vector<double>& targets);

// Bias-corrected Adam over a fixed parameter subset; moments live in the store.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<std::string> param_names, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(ParamStore& store);
  long long step_count() const { return step_; }
  void set_step_count(long long s) { step_ = s; }
  const std::vector<std::string>& params() const { return names_; }

 private:
  std::vector<std::string> names_;
  double lr_, beta1_, beta2_, eps_;
  long long step_ = 0;
};

struct FinetuneConfig {
  EncoderConfig encoder;
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  bool linear_probe = false;
  bool regression = false;
  uint64_t seed = 0;
};

struct BranchMetrics {
  double atom = 0;
  double subgraph = 0;
  double combined = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss_atom = 0;
  double train_loss_subgraph = 0;
  BranchMetrics valid;
};

struct FinetuneResult {
  std::vector<EpochRecord> curve;
  int best_epoch = -1;
  BranchMetrics valid_at_best;
  BranchMetrics test;
  int skipped_tasks = 0;
};

// Precomputed per-molecule encoder inputs.
struct EncodedDataset {
  const Dataset* data = nullptr;
  std::vector<Decomposition> decompositions;
  std::vector<QuotientGraph> quotients;
  static EncodedDataset prepare(const Dataset& ds, const SubgraphVocabulary& vocab);
};

struct ScoreTable {
  std::vector<std::vector<double>> atom;      // N x L logits
  std::vector<std::vector<double>> subgraph;  // N x L logits
  std::vector<std::vector<double>> combined;  // element-wise average
};

ScoreTable score_dataset(ParamStore& store, const EncoderConfig& cfg, const EncodedDataset& ds);
BranchMetrics metrics_from_scores(const ScoreTable& scores, const Dataset& ds, bool regression,
                                  int* skipped_tasks = nullptr);

// Trains the two branches independently (separate Adam states), selects the
// epoch by the validation metric of the averaged output, restores the best
// parameters into `store`, and reports test metrics for both branches and
// their average. Linear probing updates only the property heads.
FinetuneResult finetune(ParamStore& store, const EncodedDataset& train, const EncodedDataset& valid,
                        const EncodedDataset& test, const FinetuneConfig& cfg);

}  // namespace asba
