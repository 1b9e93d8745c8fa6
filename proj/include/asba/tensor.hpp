#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "asba/errors.hpp"

namespace asba {

class Rng;

// Dense row-major matrix of 64-bit floats.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  static Tensor row(std::vector<double> values);
  static Tensor scalar(double v);

  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

// Named parameters with gradient and Adam moment storage, in creation order.
class ParamStore {
 public:
  Tensor& create(const std::string& name, int rows, int cols);
  bool has(const std::string& name) const;
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  Tensor& moment1(const std::string& name);
  Tensor& moment2(const std::string& name);
  void zero_grads();
  const std::vector<std::string>& names() const { return order_; }

  // full value snapshot (used for best-epoch restore)
  std::map<std::string, Tensor> snapshot_values() const;
  void restore_values(const std::map<std::string, Tensor>& snap);

 private:
  struct Entry {
    Tensor value, grad, m1, m2;
  };
  int index_of(const std::string& name) const;
  // deque keeps references from create() stable across later creates
  std::deque<Entry> entries_;
  std::vector<std::string> order_;
  std::unordered_map<std::string, int> index_;
};

// Checkpoint: one-line header (names, shapes, optimizer step counts, free-form
// meta) followed by raw little-endian float64 payloads in header order.
void save_checkpoint(const ParamStore& store, const std::string& path,
                     const std::map<std::string, long long>& adam_steps,
                     const nlohmann::json& meta);
struct CheckpointHeader {
  std::map<std::string, long long> adam_steps;
  nlohmann::json meta;
};
CheckpointHeader load_checkpoint(ParamStore& store, const std::string& path);

struct TensorRef {
  int id = -1;
};

// Single-owner reverse-mode tape. Operations record pullbacks in creation
// order; backward() walks them once in reverse and accumulates parameter
// gradients into the bound ParamStore.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}

  TensorRef constant(Tensor t);
  TensorRef param(const std::string& name);

  TensorRef matmul(TensorRef a, TensorRef b);
  TensorRef transpose(TensorRef a);
  TensorRef add(TensorRef a, TensorRef b);
  TensorRef mul(TensorRef a, TensorRef b);  // elementwise
  TensorRef scale(TensorRef a, double s);
  TensorRef relu(TensorRef a);
  TensorRef sigmoid(TensorRef a);
  TensorRef add_bias_row(TensorRef x, TensorRef bias);
  TensorRef row_mean(TensorRef x);
  TensorRef mean_all(TensorRef x);
  TensorRef sum_all(TensorRef x);
  TensorRef dot(TensorRef a, TensorRef b);
  TensorRef concat_rows(const std::vector<TensorRef>& xs);
  TensorRef gather_rows(TensorRef x, const std::vector<int>& ids);
  TensorRef embedding_lookup(TensorRef table, const std::vector<int>& ids);
  TensorRef segment_sum(TensorRef x, const std::vector<int>& segments, int num_segments);
  TensorRef segment_mean(TensorRef x, const std::vector<int>& segments, int num_segments);
  TensorRef replace_rows(TensorRef x, const std::vector<int>& rows, TensorRef row);
  // mean over rows of -log softmax(row)[target]
  TensorRef softmax_cross_entropy(TensorRef logits, const std::vector<int>& targets);
  // per-row mean of BCE over mask=1 entries, then mean over rows with any
  // valid entry; AllLabelsMissing when nothing is valid
  TensorRef bce_with_logits(TensorRef logits, const Tensor& labels, const Tensor& mask);

  const Tensor& value(TensorRef r) const;
  // gradient of the last backward() at this node (for tests)
  const Tensor& grad(TensorRef r) const;
  void backward(TensorRef loss);
  bool relu_boundary_hit() const { return relu_boundary_hit_; }
  ParamStore* store() { return store_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool touched = false;
    std::function<void(Tape&)> pull;  // adds into parent grads
  };
  int check(TensorRef r) const;
  TensorRef push(Tensor value, std::function<void(Tape&)> pull);
  Tensor& grad_mut(int id) { return nodes_[id].grad; }
  void touch(int id) { nodes_[id].touched = true; }

  ParamStore* store_ = nullptr;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_nodes_;
  std::vector<std::pair<std::string, int>> bound_params_;
  bool relu_boundary_hit_ = false;
};

// --- finite differences ---------------------------------------------------------

struct FiniteDiffEntry {
  std::string name;
  int row = 0, col = 0;
  double analytic = 0, numeric = 0, rel_err = 0;
  bool excluded = false;  // a relu kink sat exactly at 0 during evaluation
};

struct FiniteDiffReport {
  bool pass = true;
  double max_rel_err = 0;
  int checked = 0;
  int excluded = 0;
  std::vector<FiniteDiffEntry> failures;
};

// Central-difference check of d(loss)/d(param) for every component of the
// selected parameters (all when `param_names` is empty). `build_loss` must be
// pure and deterministic given the store contents.
FiniteDiffReport finite_diff_check(ParamStore& store,
                                   const std::function<TensorRef(Tape&)>& build_loss, double h,
                                   double tol, const std::vector<std::string>& param_names = {});

}  // namespace asba
