#include "asba/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace asba {

namespace {

void check_finite(const Tensor& t, const char* op) {
#ifndef NDEBUG
  for (double v : t.data) {
    if (!std::isfinite(v)) fail(ErrorCode::ShapeMismatch, std::string(op) + " produced non-finite value");
  }
#else
  (void)t;
  (void)op;
#endif
}

std::string shape_str(const Tensor& t) {
  return "(" + std::to_string(t.rows) + "x" + std::to_string(t.cols) + ")";
}

}  // namespace

Tensor Tensor::row(std::vector<double> values) {
  Tensor t;
  t.rows = 1;
  t.cols = static_cast<int>(values.size());
  t.data = std::move(values);
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.data[0] = v;
  return t;
}

// --- ParamStore ------------------------------------------------------------------

Tensor& ParamStore::create(const std::string& name, int rows, int cols) {
  if (has(name)) fail(ErrorCode::ShapeMismatch, "parameter '" + name + "' already exists");
  index_[name] = static_cast<int>(entries_.size());
  order_.push_back(name);
  entries_.push_back({Tensor(rows, cols), Tensor(rows, cols), Tensor(rows, cols), Tensor(rows, cols)});
  return entries_.back().value;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) > 0; }

int ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::DetachedTensor, "unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::value(const std::string& name) { return entries_[index_of(name)].value; }
const Tensor& ParamStore::value(const std::string& name) const { return entries_[index_of(name)].value; }
Tensor& ParamStore::grad(const std::string& name) { return entries_[index_of(name)].grad; }
Tensor& ParamStore::moment1(const std::string& name) { return entries_[index_of(name)].m1; }
Tensor& ParamStore::moment2(const std::string& name) { return entries_[index_of(name)].m2; }

void ParamStore::zero_grads() {
  for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

std::map<std::string, Tensor> ParamStore::snapshot_values() const {
  std::map<std::string, Tensor> snap;
  for (size_t i = 0; i < order_.size(); ++i) snap[order_[i]] = entries_[i].value;
  return snap;
}

void ParamStore::restore_values(const std::map<std::string, Tensor>& snap) {
  for (const auto& [name, t] : snap) {
    Tensor& dst = value(name);
    if (!dst.same_shape(t)) fail(ErrorCode::ShapeMismatch, "snapshot shape mismatch for '" + name + "'");
    dst.data = t.data;
  }
}

// --- checkpoints -------------------------------------------------------------------

namespace {

void write_f64_le(std::ofstream& out, const std::vector<double>& data) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * 8));
  } else {
    for (double v : data) {
      uint64_t bits;
      std::memcpy(&bits, &v, 8);
      char buf[8];
      for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
      out.write(buf, 8);
    }
  }
}

void read_f64_le(std::ifstream& in, std::vector<double>& data) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 8));
  } else {
    for (double& v : data) {
      char buf[8];
      in.read(buf, 8);
      uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
      std::memcpy(&v, &bits, 8);
    }
  }
  if (!in) fail(ErrorCode::MalformedDocument, "checkpoint payload truncated");
}

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path,
                     const std::map<std::string, long long>& adam_steps, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::FileError, "cannot write '" + path + "'");
  nlohmann::json header;
  header["format"] = "asba-checkpoint-v1";
  auto& tensors = header["tensors"] = nlohmann::json::array();
  for (const auto& name : store.names()) {
    const Tensor& t = store.value(name);
    tensors.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
  }
  header["adam_steps"] = adam_steps;
  header["meta"] = meta;
  out << header.dump() << "\n";
  for (const auto& name : store.names()) write_f64_le(out, store.value(name).data);
}

CheckpointHeader load_checkpoint(ParamStore& store, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FileError, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MalformedDocument, "missing checkpoint header");
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "asba-checkpoint-v1") {
    fail(ErrorCode::MalformedDocument, "bad checkpoint header in '" + path + "'");
  }
  for (const auto& t : header["tensors"]) {
    const std::string name = t["name"].get<std::string>();
    const int rows = t["rows"].get<int>();
    const int cols = t["cols"].get<int>();
    Tensor& dst = store.has(name) ? store.value(name) : store.create(name, rows, cols);
    if (dst.rows != rows || dst.cols != cols) {
      fail(ErrorCode::ShapeMismatch, "checkpoint tensor '" + name + "' is " + std::to_string(rows) +
                                         "x" + std::to_string(cols) + ", store has " + shape_str(dst));
    }
    read_f64_le(in, dst.data);
  }
  CheckpointHeader out;
  if (header.contains("adam_steps")) {
    for (const auto& [k, v] : header["adam_steps"].items()) out.adam_steps[k] = v.get<long long>();
  }
  out.meta = header.value("meta", nlohmann::json::object());
  return out;
}

// --- Tape -----------------------------------------------------------------------

int Tape::check(TensorRef r) const {
  if (r.id < 0 || r.id >= static_cast<int>(nodes_.size())) {
    fail(ErrorCode::DetachedTensor, "tensor ref " + std::to_string(r.id) + " not on this tape");
  }
  return r.id;
}

TensorRef Tape::push(Tensor value, std::function<void(Tape&)> pull) {
  Node node;
  node.grad = Tensor(value.rows, value.cols);
  node.value = std::move(value);
  node.pull = std::move(pull);
  nodes_.push_back(std::move(node));
  return {static_cast<int>(nodes_.size()) - 1};
}

TensorRef Tape::constant(Tensor t) { return push(std::move(t), nullptr); }

TensorRef Tape::param(const std::string& name) {
  if (!store_) fail(ErrorCode::DetachedTensor, "tape has no parameter store");
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return {it->second};
  TensorRef r = push(store_->value(name), nullptr);
  param_nodes_[name] = r.id;
  bound_params_.emplace_back(name, r.id);
  return r;
}

const Tensor& Tape::value(TensorRef r) const { return nodes_[check(r)].value; }
const Tensor& Tape::grad(TensorRef r) const { return nodes_[check(r)].grad; }

void Tape::backward(TensorRef loss) {
  const int id = check(loss);
  Node& ln = nodes_[id];
  if (ln.value.rows != 1 || ln.value.cols != 1) {
    fail(ErrorCode::NotScalarLoss, "loss shape " + shape_str(ln.value));
  }
  ln.grad.data[0] += 1.0;
  ln.touched = true;
  for (int i = id; i >= 0; --i) {
    if (!nodes_[i].touched || !nodes_[i].pull) continue;
    nodes_[i].pull(*this);
  }
  if (store_) {
    for (const auto& [name, node_id] : bound_params_) {
      Tensor& g = store_->grad(name);
      const Tensor& ng = nodes_[node_id].grad;
      for (size_t k = 0; k < g.data.size(); ++k) g.data[k] += ng.data[k];
    }
  }
}

// Every op pushes its result, then installs a pullback that adds into the
// parents' gradient buffers and marks them for the reverse sweep.

TensorRef Tape::matmul(TensorRef a, TensorRef b) {
  const int ia = check(a), ib = check(b);
  const Tensor& A = nodes_[ia].value;
  const Tensor& B = nodes_[ib].value;
  if (A.cols != B.rows) fail(ErrorCode::ShapeMismatch, "matmul " + shape_str(A) + " x " + shape_str(B));
  Tensor out(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int k = 0; k < A.cols; ++k) {
      const double av = A.at(i, k);
      for (int j = 0; j < B.cols; ++j) out.at(i, j) += av * B.at(k, j);
    }
  }
  check_finite(out, "matmul");
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ia, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& A = t.nodes_[ia].value;
    const Tensor& B = t.nodes_[ib].value;
    Tensor& ga = t.nodes_[ia].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (int i = 0; i < A.rows; ++i) {
      for (int j = 0; j < B.cols; ++j) {
        const double gv = g.at(i, j);
        if (gv == 0.0) continue;
        for (int k = 0; k < A.cols; ++k) {
          ga.at(i, k) += gv * B.at(k, j);
          gb.at(k, j) += gv * A.at(i, k);
        }
      }
    }
    t.touch(ia);
    t.touch(ib);
  };
  return r;
}

TensorRef Tape::transpose(TensorRef a) {
  const int ia = check(a);
  const Tensor& A = nodes_[ia].value;
  Tensor out(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) out.at(j, i) = A.at(i, j);
  }
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ia, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    for (int i = 0; i < ga.rows; ++i) {
      for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(j, i);
    }
    t.touch(ia);
  };
  return r;
}

TensorRef Tape::add(TensorRef a, TensorRef b) {
  const int ia = check(a), ib = check(b);
  const Tensor& A = nodes_[ia].value;
  const Tensor& B = nodes_[ib].value;
  if (!A.same_shape(B)) fail(ErrorCode::ShapeMismatch, "add " + shape_str(A) + " + " + shape_str(B));
  Tensor out = A;
  for (size_t k = 0; k < out.data.size(); ++k) out.data[k] += B.data[k];
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ia, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (size_t k = 0; k < g.data.size(); ++k) {
      ga.data[k] += g.data[k];
      gb.data[k] += g.data[k];
    }
    t.touch(ia);
    t.touch(ib);
  };
  return r;
}

TensorRef Tape::mul(TensorRef a, TensorRef b) {
  const int ia = check(a), ib = check(b);
  const Tensor& A = nodes_[ia].value;
  const Tensor& B = nodes_[ib].value;
  if (!A.same_shape(B)) fail(ErrorCode::ShapeMismatch, "mul " + shape_str(A) + " * " + shape_str(B));
  Tensor out = A;
  for (size_t k = 0; k < out.data.size(); ++k) out.data[k] *= B.data[k];
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ia, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& A = t.nodes_[ia].value;
    const Tensor& B = t.nodes_[ib].value;
    Tensor& ga = t.nodes_[ia].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (size_t k = 0; k < g.data.size(); ++k) {
      ga.data[k] += g.data[k] * B.data[k];
      gb.data[k] += g.data[k] * A.data[k];
    }
    t.touch(ia);
    t.touch(ib);
  };
  return r;
}

TensorRef Tape::scale(TensorRef a, double s) {
  const int ia = check(a);
  Tensor out = nodes_[ia].value;
  for (double& v : out.data) v *= s;
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ia, io, s](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    for (size_t k = 0; k < g.data.size(); ++k) ga.data[k] += s * g.data[k];
    t.touch(ia);
  };
  return r;
}

TensorRef Tape::relu(TensorRef a) {
  const int ia = check(a);
  Tensor out = nodes_[ia].value;
  for (double& v : out.data) {
    if (v == 0.0) relu_boundary_hit_ = true;
    if (v < 0.0) v = 0.0;
  }
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ia, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& A = t.nodes_[ia].value;
    Tensor& ga = t.nodes_[ia].grad;
    for (size_t k = 0; k < g.data.size(); ++k) {
      if (A.data[k] > 0.0) ga.data[k] += g.data[k];  // subgradient at 0 is 0
    }
    t.touch(ia);
  };
  return r;
}

TensorRef Tape::sigmoid(TensorRef a) {
  const int ia = check(a);
  Tensor out = nodes_[ia].value;
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ia, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& S = t.nodes_[io].value;
    Tensor& ga = t.nodes_[ia].grad;
    for (size_t k = 0; k < g.data.size(); ++k) ga.data[k] += g.data[k] * S.data[k] * (1.0 - S.data[k]);
    t.touch(ia);
  };
  return r;
}

TensorRef Tape::add_bias_row(TensorRef x, TensorRef bias) {
  const int ix = check(x), ib = check(bias);
  const Tensor& X = nodes_[ix].value;
  const Tensor& B = nodes_[ib].value;
  if (B.rows != 1 || B.cols != X.cols) {
    fail(ErrorCode::ShapeMismatch, "add_bias_row " + shape_str(X) + " + " + shape_str(B));
  }
  Tensor out = X;
  for (int i = 0; i < X.rows; ++i) {
    for (int j = 0; j < X.cols; ++j) out.at(i, j) += B.at(0, j);
  }
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ix, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& gx = t.nodes_[ix].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (int i = 0; i < g.rows; ++i) {
      for (int j = 0; j < g.cols; ++j) {
        gx.at(i, j) += g.at(i, j);
        gb.at(0, j) += g.at(i, j);
      }
    }
    t.touch(ix);
    t.touch(ib);
  };
  return r;
}

TensorRef Tape::row_mean(TensorRef x) {
  const int ix = check(x);
  const Tensor& X = nodes_[ix].value;
  if (X.rows == 0) fail(ErrorCode::ShapeMismatch, "row_mean of empty tensor");
  Tensor out(1, X.cols);
  for (int i = 0; i < X.rows; ++i) {
    for (int j = 0; j < X.cols; ++j) out.at(0, j) += X.at(i, j);
  }
  for (double& v : out.data) v /= X.rows;
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ix, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& gx = t.nodes_[ix].grad;
    const double inv = 1.0 / gx.rows;
    for (int i = 0; i < gx.rows; ++i) {
      for (int j = 0; j < gx.cols; ++j) gx.at(i, j) += g.at(0, j) * inv;
    }
    t.touch(ix);
  };
  return r;
}

TensorRef Tape::mean_all(TensorRef x) {
  const int ix = check(x);
  const Tensor& X = nodes_[ix].value;
  if (X.size() == 0) fail(ErrorCode::ShapeMismatch, "mean_all of empty tensor");
  double sum = 0;
  for (double v : X.data) sum += v;
  TensorRef r = push(Tensor::scalar(sum / X.size()), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ix, io](Tape& t) {
    const double g = t.nodes_[io].grad.data[0];
    Tensor& gx = t.nodes_[ix].grad;
    const double inv = 1.0 / gx.size();
    for (double& v : gx.data) v += g * inv;
    t.touch(ix);
  };
  return r;
}

TensorRef Tape::sum_all(TensorRef x) {
  const int ix = check(x);
  const Tensor& X = nodes_[ix].value;
  double sum = 0;
  for (double v : X.data) sum += v;
  TensorRef r = push(Tensor::scalar(sum), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ix, io](Tape& t) {
    const double g = t.nodes_[io].grad.data[0];
    Tensor& gx = t.nodes_[ix].grad;
    for (double& v : gx.data) v += g;
    t.touch(ix);
  };
  return r;
}

TensorRef Tape::dot(TensorRef a, TensorRef b) {
  const int ia = check(a), ib = check(b);
  const Tensor& A = nodes_[ia].value;
  const Tensor& B = nodes_[ib].value;
  if (!A.same_shape(B)) fail(ErrorCode::ShapeMismatch, "dot " + shape_str(A) + " . " + shape_str(B));
  double sum = 0;
  for (size_t k = 0; k < A.data.size(); ++k) sum += A.data[k] * B.data[k];
  TensorRef r = push(Tensor::scalar(sum), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ia, ib, io](Tape& t) {
    const double g = t.nodes_[io].grad.data[0];
    const Tensor& A = t.nodes_[ia].value;
    const Tensor& B = t.nodes_[ib].value;
    Tensor& ga = t.nodes_[ia].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (size_t k = 0; k < A.data.size(); ++k) {
      ga.data[k] += g * B.data[k];
      gb.data[k] += g * A.data[k];
    }
    t.touch(ia);
    t.touch(ib);
  };
  return r;
}

TensorRef Tape::concat_rows(const std::vector<TensorRef>& xs) {
  if (xs.empty()) fail(ErrorCode::ShapeMismatch, "concat_rows of nothing");
  std::vector<int> ids;
  ids.reserve(xs.size());
  int rows = 0;
  const int cols = nodes_[check(xs[0])].value.cols;
  for (TensorRef x : xs) {
    const int ix = check(x);
    if (nodes_[ix].value.cols != cols) {
      fail(ErrorCode::ShapeMismatch, "concat_rows column mismatch");
    }
    rows += nodes_[ix].value.rows;
    ids.push_back(ix);
  }
  Tensor out(rows, cols);
  int at = 0;
  for (int ix : ids) {
    const Tensor& X = nodes_[ix].value;
    std::copy(X.data.begin(), X.data.end(), out.data.begin() + static_cast<size_t>(at) * cols);
    at += X.rows;
  }
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ids, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    int at = 0;
    for (int ix : ids) {
      Tensor& gx = t.nodes_[ix].grad;
      for (int i = 0; i < gx.rows; ++i) {
        for (int j = 0; j < gx.cols; ++j) gx.at(i, j) += g.at(at + i, j);
      }
      at += gx.rows;
      t.touch(ix);
    }
  };
  return r;
}

TensorRef Tape::gather_rows(TensorRef x, const std::vector<int>& ids) {
  const int ix = check(x);
  const Tensor& X = nodes_[ix].value;
  for (int i : ids) {
    if (i < 0 || i >= X.rows) fail(ErrorCode::IndexOutOfRange, "gather row " + std::to_string(i));
  }
  Tensor out(static_cast<int>(ids.size()), X.cols);
  for (size_t k = 0; k < ids.size(); ++k) {
    for (int j = 0; j < X.cols; ++j) out.at(static_cast<int>(k), j) = X.at(ids[k], j);
  }
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ix, io, ids](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& gx = t.nodes_[ix].grad;
    for (size_t k = 0; k < ids.size(); ++k) {
      for (int j = 0; j < gx.cols; ++j) gx.at(ids[k], j) += g.at(static_cast<int>(k), j);
    }
    t.touch(ix);
  };
  return r;
}

TensorRef Tape::embedding_lookup(TensorRef table, const std::vector<int>& ids) {
  return gather_rows(table, ids);
}

TensorRef Tape::segment_sum(TensorRef x, const std::vector<int>& segments, int num_segments) {
  const int ix = check(x);
  const Tensor& X = nodes_[ix].value;
  if (static_cast<int>(segments.size()) != X.rows) {
    fail(ErrorCode::ShapeMismatch, "segment ids " + std::to_string(segments.size()) + " != rows " +
                                       std::to_string(X.rows));
  }
  for (int s : segments) {
    if (s < 0 || s >= num_segments) fail(ErrorCode::IndexOutOfRange, "segment " + std::to_string(s));
  }
  Tensor out(num_segments, X.cols);
  for (int i = 0; i < X.rows; ++i) {
    for (int j = 0; j < X.cols; ++j) out.at(segments[i], j) += X.at(i, j);
  }
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ix, io, segments](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& gx = t.nodes_[ix].grad;
    for (int i = 0; i < gx.rows; ++i) {
      for (int j = 0; j < gx.cols; ++j) gx.at(i, j) += g.at(segments[i], j);
    }
    t.touch(ix);
  };
  return r;
}

TensorRef Tape::segment_mean(TensorRef x, const std::vector<int>& segments, int num_segments) {
  const int ix = check(x);
  const Tensor& X = nodes_[ix].value;
  if (static_cast<int>(segments.size()) != X.rows) {
    fail(ErrorCode::ShapeMismatch, "segment ids " + std::to_string(segments.size()) + " != rows " +
                                       std::to_string(X.rows));
  }
  std::vector<int> counts(num_segments, 0);
  for (int s : segments) {
    if (s < 0 || s >= num_segments) fail(ErrorCode::IndexOutOfRange, "segment " + std::to_string(s));
    counts[s]++;
  }
  for (int s = 0; s < num_segments; ++s) {
    if (counts[s] == 0) fail(ErrorCode::EmptyInput, "segment " + std::to_string(s) + " has no rows");
  }
  Tensor out(num_segments, X.cols);
  for (int i = 0; i < X.rows; ++i) {
    for (int j = 0; j < X.cols; ++j) out.at(segments[i], j) += X.at(i, j);
  }
  for (int s = 0; s < num_segments; ++s) {
    for (int j = 0; j < X.cols; ++j) out.at(s, j) /= counts[s];
  }
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ix, io, segments, counts](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& gx = t.nodes_[ix].grad;
    for (int i = 0; i < gx.rows; ++i) {
      for (int j = 0; j < gx.cols; ++j) gx.at(i, j) += g.at(segments[i], j) / counts[segments[i]];
    }
    t.touch(ix);
  };
  return r;
}

TensorRef Tape::replace_rows(TensorRef x, const std::vector<int>& rows, TensorRef row) {
  const int ix = check(x), ir = check(row);
  const Tensor& X = nodes_[ix].value;
  const Tensor& R = nodes_[ir].value;
  if (R.rows != 1 || R.cols != X.cols) {
    fail(ErrorCode::ShapeMismatch, "replace_rows row " + shape_str(R) + " into " + shape_str(X));
  }
  std::vector<bool> replaced(X.rows, false);
  for (int i : rows) {
    if (i < 0 || i >= X.rows) fail(ErrorCode::IndexOutOfRange, "replace row " + std::to_string(i));
    if (replaced[i]) fail(ErrorCode::IndexOutOfRange, "replace row " + std::to_string(i) + " repeated");
    replaced[i] = true;
  }
  Tensor out = X;
  for (int i : rows) {
    for (int j = 0; j < X.cols; ++j) out.at(i, j) = R.at(0, j);
  }
  TensorRef r = push(std::move(out), nullptr);
  const int io = r.id;
  nodes_[io].pull = [ix, ir, io, replaced](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& gx = t.nodes_[ix].grad;
    Tensor& gr = t.nodes_[ir].grad;
    for (int i = 0; i < g.rows; ++i) {
      for (int j = 0; j < g.cols; ++j) {
        if (replaced[i]) {
          gr.at(0, j) += g.at(i, j);
        } else {
          gx.at(i, j) += g.at(i, j);
        }
      }
    }
    t.touch(ix);
    t.touch(ir);
  };
  return r;
}

TensorRef Tape::softmax_cross_entropy(TensorRef logits, const std::vector<int>& targets) {
  const int il = check(logits);
  const Tensor& L = nodes_[il].value;
  if (static_cast<int>(targets.size()) != L.rows || L.rows == 0) {
    fail(ErrorCode::ShapeMismatch, "targets " + std::to_string(targets.size()) + " for logits " + shape_str(L));
  }
  Tensor softmax(L.rows, L.cols);
  double total = 0;
  for (int i = 0; i < L.rows; ++i) {
    if (targets[i] < 0 || targets[i] >= L.cols) {
      fail(ErrorCode::IndexOutOfRange, "target " + std::to_string(targets[i]));
    }
    double mx = L.at(i, 0);
    for (int j = 1; j < L.cols; ++j) mx = std::max(mx, L.at(i, j));
    double z = 0;
    for (int j = 0; j < L.cols; ++j) z += std::exp(L.at(i, j) - mx);
    for (int j = 0; j < L.cols; ++j) softmax.at(i, j) = std::exp(L.at(i, j) - mx) / z;
    total += std::log(z) + mx - L.at(i, targets[i]);
  }
  TensorRef r = push(Tensor::scalar(total / L.rows), nullptr);
  const int io = r.id;
  nodes_[io].pull = [il, io, targets, softmax](Tape& t) {
    const double g = t.nodes_[io].grad.data[0];
    Tensor& gl = t.nodes_[il].grad;
    const double inv = g / gl.rows;
    for (int i = 0; i < gl.rows; ++i) {
      for (int j = 0; j < gl.cols; ++j) {
        gl.at(i, j) += inv * (softmax.at(i, j) - (j == targets[i] ? 1.0 : 0.0));
      }
    }
    t.touch(il);
  };
  return r;
}

TensorRef Tape::bce_with_logits(TensorRef logits, const Tensor& labels, const Tensor& mask) {
  const int il = check(logits);
  const Tensor& L = nodes_[il].value;
  if (!L.same_shape(labels) || !L.same_shape(mask)) {
    fail(ErrorCode::ShapeMismatch, "bce_with_logits shapes " + shape_str(L));
  }
  std::vector<int> valid_per_row(L.rows, 0);
  int valid_rows = 0;
  for (int i = 0; i < L.rows; ++i) {
    for (int j = 0; j < L.cols; ++j) {
      if (mask.at(i, j) != 0.0) valid_per_row[i]++;
    }
    if (valid_per_row[i] > 0) valid_rows++;
  }
  if (valid_rows == 0) fail(ErrorCode::AllLabelsMissing, "no valid labels in batch");
  double total = 0;
  for (int i = 0; i < L.rows; ++i) {
    if (valid_per_row[i] == 0) continue;
    double row = 0;
    for (int j = 0; j < L.cols; ++j) {
      if (mask.at(i, j) == 0.0) continue;
      const double x = L.at(i, j);
      const double y = labels.at(i, j);
      row += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    }
    total += row / valid_per_row[i];
  }
  TensorRef r = push(Tensor::scalar(total / valid_rows), nullptr);
  const int io = r.id;
  const Tensor labels_copy = labels;
  const Tensor mask_copy = mask;
  nodes_[io].pull = [il, io, labels_copy, mask_copy, valid_per_row, valid_rows](Tape& t) {
    const double g = t.nodes_[io].grad.data[0];
    const Tensor& L = t.nodes_[il].value;
    Tensor& gl = t.nodes_[il].grad;
    for (int i = 0; i < L.rows; ++i) {
      if (valid_per_row[i] == 0) continue;
      const double w = g / (static_cast<double>(valid_per_row[i]) * valid_rows);
      for (int j = 0; j < L.cols; ++j) {
        if (mask_copy.at(i, j) == 0.0) continue;
        const double s = 1.0 / (1.0 + std::exp(-L.at(i, j)));
        gl.at(i, j) += w * (s - labels_copy.at(i, j));
      }
    }
    t.touch(il);
  };
  return r;
}

// --- finite differences -------------------------------------------------------------

FiniteDiffReport finite_diff_check(ParamStore& store,
                                   const std::function<TensorRef(Tape&)>& build_loss, double h,
                                   double tol, const std::vector<std::string>& param_names) {
  store.zero_grads();
  bool base_boundary = false;
  {
    Tape tape(&store);
    TensorRef loss = build_loss(tape);
    tape.backward(loss);
    base_boundary = tape.relu_boundary_hit();
  }
  auto eval = [&](bool* boundary) {
    Tape tape(&store);
    TensorRef loss = build_loss(tape);
    if (boundary) *boundary = tape.relu_boundary_hit();
    return tape.value(loss).data[0];
  };

  const std::vector<std::string>& names = param_names.empty() ? store.names() : param_names;
  FiniteDiffReport report;
  for (const auto& name : names) {
    Tensor& value = store.value(name);
    const Tensor& grad = store.grad(name);
    for (int i = 0; i < value.rows; ++i) {
      for (int j = 0; j < value.cols; ++j) {
        const double saved = value.at(i, j);
        bool b1 = false, b2 = false;
        value.at(i, j) = saved + h;
        const double fp = eval(&b1);
        value.at(i, j) = saved - h;
        const double fm = eval(&b2);
        value.at(i, j) = saved;
        const double numeric = (fp - fm) / (2.0 * h);
        const double analytic = grad.at(i, j);
        const double denom = std::max({1e-6, std::abs(analytic), std::abs(numeric)});
        const double rel = std::abs(analytic - numeric) / denom;
        report.checked++;
        FiniteDiffEntry entry{name, i, j, analytic, numeric, rel, base_boundary || b1 || b2};
        if (entry.excluded) {
          report.excluded++;
        } else {
          report.max_rel_err = std::max(report.max_rel_err, rel);
          if (rel > tol) {
            report.pass = false;
            report.failures.push_back(entry);
          }
        }
      }
    }
  }
  return report;
}

}  // namespace asba
