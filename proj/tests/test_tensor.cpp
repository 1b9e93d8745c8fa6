#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "asba/rng.hpp"
#include "asba/tensor.hpp"

using namespace asba;

namespace {

Tensor make(int rows, int cols, std::vector<double> data) {
  Tensor t(rows, cols);
  t.data = std::move(data);
  return t;
}

bool fails_with(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

void fill_random(Tensor& t, Rng& rng, double scale = 0.5) {
  for (double& v : t.data) v = rng.uniform(-scale, scale);
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("forward op values") {
  Tape tape;
  TensorRef a = tape.constant(make(1, 2, {1, 2}));
  TensorRef b = tape.constant(make(2, 1, {3, 4}));
  CHECK(tape.value(tape.matmul(a, b)).data[0] == 11.0);

  TensorRef r = tape.relu(tape.constant(make(1, 2, {-1, 2})));
  CHECK(tape.value(r).data == std::vector<double>{0, 2});

  // uniform logits over 100 classes
  Tensor logits(1, 100);
  TensorRef ce = tape.softmax_cross_entropy(tape.constant(logits), {7});
  CHECK(tape.value(ce).data[0] == doctest::Approx(std::log(100.0)).epsilon(1e-12));

  TensorRef s = tape.sigmoid(tape.constant(make(1, 1, {0})));
  CHECK(tape.value(s).data[0] == 0.5);

  TensorRef m = tape.row_mean(tape.constant(make(2, 1, {1, 3})));
  CHECK(tape.value(m).data[0] == 2.0);

  TensorRef seg = tape.segment_sum(tape.constant(make(3, 1, {1, 2, 4})), {0, 1, 0}, 2);
  CHECK(tape.value(seg).data == std::vector<double>{5, 2});
}

TEST_CASE("shape errors") {
  Tape tape;
  TensorRef a = tape.constant(make(1, 2, {1, 2}));
  TensorRef b = tape.constant(make(1, 2, {3, 4}));
  CHECK(fails_with(ErrorCode::ShapeMismatch, [&] { tape.matmul(a, b); }));
  CHECK(fails_with(ErrorCode::IndexOutOfRange, [&] { tape.gather_rows(a, {5}); }));
  CHECK(fails_with(ErrorCode::NotScalarLoss, [&] { tape.backward(a); }));
  Tape other;
  CHECK(fails_with(ErrorCode::DetachedTensor, [&] { other.value(TensorRef{12}); }));
}

TEST_CASE("backward on simple closed forms") {
  ParamStore store;
  store.create("w", 1, 1).data[0] = 3.0;

  // d(w.w)/dw = 2w
  store.zero_grads();
  {
    Tape tape(&store);
    TensorRef w = tape.param("w");
    tape.backward(tape.dot(w, w));
  }
  CHECK(store.grad("w").data[0] == 6.0);

  // relu(-w) at w=2: inactive branch, zero gradient
  store.value("w").data[0] = 2.0;
  store.zero_grads();
  {
    Tape tape(&store);
    TensorRef w = tape.param("w");
    tape.backward(tape.sum_all(tape.relu(tape.scale(w, -1.0))));
  }
  CHECK(store.grad("w").data[0] == 0.0);
}

TEST_CASE("backward is linear in the loss") {
  ParamStore store;
  Rng rng(3);
  fill_random(store.create("w", 2, 2), rng);

  auto grad_of = [&](double a, double b) {
    store.zero_grads();
    Tape tape(&store);
    TensorRef w = tape.param("w");
    TensorRef f = tape.dot(w, w);
    TensorRef g = tape.sum_all(w);
    tape.backward(tape.add(tape.scale(f, a), tape.scale(g, b)));
    return store.grad("w").data;
  };
  const auto g_f = grad_of(1, 0);
  const auto g_g = grad_of(0, 1);
  const auto g_mix = grad_of(2.5, -1.5);
  for (size_t i = 0; i < g_mix.size(); ++i) {
    CHECK(g_mix[i] == doctest::Approx(2.5 * g_f[i] - 1.5 * g_g[i]).epsilon(1e-12));
  }
}

TEST_CASE("repeated runs are bitwise identical") {
  ParamStore store;
  Rng rng(5);
  fill_random(store.create("w1", 4, 4), rng);
  fill_random(store.create("b1", 1, 4), rng);
  fill_random(store.create("x", 3, 4), rng);

  auto run = [&]() {
    store.zero_grads();
    Tape tape(&store);
    TensorRef h = tape.relu(tape.add_bias_row(tape.matmul(tape.param("x"), tape.param("w1")),
                                              tape.param("b1")));
    TensorRef loss = tape.mean_all(tape.mul(h, h));
    tape.backward(loss);
    return std::make_pair(tape.value(loss).data[0], store.grad("w1").data);
  };
  const auto r1 = run();
  const auto r2 = run();
  CHECK(r1.first == r2.first);
  CHECK(r1.second == r2.second);
}

TEST_CASE("every primitive matches central finite differences") {
  ParamStore store;
  Rng rng(7);
  fill_random(store.create("w1", 3, 4), rng);
  fill_random(store.create("b1", 1, 4), rng);
  fill_random(store.create("w2", 4, 2), rng);
  fill_random(store.create("x", 5, 3), rng);
  fill_random(store.create("row", 1, 2), rng);

  auto loss = [](Tape& tape) {
    TensorRef x = tape.param("x");
    TensorRef h = tape.relu(tape.add_bias_row(tape.matmul(x, tape.param("w1")), tape.param("b1")));
    TensorRef y = tape.matmul(h, tape.param("w2"));
    TensorRef gathered = tape.gather_rows(y, {0, 2, 4});
    TensorRef replaced = tape.replace_rows(y, {1}, tape.param("row"));
    TensorRef seg = tape.segment_mean(replaced, {0, 1, 0, 1, 0}, 2);
    TensorRef sig = tape.sigmoid(tape.transpose(seg));
    TensorRef parts = tape.concat_rows({gathered, tape.segment_sum(y, {0, 0, 1, 1, 0}, 2)});
    TensorRef ce = tape.softmax_cross_entropy(parts, {0, 1, 0, 1, 0});
    Tensor labels(2, 2), mask(2, 2);
    labels.at(0, 0) = 1;
    mask.at(0, 0) = 1;
    mask.at(1, 1) = 1;
    TensorRef bce = tape.bce_with_logits(seg, labels, mask);
    TensorRef mixed = tape.add(tape.add(ce, bce), tape.mean_all(tape.mul(sig, sig)));
    return tape.add(mixed, tape.scale(tape.dot(tape.row_mean(y), tape.row_mean(y)), 0.25));
  };
  const FiniteDiffReport report = finite_diff_check(store, loss, 1e-5, 1e-6);
  CHECK_MESSAGE(report.pass, "max rel err ", report.max_rel_err);
  CHECK(report.checked > 0);
}

TEST_CASE("finite differences on a quadratic are exact to roundoff") {
  ParamStore store;
  Rng rng(9);
  fill_random(store.create("w", 2, 3), rng);
  auto loss = [](Tape& tape) {
    TensorRef w = tape.param("w");
    return tape.dot(w, w);
  };
  const FiniteDiffReport report = finite_diff_check(store, loss, 1e-5, 1e-8);
  CHECK_MESSAGE(report.pass, "max rel err ", report.max_rel_err);
  CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("a relu kink sitting exactly at zero is excluded, not failed") {
  ParamStore store;
  store.create("w", 1, 1);  // zero: relu input is exactly 0
  auto loss = [](Tape& tape) { return tape.sum_all(tape.relu(tape.param("w"))); };
  const FiniteDiffReport report = finite_diff_check(store, loss, 1e-5, 1e-6);
  CHECK(report.pass);
  CHECK(report.excluded == report.checked);
}

TEST_CASE("bce matches the documented values") {
  Tape tape;
  Tensor labels(1, 1), mask(1, 1);
  labels.at(0, 0) = 1;
  mask.at(0, 0) = 1;
  TensorRef l0 = tape.bce_with_logits(tape.constant(make(1, 1, {0})), labels, mask);
  CHECK(tape.value(l0).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  TensorRef l20 = tape.bce_with_logits(tape.constant(make(1, 1, {20})), labels, mask);
  CHECK(tape.value(l20).data[0] <= 1e-8);

  // missing labels are excluded
  Tensor labels2(1, 2), mask2(1, 2);
  labels2.at(0, 0) = 1;
  mask2.at(0, 0) = 1;
  TensorRef lm = tape.bce_with_logits(tape.constant(make(1, 2, {0, 7})), labels2, mask2);
  CHECK(tape.value(lm).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tensor none(1, 1);
  CHECK(fails_with(ErrorCode::AllLabelsMissing, [&] {
    tape.bce_with_logits(tape.constant(make(1, 1, {0})), none, none);
  }));
}

TEST_CASE("checkpoints round-trip bitwise and preserve step counts") {
  ParamStore store;
  Rng rng(21);
  fill_random(store.create("alpha", 3, 5), rng);
  fill_random(store.create("beta", 1, 7), rng);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "asba_ckpt_test.bin").string();
  save_checkpoint(store, path, {{"atom", 42}}, {{"note", 1}});

  ParamStore loaded;
  const CheckpointHeader header = load_checkpoint(loaded, path);
  CHECK(header.adam_steps.at("atom") == 42);
  CHECK(loaded.value("alpha").data == store.value("alpha").data);
  CHECK(loaded.value("beta").data == store.value("beta").data);
  CHECK(loaded.names() == store.names());

  // saving again produces identical bytes
  const std::string path2 = (dir / "asba_ckpt_test2.bin").string();
  save_checkpoint(loaded, path2, {{"atom", 42}}, {{"note", 1}});
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

}  // TEST_SUITE
