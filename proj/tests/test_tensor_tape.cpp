#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "tg/nn.hpp"
#include "tg/rng.hpp"
#include "tg/tape.hpp"
#include "tg/tensor.hpp"

using namespace tg;

namespace {

Tensor random_tensor(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Finite-difference check of an arbitrary tape expression in one input
// matrix. The expression is reduced to a scalar against fixed random
// weights so every output coordinate is exercised.
double check_expr(uint64_t seed, int rows, int cols,
                  const std::function<Value(Tape&, Value)>& expr) {
  Rng rng(seed);
  Parameter x("x", random_tensor(rng, rows, cols));
  Tensor weights;
  auto objective = [&](bool with_grad) {
    Tape t;
    Value y = expr(t, t.param(x));
    if (weights.rows == 0) weights = random_tensor(rng, t.rows(y), t.cols(y));
    Value s = t.sum_all(t.mul(y, t.constant(weights)));
    double v = t.value(s).at(0, 0);
    if (with_grad) t.backward(s);
    return v;
  };
  return grad_check(objective, {&x});
}

}  // namespace

TEST_CASE("dense kernels against hand results") {
  Tensor a(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b(3, 2, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b);
  CHECK(c.rows == 2);
  CHECK(c.cols == 2);
  CHECK(c.at(0, 0) == 58);
  CHECK(c.at(0, 1) == 64);
  CHECK(c.at(1, 0) == 139);
  CHECK(c.at(1, 1) == 154);

  Tensor at = transpose(a);
  CHECK(at.rows == 3);
  CHECK(at.at(0, 1) == 4);
  CHECK(at.at(2, 0) == 3);

  Tensor d = a;
  add_inplace(d, a);
  CHECK(d.at(1, 2) == 12);
  axpy_inplace(d, -2.0, a);
  CHECK(max_abs(d) == 0.0);
  CHECK(bit_equal(a, a));
  Tensor e = a;
  e.at(0, 0) += 1e-12;
  CHECK_FALSE(bit_equal(a, e));
  CHECK(max_abs_diff(a, e) == doctest::Approx(1e-12));
}

TEST_CASE("forward values of elementwise ops") {
  Tape t;
  Value x = t.constant(Tensor(1, 3, {-1.0, 0.0, 2.0}));
  CHECK(t.value(t.relu(x)).at(0, 0) == 0.0);
  CHECK(t.value(t.relu(x)).at(0, 2) == 2.0);
  CHECK(t.value(t.leaky_relu(x, 0.1)).at(0, 0) == doctest::Approx(-0.1));
  CHECK(t.value(t.sigmoid(x)).at(0, 1) == doctest::Approx(0.5));
  CHECK(t.value(t.tanh(x)).at(0, 2) == doctest::Approx(std::tanh(2.0)));
  CHECK(t.value(t.cos(x)).at(0, 1) == doctest::Approx(1.0));
  CHECK(t.value(t.affine(x, 2.0, 1.0)).at(0, 2) == doctest::Approx(5.0));
}

TEST_CASE("broadcasting add and mul") {
  Tape t;
  Value m = t.constant(Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
  Value row = t.constant(Tensor(1, 3, {10, 20, 30}));
  Value col = t.constant(Tensor(2, 1, {100, 200}));
  Value sc = t.constant(Tensor::scalar(2.0));
  CHECK(t.value(t.add(m, row)).at(1, 2) == 36);
  CHECK(t.value(t.add(m, col)).at(1, 0) == 204);
  CHECK(t.value(t.mul(m, row)).at(0, 1) == 40);
  CHECK(t.value(t.mul(m, col)).at(1, 2) == 1200);
  CHECK(t.value(t.mul(m, sc)).at(1, 1) == 10);
}

TEST_CASE("segment reductions forward") {
  Tape t;
  // segments: rows [0,2), [2,3), [3,6)
  Value x = t.constant(Tensor(6, 2, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
  std::vector<int> off{0, 2, 3, 6};
  Tensor s = t.value(t.segment_sum(x, off));
  CHECK(s.rows == 3);
  CHECK(s.at(0, 0) == 4);
  CHECK(s.at(0, 1) == 6);
  CHECK(s.at(1, 0) == 5);
  CHECK(s.at(2, 1) == 30);
  Tensor m = t.value(t.segment_max(x, off));
  CHECK(m.at(0, 0) == 3);
  CHECK(m.at(2, 1) == 12);

  Value logits = t.constant(Tensor(4, 1, {0.0, 0.0, 1.0, 1.0}));
  Tensor sm = t.value(t.segment_softmax(logits, {0, 2, 4}));
  CHECK(sm.at(0, 0) == doctest::Approx(0.5));
  CHECK(sm.at(2, 0) == doctest::Approx(0.5));
}

TEST_CASE("spmm equals dense multiplication") {
  auto csr = std::make_shared<CsrMatrix>();
  csr->rows = 2;
  csr->cols = 3;
  csr->row_ptr = {0, 2, 3};
  csr->col_idx = {0, 2, 1};
  csr->vals = {2.0, -1.0, 3.0};
  Tensor dense(2, 3, {2, 0, -1, 0, 3, 0});
  Rng rng(5);
  Tensor x = random_tensor(rng, 3, 4);
  Tape t;
  Tensor got = t.value(t.spmm(csr, t.constant(x)));
  Tensor want = matmul(dense, x);
  CHECK(max_abs_diff(got, want) < 1e-15);
}

TEST_CASE("stable binary cross entropy matches the naive formula") {
  Tape t;
  Tensor z(4, 1, {3.0, -2.0, 0.5, -40.0});
  std::vector<double> labels{1.0, 0.0, 0.0, 1.0};
  double got = t.value(t.bce_with_logits_mean(t.constant(z), labels)).at(0, 0);
  double want = 0.0;
  for (int i = 0; i < 4; ++i) {
    double zi = z.at(i, 0), yi = labels[static_cast<size_t>(i)];
    want += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::fabs(zi)));
  }
  want /= 4.0;
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  CHECK(std::isfinite(got));  // the -40 logit must not overflow
}

TEST_CASE("gradients of every op pass central differences") {
  auto leaky = [](Tape& t, Value x) { return t.leaky_relu(x, 0.2); };
  CHECK(check_expr(1, 3, 4, [](Tape& t, Value x) { return t.sigmoid(x); }) < 1e-7);
  CHECK(check_expr(2, 3, 4, [](Tape& t, Value x) { return t.tanh(x); }) < 1e-7);
  CHECK(check_expr(3, 3, 4, [](Tape& t, Value x) { return t.cos(x); }) < 1e-7);
  CHECK(check_expr(4, 3, 4, leaky) < 1e-6);
  CHECK(check_expr(5, 3, 4, [](Tape& t, Value x) { return t.affine(x, -1.5, 2.0); }) < 1e-8);
  CHECK(check_expr(6, 2, 3, [](Tape& t, Value x) {
          return t.matmul(x, t.constant(Tensor(3, 2, {1, -2, 0.5, 1, 2, -1})));
        }) < 1e-8);
  CHECK(check_expr(7, 2, 3, [](Tape& t, Value x) { return t.transpose(x); }) < 1e-8);
  CHECK(check_expr(8, 4, 2, [](Tape& t, Value x) {
          return t.segment_sum(x, {0, 1, 4});
        }) < 1e-8);
  CHECK(check_expr(9, 4, 1, [](Tape& t, Value x) {
          return t.segment_softmax(x, {0, 2, 4});
        }) < 1e-6);
  CHECK(check_expr(10, 4, 3, [](Tape& t, Value x) {
          return t.segment_max(x, {0, 2, 4});
        }) < 1e-6);
  CHECK(check_expr(11, 3, 2, [](Tape& t, Value x) {
          return t.mul(x, t.constant(Tensor(1, 2, {2.0, -3.0})));
        }) < 1e-8);
  CHECK(check_expr(12, 3, 2, [](Tape& t, Value x) {
          return t.add(x, t.constant(Tensor(3, 1, {1.0, -1.0, 0.5})));
        }) < 1e-8);
}

TEST_CASE("gather, stack and concat accumulate through repeated parents") {
  // the same row appears three times; its gradient is the sum of all uses
  CHECK(check_expr(13, 3, 2, [](Tape& t, Value x) {
          return t.gather_rows(x, {0, 1, 0, 2, 0});
        }) < 1e-8);
  CHECK(check_expr(14, 2, 3, [](Tape& t, Value x) {
          return t.stack_rows({x, x, x});
        }) < 1e-8);
  CHECK(check_expr(15, 2, 2, [](Tape& t, Value x) {
          return t.concat_cols({x, t.sigmoid(x)});
        }) < 1e-7);
}

TEST_CASE("composite expression gradient") {
  CHECK(check_expr(16, 3, 3, [](Tape& t, Value x) {
          Value a = t.sigmoid(t.matmul(x, t.constant(Tensor(3, 2, {1, 0, -1, 2, 0.5, 1}))));
          Value b = t.gather_rows(a, {2, 0, 1, 1});
          return t.segment_sum(t.mul(b, b), {0, 2, 4});
        }) < 1e-6);
}

TEST_CASE("bce gradient") {
  Rng rng(17);
  Parameter z("z", random_tensor(rng, 5, 1, -2.0, 2.0));
  std::vector<double> labels{1, 0, 1, 1, 0};
  auto objective = [&](bool with_grad) {
    Tape t;
    Value loss = t.bce_with_logits_mean(t.param(z), labels);
    double v = t.value(loss).at(0, 0);
    if (with_grad) t.backward(loss);
    return v;
  };
  CHECK(grad_check(objective, {&z}) < 1e-7);
}

TEST_CASE("input leaves retain their gradient") {
  Tape t;
  Value x = t.input(Tensor(1, 2, {3.0, -1.0}));
  Value s = t.sum_all(t.mul(x, x));
  t.backward(s);
  const Tensor& g = t.grad_of(x);
  CHECK(g.at(0, 0) == doctest::Approx(6.0));
  CHECK(g.at(0, 1) == doctest::Approx(-2.0));
}

TEST_CASE("gradients accumulate across backward calls until zeroed") {
  Parameter w("w", Tensor::scalar(2.0));
  for (int pass = 0; pass < 2; ++pass) {
    Tape t;
    Value s = t.sum_all(t.mul(t.param(w), t.param(w)));
    t.backward(s);
  }
  CHECK(w.grad.at(0, 0) == doctest::Approx(8.0));  // 2 passes of d(w^2)=4
  w.zero_grad();
  CHECK(w.grad.at(0, 0) == 0.0);
}

TEST_CASE("shape validation throws") {
  Tape t;
  Value a = t.constant(Tensor(2, 3));
  Value b = t.constant(Tensor(2, 2));
  CHECK_THROWS(t.matmul(a, b));
  CHECK_THROWS(t.add(a, b));
  CHECK_THROWS(t.segment_sum(a, {0, 1}));          // offsets must end at rows
  CHECK_THROWS(t.backward(a));                     // root must be scalar
  CHECK_THROWS(t.gather_rows(a, {0, 5}));          // index out of range
}
