#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tg/nn.hpp"
#include "tg/rng.hpp"

using namespace tg;

namespace {

Tensor random_tensor(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

Adjacency random_graph(Rng& rng, int n) {
  Adjacency adj(static_cast<size_t>(n));
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform() < 0.5) {
        adj[static_cast<size_t>(u)].push_back(v);
        adj[static_cast<size_t>(v)].push_back(u);
      }
  return adj;
}

// Reduces a layer output to a scalar against fixed weights and checks
// every parameter of the layer, plus the input matrix, against central
// differences.
double layer_check(Rng& rng, Parameter& x, std::vector<Parameter*> params,
                   const std::function<Value(Tape&, Value)>& layer) {
  Tensor weights;
  auto objective = [&](bool with_grad) {
    Tape t;
    Value y = layer(t, t.param(x));
    if (weights.rows == 0) weights = random_tensor(rng, t.rows(y), t.cols(y));
    Value s = t.sum_all(t.mul(y, t.constant(weights)));
    double v = t.value(s).at(0, 0);
    if (with_grad) t.backward(s);
    return v;
  };
  params.push_back(&x);
  return grad_check(objective, params);
}

}  // namespace

TEST_CASE("linear gradients") {
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(1000 + static_cast<uint64_t>(inst));
    int in = 1 + static_cast<int>(rng.uniform_int(5));
    int out = 1 + static_cast<int>(rng.uniform_int(5));
    int batch = 1 + static_cast<int>(rng.uniform_int(4));
    LinearParams p = make_linear(rng, "l", in, out);
    Parameter x("x", random_tensor(rng, batch, in));
    double err = layer_check(rng, x, p.params(),
                             [&](Tape& t, Value xv) { return linear(t, xv, p); });
    CAPTURE(inst);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("gru cell gradients") {
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(2000 + static_cast<uint64_t>(inst));
    int in = 1 + static_cast<int>(rng.uniform_int(4));
    int hidden = 1 + static_cast<int>(rng.uniform_int(4));
    int batch = 1 + static_cast<int>(rng.uniform_int(3));
    GruCellParams p = make_gru_cell(rng, "g", in, hidden);
    Parameter h("h", random_tensor(rng, batch, hidden));
    Tensor msg = random_tensor(rng, batch, in);
    double err = layer_check(rng, h, p.params(), [&](Tape& t, Value hv) {
      return gru_cell(t, hv, t.constant(msg), p);
    });
    CAPTURE(inst);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("time encoder gradients") {
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(3000 + static_cast<uint64_t>(inst));
    int dim = 1 + static_cast<int>(rng.uniform_int(6));
    int batch = 1 + static_cast<int>(rng.uniform_int(4));
    TimeEncoderParams p = make_time_encoder(rng, "te", dim);
    Parameter dt("dt", random_tensor(rng, batch, 1, 0.0, 5.0));
    double err = layer_check(rng, dt, p.params(),
                             [&](Tape& t, Value d) { return time_encode(t, d, p); });
    CAPTURE(inst);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("gat layer gradients") {
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(4000 + static_cast<uint64_t>(inst));
    int n = 3 + static_cast<int>(rng.uniform_int(5));
    int in = 1 + static_cast<int>(rng.uniform_int(4));
    int heads = 1 + static_cast<int>(rng.uniform_int(2));
    int out = heads * (1 + static_cast<int>(rng.uniform_int(3)));
    Adjacency adj = random_graph(rng, n);
    GatLayerParams p = make_gat_layer(rng, "gat", in, out, heads, 0.0);
    Parameter x("x", random_tensor(rng, n, in));
    double err = layer_check(rng, x, p.params(),
                             [&](Tape& t, Value xv) { return gat_layer(t, xv, adj, p); });
    CAPTURE(inst);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gcn layer gradients") {
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(5000 + static_cast<uint64_t>(inst));
    int n = 3 + static_cast<int>(rng.uniform_int(5));
    int in = 1 + static_cast<int>(rng.uniform_int(4));
    int out = 1 + static_cast<int>(rng.uniform_int(4));
    Adjacency adj = random_graph(rng, n);
    GcnLayerParams p = make_gcn_layer(rng, "gcn", in, out);
    Parameter x("x", random_tensor(rng, n, in));
    double err = layer_check(rng, x, p.params(),
                             [&](Tape& t, Value xv) { return gcn_layer(t, xv, adj, p); });
    CAPTURE(inst);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gin layer gradients") {
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(6000 + static_cast<uint64_t>(inst));
    int n = 3 + static_cast<int>(rng.uniform_int(5));
    int in = 1 + static_cast<int>(rng.uniform_int(4));
    int hidden = 1 + static_cast<int>(rng.uniform_int(4));
    int out = 1 + static_cast<int>(rng.uniform_int(4));
    Adjacency adj = random_graph(rng, n);
    GinLayerParams p = make_gin_layer(rng, "gin", in, hidden, out);
    Parameter x("x", random_tensor(rng, n, in));
    double err = layer_check(rng, x, p.params(),
                             [&](Tape& t, Value xv) { return gin_layer(t, xv, adj, p); });
    CAPTURE(inst);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("mlp gradients") {
  for (int inst = 0; inst < 10; ++inst) {
    Rng rng(7000 + static_cast<uint64_t>(inst));
    Mlp2Params p = make_mlp2(rng, "m", 3, 4, 2);
    Parameter x("x", random_tensor(rng, 3, 3));
    double err = layer_check(rng, x, p.params(),
                             [&](Tape& t, Value xv) { return mlp2(t, xv, p); });
    CHECK(err < 1e-5);
  }
}

TEST_CASE("degenerate graphs reduce to closed forms") {
  Rng rng(42);
  Adjacency lonely(3);  // no edges at all

  // gcn with self-loops only is plain linear
  GcnLayerParams gcn = make_gcn_layer(rng, "gcn", 3, 2);
  LinearParams as_linear;
  as_linear.W = gcn.W;
  as_linear.b = gcn.b;
  Parameter x("x", random_tensor(rng, 3, 3));
  Tape t;
  Tensor via_layer = t.value(gcn_layer(t, t.param(x), lonely, gcn));
  Tensor via_linear = t.value(linear(t, t.param(x), as_linear));
  CHECK(max_abs_diff(via_layer, via_linear) < 1e-14);

  // gin with eps = 0 and no neighbours is the bare mlp
  GinLayerParams gin = make_gin_layer(rng, "gin", 3, 4, 2);
  Mlp2Params bare;
  bare.l1 = gin.l1;
  bare.l2 = gin.l2;
  Tensor via_gin = t.value(gin_layer(t, t.param(x), lonely, gin));
  Tensor via_mlp = t.value(mlp2(t, t.param(x), bare));
  CHECK(max_abs_diff(via_gin, via_mlp) < 1e-14);

  // single-head gat over isolated nodes attends only to the self-loop
  GatLayerParams gat = make_gat_layer(rng, "gat", 3, 2, 1, 0.0);
  Tensor via_gat = t.value(gat_layer(t, t.param(x), lonely, gat));
  Tensor xw = t.value(t.relu(t.matmul(t.param(x), t.param(gat.W[0]))));
  CHECK(max_abs_diff(via_gat, xw) < 1e-14);
}

TEST_CASE("normalized adjacency of a triangle") {
  Adjacency tri{{1, 2}, {0, 2}, {0, 1}};
  auto m = normalized_adjacency(tri);
  REQUIRE(m->rows == 3);
  // every node has degree 2 plus a self-loop, so every entry is 1/3
  for (double v : m->vals) CHECK(v == doctest::Approx(1.0 / 3.0));
  CHECK(m->vals.size() == 9);
}

TEST_CASE("gat dropout needs an rng and rescales by the keep rate") {
  Rng rng(9);
  Adjacency adj{{1}, {0}};
  GatLayerParams p = make_gat_layer(rng, "gat", 2, 2, 1, 0.5);
  Parameter x("x", random_tensor(rng, 2, 2));
  Tape t;
  CHECK_THROWS(gat_layer(t, t.param(x), adj, p, true, nullptr));
  Rng drop(77);
  CHECK_NOTHROW(gat_layer(t, t.param(x), adj, p, true, &drop));
  // without training the mask is skipped entirely
  CHECK_NOTHROW(gat_layer(t, t.param(x), adj, p, false, nullptr));
}

TEST_CASE("glorot init stays within its fan bound") {
  Rng rng(11);
  Tensor w = glorot_uniform(rng, 6, 4);
  double bound = std::sqrt(6.0 / (6 + 4));
  for (double v : w.data) {
    CHECK(v <= bound);
    CHECK(v >= -bound);
  }
  // same seed, same draw
  Rng rng2(11);
  CHECK(bit_equal(w, glorot_uniform(rng2, 6, 4)));
}

TEST_CASE("adam minimizes a quadratic and clears gradients") {
  Parameter w("w", Tensor::scalar(-4.0));
  Adam opt({&w}, 0.1);
  for (int i = 0; i < 400; ++i) {
    Tape t;
    Value diff = t.affine(t.param(w), 1.0, -3.0);
    Value loss = t.sum_all(t.mul(diff, diff));
    t.backward(loss);
    opt.step();
  }
  CHECK(w.value.at(0, 0) == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(w.grad.at(0, 0) == 0.0);
  CHECK(opt.steps_taken() == 400);
}

TEST_CASE("layer constructors reject bad head counts") {
  Rng rng(3);
  CHECK_THROWS(make_gat_layer(rng, "g", 4, 5, 2, 0.0));
  CHECK_THROWS(make_gat_layer(rng, "g", 4, 4, 0, 0.0));
}
