#include "tg/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace tg {

Tensor glorot_uniform(Rng& rng, int rows, int cols) {
  Tensor t(rows, cols);
  double limit = std::sqrt(6.0 / (rows + cols));
  for (auto& v : t.data) v = rng.uniform(-limit, limit);
  return t;
}

std::vector<Parameter*> LinearParams::params() { return {&W, &b}; }

LinearParams make_linear(Rng& rng, const std::string& name, int in, int out) {
  LinearParams p;
  p.W = Parameter(name + ".W", glorot_uniform(rng, in, out));
  p.b = Parameter(name + ".b", Tensor(1, out));
  return p;
}

Value linear(Tape& t, Value x, LinearParams& p) {
  return t.add(t.matmul(x, t.param(p.W)), t.param(p.b));
}

std::vector<Parameter*> Mlp2Params::params() {
  auto v = l1.params();
  for (auto* q : l2.params()) v.push_back(q);
  return v;
}

Mlp2Params make_mlp2(Rng& rng, const std::string& name, int in, int hidden, int out) {
  Mlp2Params p;
  p.l1 = make_linear(rng, name + ".l1", in, hidden);
  p.l2 = make_linear(rng, name + ".l2", hidden, out);
  return p;
}

Value mlp2(Tape& t, Value x, Mlp2Params& p) {
  return linear(t, t.relu(linear(t, x, p.l1)), p.l2);
}

std::vector<Parameter*> GruCellParams::params() {
  return {&Wz, &Uz, &bz, &Wr, &Ur, &br, &Wh, &Uh, &bh};
}

GruCellParams make_gru_cell(Rng& rng, const std::string& name, int in, int hidden) {
  GruCellParams p;
  p.Wz = Parameter(name + ".Wz", glorot_uniform(rng, in, hidden));
  p.Uz = Parameter(name + ".Uz", glorot_uniform(rng, hidden, hidden));
  p.bz = Parameter(name + ".bz", Tensor(1, hidden));
  p.Wr = Parameter(name + ".Wr", glorot_uniform(rng, in, hidden));
  p.Ur = Parameter(name + ".Ur", glorot_uniform(rng, hidden, hidden));
  p.br = Parameter(name + ".br", Tensor(1, hidden));
  p.Wh = Parameter(name + ".Wh", glorot_uniform(rng, in, hidden));
  p.Uh = Parameter(name + ".Uh", glorot_uniform(rng, hidden, hidden));
  p.bh = Parameter(name + ".bh", Tensor(1, hidden));
  return p;
}

Value gru_cell(Tape& t, Value h_prev, Value msg, GruCellParams& p) {
  Value z = t.sigmoid(t.add(t.add(t.matmul(msg, t.param(p.Wz)), t.matmul(h_prev, t.param(p.Uz))),
                            t.param(p.bz)));
  Value r = t.sigmoid(t.add(t.add(t.matmul(msg, t.param(p.Wr)), t.matmul(h_prev, t.param(p.Ur))),
                            t.param(p.br)));
  Value hc = t.tanh(t.add(
      t.add(t.matmul(msg, t.param(p.Wh)), t.matmul(t.mul(r, h_prev), t.param(p.Uh))),
      t.param(p.bh)));
  // (1-z) * h_prev + z * hc
  return t.add(h_prev, t.mul(z, t.add(hc, t.affine(h_prev, -1.0, 0.0))));
}

std::vector<Parameter*> TimeEncoderParams::params() { return {&omega, &phase}; }

TimeEncoderParams make_time_encoder(Rng& rng, const std::string& name, int dim) {
  TimeEncoderParams p;
  Tensor om(1, dim);
  double lo = std::log(1e-3), hi = std::log(1.0);
  for (auto& v : om.data) v = std::exp(rng.uniform(lo, hi));
  p.omega = Parameter(name + ".omega", std::move(om));
  p.phase = Parameter(name + ".phase", Tensor(1, dim));
  return p;
}

Value time_encode(Tape& t, Value dt, TimeEncoderParams& p) {
  return t.cos(t.add(t.matmul(dt, t.param(p.omega)), t.param(p.phase)));
}

std::vector<Parameter*> GatLayerParams::params() {
  std::vector<Parameter*> v;
  for (size_t h = 0; h < W.size(); ++h) {
    v.push_back(&W[h]);
    v.push_back(&a_dst[h]);
    v.push_back(&a_src[h]);
  }
  return v;
}

GatLayerParams make_gat_layer(Rng& rng, const std::string& name, int in, int out, int heads,
                              double dropout) {
  if (heads <= 0 || out % heads != 0)
    throw std::invalid_argument("gat: out dim must be divisible by heads");
  GatLayerParams p;
  p.heads = heads;
  p.dropout = dropout;
  int hd = out / heads;
  for (int h = 0; h < heads; ++h) {
    std::string hn = name + ".h" + std::to_string(h);
    p.W.emplace_back(hn + ".W", glorot_uniform(rng, in, hd));
    p.a_dst.emplace_back(hn + ".a_dst", glorot_uniform(rng, hd, 1));
    p.a_src.emplace_back(hn + ".a_src", glorot_uniform(rng, hd, 1));
  }
  return p;
}

namespace {

struct EdgeLists {
  std::vector<int> src, dst, offsets;
};

// Edges grouped by destination; optionally a leading self-loop per node.
EdgeLists build_edges(const Adjacency& adj, bool self_loops) {
  EdgeLists e;
  e.offsets.push_back(0);
  for (int i = 0; i < static_cast<int>(adj.size()); ++i) {
    if (self_loops) {
      e.src.push_back(i);
      e.dst.push_back(i);
    } else if (adj[i].empty()) {
      throw std::invalid_argument("gat: node with empty neighbourhood and self-loops disabled");
    }
    for (int j : adj[i]) {
      e.src.push_back(j);
      e.dst.push_back(i);
    }
    e.offsets.push_back(static_cast<int>(e.src.size()));
  }
  return e;
}

}  // namespace

Value gat_layer(Tape& t, Value X, const Adjacency& adj, GatLayerParams& p, bool training,
                Rng* dropout_rng) {
  if (static_cast<size_t>(t.rows(X)) != adj.size())
    throw std::invalid_argument("gat: feature rows != node count");
  EdgeLists e = build_edges(adj, p.add_self_loops);
  bool use_dropout = training && p.dropout > 0.0;
  if (use_dropout && dropout_rng == nullptr)
    throw std::invalid_argument("gat: dropout requires an rng while training");

  std::vector<Value> heads;
  for (int h = 0; h < p.heads; ++h) {
    Value XW = t.matmul(X, t.param(p.W[h]));
    Value sf = t.gather_rows(XW, e.src);
    Value df = t.gather_rows(XW, e.dst);
    Value logit = t.leaky_relu(
        t.add(t.matmul(sf, t.param(p.a_src[h])), t.matmul(df, t.param(p.a_dst[h]))), p.slope);
    Value alpha = t.segment_softmax(logit, e.offsets);
    if (use_dropout) {
      Tensor mask(static_cast<int>(e.src.size()), 1);
      double keep = 1.0 - p.dropout;
      for (auto& v : mask.data) v = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
      alpha = t.mul(alpha, t.constant(std::move(mask)));
    }
    Value msg = t.mul(sf, alpha);
    heads.push_back(t.relu(t.segment_sum(msg, e.offsets)));
  }
  return heads.size() == 1 ? heads[0] : t.concat_cols(heads);
}

std::vector<Parameter*> GcnLayerParams::params() { return {&W, &b}; }

GcnLayerParams make_gcn_layer(Rng& rng, const std::string& name, int in, int out) {
  GcnLayerParams p;
  p.W = Parameter(name + ".W", glorot_uniform(rng, in, out));
  p.b = Parameter(name + ".b", Tensor(1, out));
  return p;
}

std::shared_ptr<CsrMatrix> normalized_adjacency(const Adjacency& adj) {
  int n = static_cast<int>(adj.size());
  auto m = std::make_shared<CsrMatrix>();
  m->rows = m->cols = n;
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) dinv[i] = 1.0 / std::sqrt(1.0 + adj[i].size());
  m->row_ptr.push_back(0);
  for (int i = 0; i < n; ++i) {
    m->col_idx.push_back(i);
    m->vals.push_back(dinv[i] * dinv[i]);
    for (int j : adj[i]) {
      m->col_idx.push_back(j);
      m->vals.push_back(dinv[i] * dinv[j]);
    }
    m->row_ptr.push_back(static_cast<int>(m->col_idx.size()));
  }
  return m;
}

std::shared_ptr<CsrMatrix> plain_adjacency(const Adjacency& adj) {
  int n = static_cast<int>(adj.size());
  auto m = std::make_shared<CsrMatrix>();
  m->rows = m->cols = n;
  m->row_ptr.push_back(0);
  for (int i = 0; i < n; ++i) {
    for (int j : adj[i]) {
      m->col_idx.push_back(j);
      m->vals.push_back(1.0);
    }
    m->row_ptr.push_back(static_cast<int>(m->col_idx.size()));
  }
  return m;
}

Value gcn_layer(Tape& t, Value X, const Adjacency& adj, GcnLayerParams& p) {
  if (static_cast<size_t>(t.rows(X)) != adj.size())
    throw std::invalid_argument("gcn: feature rows != node count");
  Value agg = t.spmm(normalized_adjacency(adj), X);
  return t.add(t.matmul(agg, t.param(p.W)), t.param(p.b));
}

std::vector<Parameter*> GinLayerParams::params() {
  std::vector<Parameter*> v = {&eps};
  for (auto* q : l1.params()) v.push_back(q);
  for (auto* q : l2.params()) v.push_back(q);
  return v;
}

GinLayerParams make_gin_layer(Rng& rng, const std::string& name, int in, int hidden, int out) {
  GinLayerParams p;
  p.eps = Parameter(name + ".eps", Tensor(1, 1));
  p.l1 = make_linear(rng, name + ".l1", in, hidden);
  p.l2 = make_linear(rng, name + ".l2", hidden, out);
  return p;
}

Value gin_layer(Tape& t, Value X, const Adjacency& adj, GinLayerParams& p) {
  if (static_cast<size_t>(t.rows(X)) != adj.size())
    throw std::invalid_argument("gin: feature rows != node count");
  Value self = t.mul(X, t.affine(t.param(p.eps), 1.0, 1.0));
  Value agg = t.add(t.spmm(plain_adjacency(adj), X), self);
  return linear(t, t.relu(linear(t, agg, p.l1)), p.l2);
}

Adam::Adam(std::vector<Parameter*> params, double lr_, double beta1, double beta2, double eps)
    : lr(lr_), params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.value.same_shape(p.grad)) throw std::invalid_argument("adam: grad shape mismatch");
    for (size_t k = 0; k < p.value.data.size(); ++k) {
      double g = p.grad.data[k];
      m_[i].data[k] = beta1_ * m_[i].data[k] + (1.0 - beta1_) * g;
      v_[i].data[k] = beta2_ * v_[i].data[k] + (1.0 - beta2_) * g * g;
      double mhat = m_[i].data[k] / bc1;
      double vhat = v_[i].data[k] / bc2;
      p.value.data[k] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
    p.zero_grad();
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

double grad_check(const std::function<double(bool with_grad)>& function,
                  const std::vector<Parameter*>& inputs, double eps) {
  for (auto* p : inputs) p->zero_grad();
  function(true);
  std::vector<Tensor> analytic;
  for (auto* p : inputs) analytic.push_back(p->grad);

  double worst = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    Parameter& p = *inputs[i];
    for (size_t k = 0; k < p.value.data.size(); ++k) {
      double saved = p.value.data[k];
      p.value.data[k] = saved + eps;
      double up = function(false);
      p.value.data[k] = saved - eps;
      double down = function(false);
      p.value.data[k] = saved;
      double numeric = (up - down) / (2.0 * eps);
      double a = analytic[i].data[k];
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1.0});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  for (auto* p : inputs) p->zero_grad();
  return worst;
}

}  // namespace tg
