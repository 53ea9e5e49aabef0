#include "tg/tgn.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace tg {
namespace {

Tensor feat_row(const EventStream& s, int node) {
  Tensor r(1, s.node_feat_width());
  for (int j = 0; j < r.cols; ++j) r.at(0, j) = s.node_feats().at(node, j);
  return r;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<Parameter*> TgnParams::params() {
  std::vector<Parameter*> out;
  auto append = [&](std::vector<Parameter*> v) { out.insert(out.end(), v.begin(), v.end()); };
  append(chi.params());
  append(time_enc.params());
  append(phi_src.params());
  append(phi_dst.params());
  append(psi.params());
  for (int h = 0; h < heads; ++h) {
    out.push_back(&att_q[static_cast<size_t>(h)]);
    out.push_back(&att_k[static_cast<size_t>(h)]);
    out.push_back(&att_aq[static_cast<size_t>(h)]);
    out.push_back(&att_ak[static_cast<size_t>(h)]);
  }
  append(self_proj.params());
  append(kappa.params());
  return out;
}

TgnParams make_tgn_params(Rng& rng, const TgnDims& d, Aggregator agg) {
  if (d.embed % d.heads != 0) throw std::invalid_argument("embed dim must divide by heads");
  TgnParams p;
  p.aggregator = agg;
  p.heads = d.heads;
  int hd = d.embed / d.heads;
  int msg_in = d.memory + d.time + d.edge_feat;
  int psi_in = 2 * d.memory + 2 * d.x_width + d.time;
  p.chi = make_linear(rng, "tgn/chi", d.node_feat, d.memory);
  p.time_enc = make_time_encoder(rng, "tgn/time", d.time);
  p.phi_src = make_gru_cell(rng, "tgn/phi_src", msg_in, d.memory);
  p.phi_dst = make_gru_cell(rng, "tgn/phi_dst", msg_in, d.memory);
  p.psi = make_mlp2(rng, "tgn/psi", psi_in, d.psi_hidden, d.embed);
  for (int h = 0; h < p.heads; ++h) {
    std::string base = "tgn/att/h" + std::to_string(h);
    p.att_q.emplace_back(base + "/Wq", glorot_uniform(rng, d.memory + d.x_width, hd));
    p.att_k.emplace_back(base + "/Wk", glorot_uniform(rng, d.embed, hd));
    p.att_aq.emplace_back(base + "/aq", glorot_uniform(rng, hd, 1));
    p.att_ak.emplace_back(base + "/ak", glorot_uniform(rng, hd, 1));
  }
  p.self_proj = make_linear(rng, "tgn/self_proj", d.memory, d.embed);
  p.kappa = make_mlp2(rng, "tgn/kappa", 2 * d.embed, d.kappa_hidden, 1);
  return p;
}

TemporalMemory memory_init(const EventStream& stream, TgnParams& p) {
  int n = stream.num_nodes();
  int m = p.chi.W.value.cols;
  TemporalMemory mem(n, m);
  Tensor s0 = matmul(stream.node_feats(), p.chi.W.value);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) mem.states.at(i, j) = s0.at(i, j) + p.chi.b.value.at(0, j);
  return mem;
}

std::unordered_map<int, Value> apply_batch_updates(Tape& t, const MemoryReadState& rs,
                                                   TgnParams& p, const TgnDims& dims) {
  std::unordered_map<int, Value> cur;
  std::unordered_map<int, double> clock;
  auto state_of = [&](int u) -> Value {
    auto it = cur.find(u);
    if (it != cur.end()) return it->second;
    auto rit = rs.start_rows.find(u);
    if (rit == rs.start_rows.end())
      throw std::invalid_argument("replay record is missing a start row");
    Value v = t.constant(rit->second);
    cur.emplace(u, v);
    clock.emplace(u, rs.start_clock.at(u));
    return v;
  };
  auto message = [&](Value other_state, double dt, const std::vector<double>& ef) {
    Tensor dtt(1, 1);
    dtt.at(0, 0) = dt;
    Value enc = time_encode(t, t.constant(dtt), p.time_enc);
    std::vector<Value> parts{other_state, enc};
    if (dims.edge_feat > 0) {
      Tensor eft(1, dims.edge_feat);
      for (int j = 0; j < dims.edge_feat; ++j) eft.at(0, j) = ef[static_cast<size_t>(j)];
      parts.push_back(t.constant(eft));
    }
    return t.concat_cols(parts);
  };
  for (const Event& e : rs.events) {
    if (e.src == e.dst) {
      Value s = state_of(e.src);
      Value msg = message(s, e.t - clock[e.src], e.feat);
      Value n1 = gru_cell(t, s, msg, p.phi_src);
      cur[e.src] = gru_cell(t, n1, msg, p.phi_dst);
      clock[e.src] = e.t;
      continue;
    }
    Value su = state_of(e.src);
    Value sv = state_of(e.dst);
    Value mu = message(sv, e.t - clock[e.src], e.feat);
    Value mv = message(su, e.t - clock[e.dst], e.feat);
    cur[e.src] = gru_cell(t, su, mu, p.phi_src);
    cur[e.dst] = gru_cell(t, sv, mv, p.phi_dst);
    clock[e.src] = e.t;
    clock[e.dst] = e.t;
  }
  return cur;
}

Value StaticXProvider::row(int node) {
  auto it = cache_.find(node);
  if (it != cache_.end()) return it->second;
  Value v = tape_->constant(feat_row(*stream_, node));
  cache_.emplace(node, v);
  return v;
}

namespace {

// One embedding forward over explicit targets and per-target neighbour
// hops. Returns a targets x embed value; row order follows `targets`.
struct EmbedPlan {
  std::vector<int> targets;
  std::vector<std::vector<std::pair<int, double>>> hops;  // (neighbor, dt), recent first
};

Value embed_targets(Tape& t, const EmbedPlan& plan, TgnParams& p, const TgnDims& dims,
                    const std::function<Value(int)>& eff, const std::function<Value(int)>& x) {
  size_t T = plan.targets.size();
  std::vector<int> nodes;
  std::unordered_map<int, int> pos;
  auto intern = [&](int u) {
    auto it = pos.find(u);
    if (it != pos.end()) return it->second;
    int i = static_cast<int>(nodes.size());
    nodes.push_back(u);
    pos.emplace(u, i);
    return i;
  };
  for (int u : plan.targets) intern(u);
  for (const auto& h : plan.hops)
    for (const auto& [v, dt] : h) intern(v);

  std::vector<Value> eff_rows, x_rows;
  eff_rows.reserve(nodes.size());
  x_rows.reserve(nodes.size());
  for (int u : nodes) {
    eff_rows.push_back(eff(u));
    x_rows.push_back(x(u));
  }
  Value UE = t.stack_rows(eff_rows);
  Value UX = t.stack_rows(x_rows);

  std::vector<int> tpos, npos, seg_target;
  std::vector<int> offsets{0};
  Tensor dts(0, 1);
  std::vector<double> dtv;
  for (size_t i = 0; i < T; ++i) {
    const auto& h = plan.hops[i];
    if (h.empty()) continue;
    for (const auto& [v, dt] : h) {
      tpos.push_back(pos.at(plan.targets[i]));
      npos.push_back(pos.at(v));
      dtv.push_back(dt);
    }
    offsets.push_back(static_cast<int>(tpos.size()));
    seg_target.push_back(static_cast<int>(i));
  }

  Value agg{-1};
  if (!tpos.empty()) {
    Value EU = t.gather_rows(UE, tpos);
    Value EV = t.gather_rows(UE, npos);
    Value XU = t.gather_rows(UX, tpos);
    Value XV = t.gather_rows(UX, npos);
    Tensor dtt(static_cast<int>(dtv.size()), 1);
    dtt.data = dtv;
    Value ENC = time_encode(t, t.constant(std::move(dtt)), p.time_enc);
    Value M = mlp2(t, t.concat_cols({EU, EV, XU, XV, ENC}), p.psi);
    switch (p.aggregator) {
      case Aggregator::Attention: {
        std::vector<Value> heads;
        Value Q = t.concat_cols({EU, XU});
        for (int h = 0; h < p.heads; ++h) {
          auto hi = static_cast<size_t>(h);
          Value q = t.matmul(Q, t.param(p.att_q[hi]));
          Value k = t.matmul(M, t.param(p.att_k[hi]));
          Value logit = t.leaky_relu(
              t.add(t.matmul(q, t.param(p.att_aq[hi])), t.matmul(k, t.param(p.att_ak[hi]))),
              0.2);
          Value alpha = t.segment_softmax(logit, offsets);
          heads.push_back(t.segment_sum(t.mul(k, alpha), offsets));
        }
        agg = t.concat_cols(heads);
        break;
      }
      case Aggregator::Mean: {
        Tensor inv(static_cast<int>(offsets.size()) - 1, 1);
        for (int s = 0; s + 1 < static_cast<int>(offsets.size()); ++s)
          inv.at(s, 0) = 1.0 / static_cast<double>(offsets[static_cast<size_t>(s) + 1] -
                                                   offsets[static_cast<size_t>(s)]);
        agg = t.mul(t.segment_sum(M, offsets), t.constant(std::move(inv)));
        break;
      }
      case Aggregator::Sum:
        agg = t.segment_sum(M, offsets);
        break;
      case Aggregator::Max:
        agg = t.segment_max(M, offsets);
        break;
    }
  }

  std::vector<Value> z_rows(T);
  for (size_t s = 0; s < seg_target.size(); ++s)
    z_rows[static_cast<size_t>(seg_target[s])] = t.gather_rows(agg, {static_cast<int>(s)});
  for (size_t i = 0; i < T; ++i)
    if (plan.hops[i].empty())
      z_rows[i] = linear(t, eff(plan.targets[i]), p.self_proj);
  return t.stack_rows(z_rows);
}

}  // namespace

TgnEngine::TgnEngine(const EventStream& stream, TgnDims dims, Aggregator agg,
                     std::uint64_t seed)
    : stream_(&stream), dims_(dims), static_x_(stream) {
  if (dims_.node_feat != stream.node_feat_width())
    throw std::invalid_argument("node feature width mismatch");
  if (dims_.edge_feat != stream.edge_feat_width())
    throw std::invalid_argument("edge feature width mismatch");
  Rng rng(derive_seed(seed, "tgn.init"));
  p_ = make_tgn_params(rng, dims_, agg);
  reset_runtime();
}

void TgnEngine::reset_runtime() {
  mem_ = TemporalMemory(stream_->num_nodes(), dims_.memory);
  nbr_.assign(static_cast<size_t>(stream_->num_nodes()), {});
  replay_ = MemoryReadState{};
  have_replay_ = false;
}

Tensor TgnEngine::memory_row(int node) const {
  auto i = static_cast<size_t>(node);
  Tensor r(1, dims_.memory);
  if (mem_.touched[i]) {
    for (int j = 0; j < dims_.memory; ++j) r.at(0, j) = mem_.states.at(node, j);
    return r;
  }
  Tensor x = feat_row(*stream_, node);
  Tensor s = matmul(x, p_.chi.W.value);
  for (int j = 0; j < dims_.memory; ++j) r.at(0, j) = s.at(0, j) + p_.chi.b.value.at(0, j);
  return r;
}

BatchScores TgnEngine::run_batch(const TemporalBatch& batch,
                                 const std::vector<std::vector<int>>& negatives, bool training,
                                 Adam* opt, XProvider* xp) {
  if (batch.begin >= batch.end || batch.end > stream_->num_events())
    throw std::invalid_argument("empty or out-of-range batch");
  size_t B = batch.end - batch.begin;
  if (negatives.size() != B)
    throw std::invalid_argument("one negative list per batch event required");
  if (!xp) xp = &static_x_;
  if (xp->width() != dims_.x_width)
    throw std::invalid_argument("dynamic feature width mismatch");

  Tape tape;
  std::unordered_map<int, Value> replay_vals;
  if (training && have_replay_)
    replay_vals = apply_batch_updates(tape, replay_, p_, dims_);

  std::unordered_map<int, Value> eff_cache;
  std::function<Value(int)> eff = [&](int u) -> Value {
    auto it = eff_cache.find(u);
    if (it != eff_cache.end()) return it->second;
    Value v;
    auto rit = replay_vals.find(u);
    if (rit != replay_vals.end()) {
      v = rit->second;
    } else if (mem_.touched[static_cast<size_t>(u)]) {
      Tensor r(1, dims_.memory);
      for (int j = 0; j < dims_.memory; ++j) r.at(0, j) = mem_.states.at(u, j);
      v = tape.constant(std::move(r));
    } else {
      // cold read: chi applied lazily so feature gradients still flow
      v = linear(tape, tape.constant(feat_row(*stream_, u)), p_.chi);
    }
    eff_cache.emplace(u, v);
    return v;
  };

  EmbedPlan plan;
  std::unordered_map<int, int> target_row;
  auto add_target = [&](int u) {
    if (target_row.emplace(u, static_cast<int>(plan.targets.size())).second)
      plan.targets.push_back(u);
  };
  for (size_t i = batch.begin; i < batch.end; ++i) {
    const Event& e = stream_->events()[i];
    add_target(e.src);
    add_target(e.dst);
    for (int v : negatives[i - batch.begin]) add_target(v);
  }

  double tau_ref = stream_->events()[batch.begin].t;
  plan.hops.resize(plan.targets.size());
  std::vector<int> extra_nbrs;
  std::unordered_set<int> seen_extra;
  for (size_t i = 0; i < plan.targets.size(); ++i) {
    const auto& hist = nbr_[static_cast<size_t>(plan.targets[i])];
    size_t take = std::min(hist.size(), static_cast<size_t>(dims_.neighbor_cap));
    for (size_t k = 0; k < take; ++k) {
      const NeighborEvent& ne = hist[hist.size() - 1 - k];
      plan.hops[i].emplace_back(ne.neighbor, tau_ref - ne.t);
      if (!target_row.count(ne.neighbor) && seen_extra.insert(ne.neighbor).second)
        extra_nbrs.push_back(ne.neighbor);
    }
  }

  xp->prepare(tape, plan.targets, extra_nbrs, eff);
  std::function<Value(int)> x = [&](int u) { return xp->row(u); };

  Value Z = embed_targets(tape, plan, p_, dims_, eff, x);

  std::vector<int> src_rows, dst_rows;
  std::vector<double> labels;
  for (size_t i = batch.begin; i < batch.end; ++i) {
    const Event& e = stream_->events()[i];
    src_rows.push_back(target_row.at(e.src));
    dst_rows.push_back(target_row.at(e.dst));
    labels.push_back(1.0);
    for (int v : negatives[i - batch.begin]) {
      src_rows.push_back(target_row.at(e.src));
      dst_rows.push_back(target_row.at(v));
      labels.push_back(0.0);
    }
  }
  Value pairs =
      tape.concat_cols({tape.gather_rows(Z, src_rows), tape.gather_rows(Z, dst_rows)});
  Value logits = mlp2(tape, pairs, p_.kappa);
  Value loss = tape.bce_with_logits_mean(logits, labels);

  BatchScores out;
  out.loss = tape.value(loss).at(0, 0);
  const Tensor& lg = tape.value(logits);
  size_t row = 0;
  for (size_t i = 0; i < B; ++i) {
    out.pos.push_back(logistic(lg.at(static_cast<int>(row++), 0)));
    std::vector<double> ns;
    for (size_t k = 0; k < negatives[i].size(); ++k)
      ns.push_back(logistic(lg.at(static_cast<int>(row++), 0)));
    out.neg.push_back(std::move(ns));
  }

  if (training) {
    tape.backward(loss);
    opt->step();
  }
  return out;
}

void TgnEngine::commit_batch(const TemporalBatch& batch) {
  MemoryReadState rec;
  rec.batch_id = batch.id;
  rec.events.assign(stream_->events().begin() + static_cast<long>(batch.begin),
                    stream_->events().begin() + static_cast<long>(batch.end));
  for (const Event& e : rec.events) {
    for (int u : {e.src, e.dst}) {
      if (rec.start_rows.count(u)) continue;
      rec.start_rows.emplace(u, memory_row(u));
      rec.start_clock.emplace(u, mem_.touched[static_cast<size_t>(u)]
                                     ? mem_.last_update[static_cast<size_t>(u)]
                                     : 0.0);
    }
  }
  Tape scratch;
  auto vals = apply_batch_updates(scratch, rec, p_, dims_);
  for (const auto& [u, v] : vals) {
    const Tensor& r = scratch.value(v);
    for (int j = 0; j < dims_.memory; ++j) mem_.states.at(u, j) = r.at(0, j);
    mem_.touched[static_cast<size_t>(u)] = 1;
  }
  for (size_t i = batch.begin; i < batch.end; ++i) {
    const Event& e = stream_->events()[i];
    mem_.last_update[static_cast<size_t>(e.src)] = e.t;
    mem_.last_update[static_cast<size_t>(e.dst)] = e.t;
    nbr_[static_cast<size_t>(e.src)].push_back({e.dst, e.t, i});
    if (e.src != e.dst) nbr_[static_cast<size_t>(e.dst)].push_back({e.src, e.t, i});
  }
  replay_ = std::move(rec);
  have_replay_ = true;
}

BatchScores TgnEngine::train_step(const TemporalBatch& batch,
                                  const std::vector<std::vector<int>>& negatives, Adam& opt,
                                  XProvider* xp) {
  BatchScores r = run_batch(batch, negatives, true, &opt, xp);
  commit_batch(batch);
  return r;
}

BatchScores TgnEngine::eval_step(const TemporalBatch& batch,
                                 const std::vector<std::vector<int>>& negatives, XProvider* xp) {
  BatchScores r = run_batch(batch, negatives, false, nullptr, xp);
  commit_batch(batch);
  return r;
}

BatchScores TgnEngine::score_batch(const TemporalBatch& batch,
                                   const std::vector<std::vector<int>>& negatives,
                                   XProvider* xp) {
  return run_batch(batch, negatives, false, nullptr, xp);
}

Tensor compute_embeddings(const TemporalMemory& mem, const Snapshot& view,
                          const std::vector<int>& targets, TgnParams& p, const TgnDims& dims,
                          const Tensor* x_rows) {
  const Tensor& X = x_rows ? *x_rows : view.stream->node_feats();
  if (X.cols != dims.x_width) throw std::invalid_argument("dynamic feature width mismatch");
  if (X.rows != mem.states.rows) throw std::invalid_argument("feature rows != memory rows");
  EmbedPlan plan;
  plan.targets = targets;
  plan.hops.resize(targets.size());
  for (size_t i = 0; i < targets.size(); ++i) {
    for (const NeighborEvent& ne :
         temporal_neighbourhood(view, targets[i], static_cast<size_t>(dims.neighbor_cap)))
      plan.hops[i].emplace_back(ne.neighbor, view.tau - ne.t);
  }
  Tape tape;
  std::unordered_map<int, Value> cache_s, cache_x;
  std::function<Value(int)> eff = [&](int u) {
    auto it = cache_s.find(u);
    if (it != cache_s.end()) return it->second;
    Tensor r(1, mem.states.cols);
    for (int j = 0; j < r.cols; ++j) r.at(0, j) = mem.states.at(u, j);
    Value v = tape.constant(std::move(r));
    cache_s.emplace(u, v);
    return v;
  };
  std::function<Value(int)> x = [&](int u) {
    auto it = cache_x.find(u);
    if (it != cache_x.end()) return it->second;
    Tensor r(1, X.cols);
    for (int j = 0; j < r.cols; ++j) r.at(0, j) = X.at(u, j);
    Value v = tape.constant(std::move(r));
    cache_x.emplace(u, v);
    return v;
  };
  Value Z = embed_targets(tape, plan, p, dims, eff, x);
  return tape.value(Z);
}

double predict_link(TgnParams& p, const Tensor& z_u, const Tensor& z_v) {
  if (z_u.rows != 1 || z_v.rows != 1)
    throw std::invalid_argument("predict_link expects single-row embeddings");
  if (z_u.cols + z_v.cols != p.kappa.l1.W.value.rows)
    throw std::invalid_argument("embedding widths do not match the scorer");
  Tape t;
  Value in = t.concat_cols({t.constant(z_u), t.constant(z_v)});
  Value logit = mlp2(t, in, p.kappa);
  return logistic(t.value(logit).at(0, 0));
}

}  // namespace tg
