#include "tg/tgr.hpp"

#include <algorithm>
#include <stdexcept>

namespace tg {

std::vector<Parameter*> MixerParams::params() {
  switch (layer) {
    case MixerLayer::Gat: return gat.params();
    case MixerLayer::Gcn: return gcn.params();
    case MixerLayer::Gin: return gin.params();
  }
  return {};
}

MixerParams make_mixer_params(Rng& rng, MixerLayer layer, int dim, int heads, double dropout) {
  MixerParams p;
  p.layer = layer;
  switch (layer) {
    case MixerLayer::Gat:
      p.gat = make_gat_layer(rng, "mixer/gat", dim, dim, heads, dropout);
      break;
    case MixerLayer::Gcn:
      p.gcn = make_gcn_layer(rng, "mixer/gcn", dim, dim);
      break;
    case MixerLayer::Gin:
      p.gin = make_gin_layer(rng, "mixer/gin", dim, dim, dim);
      break;
  }
  return p;
}

Value mix_on_tape(Tape& t, Value X, const ExpanderAssignment& as, MixerParams& p,
                  bool training, Rng* dropout_rng) {
  int rows = t.rows(X);
  if (rows > as.bank_capacity)
    throw std::invalid_argument("bank exceeds expander capacity");
  Value W = X;
  if (as.num_working > rows) {
    W = t.stack_rows({X, t.constant(Tensor(as.num_working - rows, t.cols(X)))});
  }
  Value H{-1};
  switch (p.layer) {
    case MixerLayer::Gat:
      H = gat_layer(t, W, as.adj, p.gat, training, dropout_rng);
      break;
    case MixerLayer::Gcn:
      H = gcn_layer(t, W, as.adj, p.gcn);
      break;
    case MixerLayer::Gin:
      H = gin_layer(t, W, as.adj, p.gin);
      break;
  }
  if (t.rows(H) == rows) return H;
  std::vector<int> idx(static_cast<size_t>(rows));
  for (int i = 0; i < rows; ++i) idx[static_cast<size_t>(i)] = i;
  return t.gather_rows(H, idx);
}

Tensor mix_memory(const Tensor& S, const ExpanderAssignment& as, MixerParams& p,
                  bool training, Rng* dropout_rng) {
  Tape t;
  return t.value(mix_on_tape(t, t.constant(S), as, p, training, dropout_rng));
}

Tensor build_input_features(const NodeBank& bank, const ExpanderMemory& xm,
                            const TemporalMemory& mem, const std::vector<int>& new_ids,
                            const std::vector<int>& seen_ids) {
  int m = mem.states.cols;
  if (xm.H.rows > 0 && xm.H.cols != m)
    throw std::invalid_argument("expander row width != memory width");
  Tensor out(static_cast<int>(new_ids.size() + seen_ids.size()), m);
  int r = 0;
  auto mem_row = [&](int u) {
    for (int j = 0; j < m; ++j) out.at(r, j) = mem.states.at(u, j);
  };
  for (int u : new_ids) {
    mem_row(u);
    ++r;
  }
  for (int u : seen_ids) {
    int slot = bank.slot(u);
    if (slot >= 0 && slot < static_cast<int>(xm.valid.size()) && xm.valid[static_cast<size_t>(slot)]) {
      for (int j = 0; j < m; ++j) out.at(r, j) = xm.H.at(slot, j);
    } else {
      mem_row(u);
    }
    ++r;
  }
  return out;
}

int RewireXProvider::width() const { return pl_->dims().memory; }

void RewireXProvider::prepare(Tape& t, const std::vector<int>& query_nodes,
                              const std::vector<int>& neighbor_nodes,
                              const std::function<Value(int)>& eff) {
  tape_ = &t;
  eff_ = eff;
  cache_.clear();
  scope_.clear();
  have_h_ = false;
  scope_.insert(query_nodes.begin(), query_nodes.end());
  if (pl_->mixer_config().scope == MixerScope::BatchOneHop)
    scope_.insert(neighbor_nodes.begin(), neighbor_nodes.end());
  const ExpanderMemory& xm = pl_->expander_memory();
  if (!training_ || !xm.any()) return;
  // rebuild the stored pass on the loss tape: same committed inputs, same
  // dropout stream, so the rows are bit-identical and mixer gradients flow
  std::vector<Value> rows;
  rows.reserve(static_cast<size_t>(xm.H.rows));
  for (int s = 0; s < xm.H.rows; ++s) rows.push_back(eff_(pl_->bank().members()[static_cast<size_t>(s)]));
  Value X = t.stack_rows(rows);
  Rng drop(xm.producing_key);
  hvals_ = mix_on_tape(t, X, *xm.produced_assign, pl_->mixer(), xm.produced_training, &drop);
  have_h_ = true;
}

Value RewireXProvider::row(int node) {
  auto it = cache_.find(node);
  if (it != cache_.end()) return it->second;
  const ExpanderMemory& xm = pl_->expander_memory();
  int slot = pl_->bank().slot(node);
  bool fresh = slot >= 0 && slot < static_cast<int>(xm.valid.size()) &&
               xm.valid[static_cast<size_t>(slot)] && scope_.count(node) > 0;
  Value v;
  if (fresh && training_ && have_h_) {
    v = tape_->gather_rows(hvals_, {slot});
  } else if (fresh && !training_) {
    Tensor r(1, xm.H.cols);
    for (int j = 0; j < r.cols; ++j) r.at(0, j) = xm.H.at(slot, j);
    v = tape_->constant(std::move(r));
  } else {
    v = eff_(node);
  }
  cache_.emplace(node, v);
  return v;
}

namespace {

TgnDims adjust_dims(const EventStream& stream, TgnDims d, bool rewire) {
  d.node_feat = stream.node_feat_width();
  d.edge_feat = stream.edge_feat_width();
  d.x_width = rewire ? d.memory : d.node_feat;
  return d;
}

}  // namespace

TgrPipeline::TgrPipeline(const EventStream& stream, TgnDims dims, Aggregator agg,
                         MixerConfig mix, bool rewire, std::uint64_t seed, double lr)
    : engine_(stream, adjust_dims(stream, dims, rewire), agg, seed),
      rewire_(rewire),
      cfg_(mix),
      seed_(seed),
      bank_(stream.num_nodes()),
      provider_(this) {
  if (rewire_) {
    int cap = cfg_.initial_capacity > 0 ? cfg_.initial_capacity : stream.num_nodes();
    cayley_ = build_cayley(smallest_n_for(static_cast<uint64_t>(std::max(1, cap))));
    refresh_assignment();
    Rng mrng(derive_seed(seed_, "mixer.init"));
    mixer_.emplace(
        make_mixer_params(mrng, cfg_.layer, dims.memory, cfg_.heads, cfg_.dropout));
  }
  adam_.emplace(trainable(), lr);
}

std::vector<Parameter*> TgrPipeline::trainable() {
  std::vector<Parameter*> out = engine_.trainable();
  if (rewire_ && mixer_) {
    auto mp = mixer_->params();
    out.insert(out.end(), mp.begin(), mp.end());
  }
  return out;
}

void TgrPipeline::refresh_assignment() {
  auto a = std::make_shared<ExpanderAssignment>(
      assign_vertices(cayley_, std::max(1, bank_.size()), cfg_.assign));
  assign_ = std::move(a);
}

void TgrPipeline::reset_runtime() {
  engine_.reset_runtime();
  bank_ = NodeBank(engine_.stream().num_nodes());
  xmem_ = ExpanderMemory{};
  batch_counter_ = 0;
  if (rewire_) {
    int cap = cfg_.initial_capacity > 0 ? cfg_.initial_capacity : engine_.stream().num_nodes();
    cayley_ = build_cayley(smallest_n_for(static_cast<uint64_t>(std::max(1, cap))));
    refresh_assignment();
  }
}

void TgrPipeline::regrow(int min_capacity) {
  if (!rewire_) throw std::logic_error("regrow without rewiring");
  cayley_ = build_cayley(smallest_n_for(static_cast<uint64_t>(std::max(1, min_capacity))));
  refresh_assignment();
  // expander rows are slot-indexed and slots are stable, so stored rows
  // and validity carry over untouched
}

void TgrPipeline::set_expander_modulus(std::uint32_t n) {
  if (!rewire_) throw std::logic_error("no expander without rewiring");
  CayleyGraph g = build_cayley(n);
  if (static_cast<int>(g.num_vertices()) < bank_.size())
    throw std::invalid_argument("modulus too small for the current bank");
  cayley_ = std::move(g);
  refresh_assignment();
}

BatchScores TgrPipeline::process(const TemporalBatch& batch,
                                 const std::vector<std::vector<int>>& negatives,
                                 bool training) {
  if (!rewire_) {
    return training ? engine_.train_step(batch, negatives, *adam_, nullptr)
                    : engine_.eval_step(batch, negatives, nullptr);
  }
  node_bank_update(bank_, engine_.stream(), batch);
  if (bank_.size() > static_cast<int>(cayley_.num_vertices())) {
    if (!cfg_.regrow) throw std::runtime_error("node bank exceeded expander capacity");
    regrow(bank_.size());
  } else if (assign_->bank_capacity != std::max(1, bank_.size())) {
    refresh_assignment();
  }
  provider_.begin_batch(training);
  BatchScores r = training ? engine_.train_step(batch, negatives, *adam_, &provider_)
                           : engine_.eval_step(batch, negatives, &provider_);
  end_of_batch_mix(training);
  ++batch_counter_;
  return r;
}

void TgrPipeline::end_of_batch_mix(bool training) {
  int bsize = bank_.size();
  if (bsize == 0) return;
  int m = dims().memory;
  Tensor S(bsize, m);
  for (int s = 0; s < bsize; ++s) {
    Tensor r = engine_.memory_row(bank_.members()[static_cast<size_t>(s)]);
    for (int j = 0; j < m; ++j) S.at(s, j) = r.at(0, j);
  }
  std::uint64_t key =
      derive_seed(seed_, "mix.drop",
                  static_cast<std::uint64_t>(epoch_) * 0x100000000ull +
                      static_cast<std::uint64_t>(batch_counter_));
  Rng drop(key);
  xmem_.H = mix_memory(S, *assign_, *mixer_, training, &drop);
  xmem_.valid.assign(static_cast<size_t>(bsize), 1);
  xmem_.producing_key = key;
  xmem_.produced_training = training;
  xmem_.produced_assign = assign_;
}

Tensor TgrPipeline::replay_stored_mix() {
  if (!xmem_.any()) throw std::logic_error("no stored expander pass");
  int m = dims().memory;
  Tensor S(xmem_.H.rows, m);
  for (int s = 0; s < xmem_.H.rows; ++s) {
    Tensor r = engine_.memory_row(bank_.members()[static_cast<size_t>(s)]);
    for (int j = 0; j < m; ++j) S.at(s, j) = r.at(0, j);
  }
  Rng drop(xmem_.producing_key);
  return mix_memory(S, *xmem_.produced_assign, *mixer_, xmem_.produced_training, &drop);
}

BatchScores TgrPipeline::train_batch(const TemporalBatch& batch,
                                     const std::vector<std::vector<int>>& negatives) {
  return process(batch, negatives, true);
}

BatchScores TgrPipeline::eval_batch(const TemporalBatch& batch,
                                    const std::vector<std::vector<int>>& negatives) {
  return process(batch, negatives, false);
}

void TgrPipeline::replay_batch(const TemporalBatch& batch) {
  if (!rewire_) {
    engine_.advance(batch);
    return;
  }
  node_bank_update(bank_, engine_.stream(), batch);
  if (bank_.size() > static_cast<int>(cayley_.num_vertices())) {
    if (!cfg_.regrow) throw std::runtime_error("node bank exceeded expander capacity");
    regrow(bank_.size());
  } else if (assign_->bank_capacity != std::max(1, bank_.size())) {
    refresh_assignment();
  }
  engine_.advance(batch);
  end_of_batch_mix(false);
  ++batch_counter_;
}

}  // namespace tg
