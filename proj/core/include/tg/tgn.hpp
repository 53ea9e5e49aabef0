#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "tg/ctdg.hpp"
#include "tg/nn.hpp"

namespace tg {

enum class Aggregator { Attention, Mean, Sum, Max };

struct TgnDims {
  int node_feat = 1;    // raw node feature width
  int edge_feat = 0;
  int memory = 100;
  int embed = 100;
  int time = 100;
  int x_width = 1;      // width of the dynamic feature rows fed to the embedder
  int heads = 2;
  int neighbor_cap = 10;
  int psi_hidden = 100;
  int kappa_hidden = 100;
};

// chi: feature -> initial memory. phi_src / phi_dst: per-side GRU update.
// psi: edge message MLP over [s_u, s_v, x_u, x_v, time_enc(dt)].
// The attention aggregator scores psi outputs against the target's
// [s_u, x_u] row with additive two-sided logits, one set per head.
struct TgnParams {
  LinearParams chi;
  TimeEncoderParams time_enc;
  GruCellParams phi_src, phi_dst;
  Mlp2Params psi;
  int heads = 1;
  std::vector<Parameter> att_q;         // (memory + x_width) x head_dim
  std::vector<Parameter> att_k;         // embed x head_dim
  std::vector<Parameter> att_aq, att_ak;  // head_dim x 1
  LinearParams self_proj;               // isolated-node fallback, memory -> embed
  Mlp2Params kappa;                     // [z_u, z_v] -> 1 logit
  Aggregator aggregator = Aggregator::Attention;

  std::vector<Parameter*> params();
};

TgnParams make_tgn_params(Rng& rng, const TgnDims& dims, Aggregator agg);

struct TemporalMemory {
  Tensor states;  // num_nodes x memory
  std::vector<double> last_update;
  std::vector<char> touched;  // ever updated by an event

  TemporalMemory() = default;
  TemporalMemory(int num_nodes, int m)
      : states(num_nodes, m), last_update(static_cast<size_t>(num_nodes), 0.0),
        touched(static_cast<size_t>(num_nodes), 0) {}
};

// Materialised initial memory: every row is chi of the node's features.
TemporalMemory memory_init(const EventStream& stream, TgnParams& p);

// Inputs a batch's update chain reads: the starting row and clock of every
// node the batch touches, captured at commit time so a later replay is
// bit-identical.
struct MemoryReadState {
  int batch_id = -1;
  std::vector<Event> events;
  std::unordered_map<int, Tensor> start_rows;
  std::unordered_map<int, double> start_clock;
};

// Replays the per-event GRU chain on the tape and returns the final value
// per touched node. Both endpoints of an event read pre-event states; a
// self-event applies the source side then the destination side.
std::unordered_map<int, Value> apply_batch_updates(Tape& t, const MemoryReadState& rs,
                                                   TgnParams& p, const TgnDims& dims);

// Supplies the dynamic per-node feature rows consumed by psi and the
// attention queries. `eff` resolves a node's current memory row on the
// same tape, for providers that fall back to memory.
class XProvider {
 public:
  virtual ~XProvider() = default;
  virtual int width() const = 0;
  virtual void prepare(Tape& t, const std::vector<int>& query_nodes,
                       const std::vector<int>& neighbor_nodes,
                       const std::function<Value(int)>& eff) = 0;
  virtual Value row(int node) = 0;
};

// Constant rows from the stream's static node features.
class StaticXProvider : public XProvider {
 public:
  explicit StaticXProvider(const EventStream& stream) : stream_(&stream) {}
  int width() const override { return stream_->node_feat_width(); }
  void prepare(Tape& t, const std::vector<int>&, const std::vector<int>&,
               const std::function<Value(int)>&) override {
    tape_ = &t;
    cache_.clear();
  }
  Value row(int node) override;

 private:
  const EventStream* stream_;
  Tape* tape_ = nullptr;
  std::unordered_map<int, Value> cache_;
};

struct BatchScores {
  double loss = 0.0;  // mean BCE over the scored pairs, training or not
  std::vector<double> pos;               // per event, probability
  std::vector<std::vector<double>> neg;  // per event
};

// Streaming link predictor with per-node GRU memory. Training follows a
// one-batch lag: the loss at batch i backpropagates through a replay of
// batch i-1's memory updates (identical bit for bit to the committed rows,
// because the commit ran with the same post-step parameters), then the
// optimizer steps, then batch i is committed.
class TgnEngine {
 public:
  TgnEngine(const EventStream& stream, TgnDims dims, Aggregator agg, std::uint64_t seed);

  // clears memory, neighbour index and the replay record; parameters persist
  void reset_runtime();

  BatchScores train_step(const TemporalBatch& batch,
                         const std::vector<std::vector<int>>& negatives, Adam& opt,
                         XProvider* xp = nullptr);
  // scores and commits without gradients
  BatchScores eval_step(const TemporalBatch& batch,
                        const std::vector<std::vector<int>>& negatives,
                        XProvider* xp = nullptr);
  // scores without committing; the stream position is unchanged
  BatchScores score_batch(const TemporalBatch& batch,
                          const std::vector<std::vector<int>>& negatives,
                          XProvider* xp = nullptr);
  // commits without scoring, for replaying history
  void advance(const TemporalBatch& batch) { commit_batch(batch); }

  TgnParams& params() { return p_; }
  std::vector<Parameter*> trainable() { return p_.params(); }
  const TemporalMemory& memory() const { return mem_; }
  TemporalMemory& memory_mut() { return mem_; }
  const EventStream& stream() const { return *stream_; }
  const TgnDims& dims() const { return dims_; }

  // committed memory row; untouched nodes resolve through chi lazily
  Tensor memory_row(int node) const;

 private:
  BatchScores run_batch(const TemporalBatch& batch,
                        const std::vector<std::vector<int>>& negatives, bool training,
                        Adam* opt, XProvider* xp);
  void commit_batch(const TemporalBatch& batch);

  const EventStream* stream_;
  TgnDims dims_;
  TgnParams p_;
  TemporalMemory mem_;
  StaticXProvider static_x_;
  std::vector<std::vector<NeighborEvent>> nbr_;  // built at commit time only
  MemoryReadState replay_;
  bool have_replay_ = false;
};

// Embeddings for explicit targets against a snapshot: neighbourhoods come
// from the view, memory rows from `mem.states` as given, dynamic features
// from `x_rows` (defaults to the stream's static features).
Tensor compute_embeddings(const TemporalMemory& mem, const Snapshot& view,
                          const std::vector<int>& targets, TgnParams& p, const TgnDims& dims,
                          const Tensor* x_rows = nullptr);

// logistic(kappa([z_u, z_v])). Throws when widths do not match kappa.
double predict_link(TgnParams& p, const Tensor& z_u, const Tensor& z_v);

}  // namespace tg
