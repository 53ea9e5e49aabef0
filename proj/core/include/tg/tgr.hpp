#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_set>

#include "tg/cayley.hpp"
#include "tg/tgn.hpp"

namespace tg {

enum class MixerLayer { Gat, Gcn, Gin };
enum class MixerScope { Batch, BatchOneHop };

struct MixerConfig {
  MixerLayer layer = MixerLayer::Gat;
  MixerScope scope = MixerScope::Batch;
  AssignMode assign = AssignMode::Induced;
  int heads = 2;
  double dropout = 0.1;
  bool regrow = true;
  int initial_capacity = 0;  // 0: size the expander to the stream's node count
};

struct MixerParams {
  MixerLayer layer = MixerLayer::Gat;
  GatLayerParams gat;
  GcnLayerParams gcn;
  GinLayerParams gin;
  std::vector<Parameter*> params();
};

MixerParams make_mixer_params(Rng& rng, MixerLayer layer, int dim, int heads, double dropout);

// One expander pass. X rows follow bank slot order; relay assignments pad
// the working set with zero rows for unoccupied vertices. The result keeps
// only the occupied rows. Throws when X has more rows than the assignment
// covers.
Value mix_on_tape(Tape& t, Value X, const ExpanderAssignment& as, MixerParams& p,
                  bool training = false, Rng* dropout_rng = nullptr);
Tensor mix_memory(const Tensor& S, const ExpanderAssignment& as, MixerParams& p,
                  bool training = false, Rng* dropout_rng = nullptr);

// Mixed memory from the most recent end-of-batch pass. Row i belongs to
// bank slot i; slots created after the pass are invalid until the next
// one. The producing assignment and dropout key are kept so a training
// step can rebuild the identical pass on its own tape.
struct ExpanderMemory {
  Tensor H;
  std::vector<char> valid;
  std::uint64_t producing_key = 0;
  bool produced_training = false;
  std::shared_ptr<const ExpanderAssignment> produced_assign;

  bool any() const { return produced_assign != nullptr; }
};

// Dynamic feature rows for new_ids followed by seen_ids: a seen node with
// a valid expander row gets it, everything else falls back to its memory
// row. Widths must agree.
Tensor build_input_features(const NodeBank& bank, const ExpanderMemory& xm,
                            const TemporalMemory& mem, const std::vector<int>& new_ids,
                            const std::vector<int>& seen_ids);

class TgrPipeline;

// Feeds expander rows for in-scope nodes and memory rows for the rest.
// During training the stored pass is rebuilt on the loss tape (same
// inputs, same dropout mask) so mixer gradients flow.
class RewireXProvider : public XProvider {
 public:
  explicit RewireXProvider(TgrPipeline* pl) : pl_(pl) {}
  int width() const override;
  void prepare(Tape& t, const std::vector<int>& query_nodes,
               const std::vector<int>& neighbor_nodes,
               const std::function<Value(int)>& eff) override;
  Value row(int node) override;
  void begin_batch(bool training) { training_ = training; }

 private:
  TgrPipeline* pl_;
  Tape* tape_ = nullptr;
  bool training_ = false;
  std::function<Value(int)> eff_;
  std::unordered_set<int> scope_;
  std::unordered_map<int, Value> cache_;
  bool have_h_ = false;
  Value hvals_{-1};
};

// Expander-rewired wrapper around the streaming engine. Each batch:
// register new nodes (growing the expander when the bank overflows),
// run the engine step with expander-enhanced input features, commit,
// then remix the full post-commit memory for the next batch. With
// rewiring off the wrapper is a plain pass-through to the engine.
class TgrPipeline {
 public:
  TgrPipeline(const EventStream& stream, TgnDims dims, Aggregator agg, MixerConfig mix,
              bool rewire, std::uint64_t seed, double lr);

  void reset_runtime();
  void set_epoch(int epoch) { epoch_ = epoch; }

  BatchScores train_batch(const TemporalBatch& batch,
                          const std::vector<std::vector<int>>& negatives);
  BatchScores eval_batch(const TemporalBatch& batch,
                         const std::vector<std::vector<int>>& negatives);
  // state evolution only (bank, memory, mixes), no scoring
  void replay_batch(const TemporalBatch& batch);

  // grows the expander to hold at least min_capacity bank slots; existing
  // slots keep their vertices and expander rows
  void regrow(int min_capacity);

  // rebuilds the expander with an explicit modulus (checkpoint restore)
  void set_expander_modulus(std::uint32_t n);

  // numeric rebuild of the stored end-of-batch pass; valid until the next
  // commit mutates memory
  Tensor replay_stored_mix();

  bool rewire() const { return rewire_; }
  const MixerConfig& mixer_config() const { return cfg_; }
  TgnEngine& engine() { return engine_; }
  const TgnEngine& engine() const { return engine_; }
  NodeBank& bank() { return bank_; }
  const NodeBank& bank() const { return bank_; }
  const CayleyGraph& cayley() const { return cayley_; }
  const ExpanderAssignment& assignment() const { return *assign_; }
  ExpanderMemory& expander_memory() { return xmem_; }
  const ExpanderMemory& expander_memory() const { return xmem_; }
  MixerParams& mixer() { return *mixer_; }
  Adam& optimizer() { return *adam_; }
  const TgnDims& dims() const { return engine_.dims(); }
  std::uint64_t seed() const { return seed_; }

  std::vector<Parameter*> trainable();

 private:
  friend class RewireXProvider;
  BatchScores process(const TemporalBatch& batch,
                      const std::vector<std::vector<int>>& negatives, bool training);
  void refresh_assignment();
  void end_of_batch_mix(bool training);

  TgnEngine engine_;
  bool rewire_;
  MixerConfig cfg_;
  std::uint64_t seed_;
  NodeBank bank_;
  CayleyGraph cayley_;
  std::shared_ptr<const ExpanderAssignment> assign_;
  ExpanderMemory xmem_;
  std::optional<MixerParams> mixer_;
  std::optional<Adam> adam_;
  RewireXProvider provider_;
  int epoch_ = 0;
  long batch_counter_ = 0;
};

}  // namespace tg
