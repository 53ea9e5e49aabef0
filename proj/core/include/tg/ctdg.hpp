#pragma once

#include <cstddef>
#include <vector>

#include "tg/tensor.hpp"

namespace tg {

// One timestamped interaction. src/dst order is kept for the two-sided
// memory update; every other consumer treats the edge as undirected.
struct Event {
  int src = 0;
  int dst = 0;
  double t = 0.0;
  std::vector<double> feat;
};

// Chronologically sorted, immutable after ingest. Node ids are dense:
// num_nodes = 1 + max id seen.
class EventStream {
 public:
  // num_nodes_hint widens the id space for nodes that never appear in an
  // event (they still need feature rows); it may not shrink it.
  static EventStream ingest(std::vector<Event> records, int num_nodes_hint = 0);

  const std::vector<Event>& events() const { return events_; }
  size_t num_events() const { return events_.size(); }
  int num_nodes() const { return num_nodes_; }
  int edge_feat_width() const { return efeat_width_; }
  // true when all timestamps are distinct
  bool simple_timing() const { return simple_timing_; }

  const Tensor& node_feats() const { return node_feats_; }
  int node_feat_width() const { return node_feats_.cols; }
  bool has_explicit_node_feats() const { return explicit_feats_; }
  void set_node_feats(Tensor x);

 private:
  std::vector<Event> events_;
  int num_nodes_ = 0;
  int efeat_width_ = 0;
  bool simple_timing_ = true;
  bool explicit_feats_ = false;
  Tensor node_feats_;  // defaults to zeros of width 1
};

// Prefix view of a stream: events with t <= tau, or t < tau when open.
struct Snapshot {
  const EventStream* stream = nullptr;
  double tau = 0.0;
  bool inclusive = true;
  size_t end = 0;  // number of events in view

  const Event& event(size_t i) const { return stream->events()[i]; }
};

Snapshot snapshot(const EventStream& s, double tau, bool inclusive = true);

// Contiguous slice [begin, end) of the sorted stream.
struct TemporalBatch {
  int id = 0;
  size_t begin = 0;
  size_t end = 0;
};

// Partition into batches of at most batch_size events; the last batch
// may be short. Batch ids are nondecreasing in time.
std::vector<TemporalBatch> batchify(const EventStream& s, size_t batch_size);

// Observed-node registry. Slots are assigned in first-observation
// order and never move, which keeps downstream row indices stable.
class NodeBank {
 public:
  explicit NodeBank(int num_nodes)
      : observed_(num_nodes, 0), last_activation_(num_nodes, 0.0), slot_(num_nodes, -1) {}

  bool observed(int u) const { return observed_[static_cast<size_t>(u)] != 0; }
  int size() const { return static_cast<int>(members_.size()); }
  int capacity_nodes() const { return static_cast<int>(observed_.size()); }
  double last_activation(int u) const { return last_activation_[static_cast<size_t>(u)]; }
  int slot(int u) const { return slot_[static_cast<size_t>(u)]; }
  const std::vector<int>& members() const { return members_; }  // slot -> node id

  void observe(int u, double t);
  void touch(int u, double t) { last_activation_[static_cast<size_t>(u)] = t; }

 private:
  std::vector<char> observed_;
  std::vector<double> last_activation_;
  std::vector<int> slot_;
  std::vector<int> members_;
};

struct BankUpdate {
  std::vector<int> new_ids;   // first-appearance order within the batch
  std::vector<int> seen_ids;  // ascending node id
};

// Splits the batch's nodes against the pre-batch observed set, then
// marks them observed and refreshes last activation times.
BankUpdate node_bank_update(NodeBank& bank, const EventStream& s, const TemporalBatch& b);

struct NeighborEvent {
  int neighbor = 0;
  double t = 0.0;
  size_t event_index = 0;
};

// Most-recent-first undirected neighbourhood of u within the snapshot,
// truncated to max_neighbors.
std::vector<NeighborEvent> temporal_neighbourhood(const Snapshot& view, int u,
                                                  size_t max_neighbors);

}  // namespace tg
