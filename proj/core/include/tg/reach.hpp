#pragma once

#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tg/ctdg.hpp"

namespace tg {

// How timestamps gate information flow along a walk:
//   Strict      - event times must strictly increase hop to hop
//   Batched     - batch ids must strictly increase (a batch's events all
//                 propagate against the front from before the batch)
//   DynamicFrom - strict, and the first hop must be at time >= from_time
struct ReachMode {
  enum class Variant { Strict, Batched, DynamicFrom };
  Variant variant = Variant::Strict;
  std::vector<int> batch_of_event;  // Batched: event position -> batch id
  double from_time = 0.0;           // DynamicFrom

  static ReachMode strict() { return {}; }
  static ReachMode batched(std::vector<int> b);
  static ReachMode batched(const EventStream& s, size_t batch_size);
  static ReachMode dynamic_from(double t0);
};

// Earliest mix values per reached node: event time under Strict and
// DynamicFrom, batch id under Batched. The source is always present
// with value -infinity (mixed before any event).
struct MixingFront {
  int source = 0;
  std::unordered_map<int, double> earliest;

  bool contains(int u) const { return earliest.find(u) != earliest.end(); }
  size_t size() const { return earliest.size(); }
};

// Single chronological sweep over events with t < tau.
MixingFront temporal_mixing_set(const EventStream& s, int source, double tau,
                                const ReachMode& mode);

// True iff source's state cannot have mixed into target by tau.
bool under_reaches(const EventStream& s, int source, int target, double tau,
                   const ReachMode& mode);

struct PathHop {
  int from = 0;
  int to = 0;
  double t = 0.0;
  size_t event_index = 0;
};

// Walk orientation from source to target; hops.empty() iff source == target.
struct MixingPath {
  int source = 0;
  int target = 0;
  std::vector<PathHop> hops;
};

std::optional<MixingPath> find_mixing_path(const EventStream& s, int source, int target,
                                           double tau, const ReachMode& mode);

// True iff the static undirected distance in the snapshot exceeds k.
bool static_under_reaches(const Snapshot& view, int u, int v, int k);

// Ordered pairs (u, v) with u mixing into v but not v into u.
std::vector<std::pair<int, int>> asymmetry_pairs(const EventStream& s, double tau,
                                                 const ReachMode& mode);

struct StalenessEntry {
  int node = 0;
  double staleness = 0.0;  // tau - last activation
};

// One entry per bank member, in slot order.
std::vector<StalenessEntry> staleness_report(const NodeBank& bank, double tau);

// Post-hoc widening of a front by static hops; added nodes inherit the
// value of the front node that first reaches them. Diagnostic only.
MixingFront expand_front_static(const MixingFront& front, const Snapshot& view, int hops);

}  // namespace tg
