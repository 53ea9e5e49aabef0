#pragma once

#include <cstdint>
#include <vector>

#include "tg/ctdg.hpp"

namespace tg {

struct SplitSpec {
  double train = 0.70;
  double val = 0.15;
};

// Event positions: [0, train_end) train, [train_end, val_end) val, rest test.
struct SplitResult {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
};

// Chronological split by event position (stream is already time sorted).
// Throws if fractions are outside (0,1) or leave an empty test segment.
SplitResult chronological_split(const EventStream& stream, const SplitSpec& spec);

// Fraction of distinct (src,dst) pairs in the test segment that never
// appear in the train segment. Pairs are directed.
double surprise_index(const EventStream& stream, const SplitResult& split);

// Deterministic negative destination sampler. The candidate universe is
// every node that ever appears as a destination in the stream. Each query
// gets k distinct destinations, none equal to the true destination,
// reproducible from (seed, query_index) alone.
class NegativeSampler {
 public:
  NegativeSampler(const EventStream& stream, std::uint64_t seed);

  std::vector<int> sample(std::size_t query_index, int true_dst, int k) const;

  const std::vector<int>& universe() const { return universe_; }

 private:
  std::vector<int> universe_;
  std::uint64_t seed_;
};

// Path graph: edge i connects nodes (i, i+1) at times[i]. n_edges+1 nodes.
EventStream gen_path_graph(const std::vector<double>& times);

// Uniform random pairs, integer timestamps 1..n_events (simple timing).
EventStream gen_erdos_temporal(int n_nodes, int n_events, std::uint64_t seed);

// Bipartite interaction stream with clustered preferences, a global regime
// shift halfway through, and a cohort of users that go quiet before the
// shift. The test segment is constructed to hit the requested distinct-pair
// surprise within +-0.05. Node features are noisy cluster one-hots.
struct BipartiteSpec {
  int n_users = 800;
  int n_items = 200;
  int n_events = 20000;
  int n_clusters = 8;
  double surprise = 0.8;
  SplitSpec split;
  double pref_strength = 0.9;   // probability an item comes from the preferred cluster
  double feature_noise = 0.5;
  // Preference regimes. Every switch rotates all preferred clusters by a
  // fresh random offset; interior switches sit at r*n/regimes, the last one
  // at the start of the test segment. Each interior regime silences a
  // random user cohort, and the cohort that slept through the final
  // pre-test regime supplies the stale test queries.
  int regimes = 6;
  double stale_user_frac = 0.3; // cohort silenced per interior regime
  double stale_query_frac = 0.5;// test queries drawn from the stale cohort
  // Probability an in-cluster pick is narrowed to the regime's season slice
  // of the cluster pool. 0 disables seasonality; 1 retires off-season items
  // completely while their season is out.
  double season_strength = 0.5;
  std::uint64_t seed = 1;
};

struct BipartiteStream {
  EventStream stream;
  SplitResult split;
  std::vector<int> stale_users;
  double realized_surprise = 0.0;
};

BipartiteStream gen_bipartite(const BipartiteSpec& spec);

// Clustered background traffic where a chosen cohort receives no events for
// a fixed window of time units before the test segment; their last event
// lands exactly at the window start, and test events reconnect them.
// window == 0 reproduces the plain background stream bit for bit.
struct StaleSpec {
  int n_nodes = 120;
  int n_events = 4000;
  int n_clusters = 4;
  double window = 600.0;
  double stale_frac = 0.1;
  SplitSpec split;
  std::uint64_t seed = 1;
};

struct StaleStream {
  EventStream stream;
  SplitResult split;
  std::vector<int> stale_nodes;
  double window_start = 0.0;  // time of the pinned last events
  double window_end = 0.0;    // first test timestamp
};

StaleStream gen_stale(const StaleSpec& spec);

}  // namespace tg
