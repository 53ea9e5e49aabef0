#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oracles.hpp"
#include "tg/data.hpp"
#include "tg/reach.hpp"
#include "tg/rng.hpp"

using namespace tg;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EventStream random_stream(Rng& rng, bool distinct_times) {
  int n_nodes = 2 + static_cast<int>(rng.uniform_int(7));
  int n_events = 1 + static_cast<int>(rng.uniform_int(10));
  std::vector<Event> ev;
  for (int i = 0; i < n_events; ++i) {
    Event e;
    e.src = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_nodes)));
    e.dst = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_nodes)));
    e.t = distinct_times ? rng.uniform(0.0, 10.0)
                         : static_cast<double>(1 + rng.uniform_int(6));
    ev.push_back(e);
  }
  return EventStream::ingest(std::move(ev), n_nodes);
}

bool fronts_equal(const MixingFront& a, const std::unordered_map<int, double>& b) {
  if (a.earliest.size() != b.size()) return false;
  for (const auto& [node, value] : b) {
    auto it = a.earliest.find(node);
    if (it == a.earliest.end() || it->second != value) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("sweep equals walk enumeration in every mode") {
  Rng rng(515001);
  for (int trial = 0; trial < 200; ++trial) {
    CAPTURE(trial);
    EventStream s = random_stream(rng, trial % 2 == 0);
    double last_t = s.events().back().t;
    for (double tau : {-1.0, last_t / 2.0, last_t, kInf}) {
      std::vector<ReachMode> modes;
      modes.push_back(ReachMode::strict());
      modes.push_back(ReachMode::batched(s, 1 + rng.uniform_int(4)));
      modes.push_back(ReachMode::dynamic_from(rng.uniform(0.0, last_t)));
      for (const ReachMode& mode : modes)
        for (int src = 0; src < s.num_nodes(); ++src) {
          MixingFront got = temporal_mixing_set(s, src, tau, mode);
          auto want = oracle::mixing_by_enumeration(s, src, tau, mode);
          CHECK(fronts_equal(got, want));
        }
    }
  }
}

TEST_CASE("batched fronts are contained in strict fronts") {
  // distinct timestamps: a batch boundary can never split a tie
  Rng rng(99307);
  for (int trial = 0; trial < 200; ++trial) {
    EventStream s = random_stream(rng, true);
    ReachMode batched = ReachMode::batched(s, 1 + rng.uniform_int(4));
    for (int src = 0; src < s.num_nodes(); ++src) {
      MixingFront under_batching = temporal_mixing_set(s, src, kInf, batched);
      MixingFront strict = temporal_mixing_set(s, src, kInf, ReachMode::strict());
      for (const auto& [node, value] : under_batching.earliest)
        CHECK(strict.contains(node));
    }
  }
}

TEST_CASE("four-edge path: one ordering in 24 mixes, static reach never fails") {
  std::vector<double> times{1, 2, 3, 4};
  std::sort(times.begin(), times.end());
  int mixing_orderings = 0;
  int static_failures = 0;
  int orderings = 0;
  do {
    ++orderings;
    EventStream s = gen_path_graph(times);
    if (!under_reaches(s, 0, 4, kInf, ReachMode::strict())) ++mixing_orderings;
    if (static_under_reaches(snapshot(s, kInf, false), 0, 4, 4)) ++static_failures;
  } while (std::next_permutation(times.begin(), times.end()));
  CHECK(orderings == 24);
  CHECK(mixing_orderings == 1);
  CHECK(static_failures == 0);
}

TEST_CASE("static distance exceeding the layer count is detected") {
  EventStream s = gen_path_graph({1, 2, 3, 4});
  Snapshot view = snapshot(s, kInf, false);
  CHECK(static_under_reaches(view, 0, 4, 3));       // distance 4 > 3 layers
  CHECK_FALSE(static_under_reaches(view, 0, 4, 4));
  CHECK_FALSE(static_under_reaches(view, 0, 0, 0));
  CHECK(static_under_reaches(view, 0, 1, 0));
}

TEST_CASE("reversed-time paths mix backwards only") {
  for (int len = 2; len <= 5; ++len) {
    CAPTURE(len);
    std::vector<double> times(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) times[static_cast<size_t>(i)] = static_cast<double>(len - i);
    EventStream s = gen_path_graph(times);
    CHECK_FALSE(under_reaches(s, len, 0, kInf, ReachMode::strict()));
    CHECK(under_reaches(s, 0, len, kInf, ReachMode::strict()));
  }
}

TEST_CASE("witness paths are genuine and exist exactly when mixing holds") {
  Rng rng(70312);
  for (int trial = 0; trial < 120; ++trial) {
    EventStream s = random_stream(rng, trial % 2 == 0);
    double tau = trial % 3 == 0 ? kInf : s.events().back().t;
    std::vector<ReachMode> modes{ReachMode::strict(), ReachMode::batched(s, 2),
                                 ReachMode::dynamic_from(1.5)};
    for (const ReachMode& mode : modes)
      for (int src = 0; src < s.num_nodes(); ++src)
        for (int dst = 0; dst < s.num_nodes(); ++dst) {
          auto p = find_mixing_path(s, src, dst, tau, mode);
          CHECK(p.has_value() != under_reaches(s, src, dst, tau, mode));
          if (!p) continue;
          CHECK(p->source == src);
          CHECK(p->target == dst);
          if (src == dst) {
            CHECK(p->hops.empty());
            continue;
          }
          int at = src;
          double carried = -kInf;
          int carried_batch = -1;
          for (const PathHop& h : p->hops) {
            const Event& e = s.events()[h.event_index];
            CHECK(e.t < tau);
            CHECK(h.t == e.t);
            CHECK(h.from == at);
            bool touches = (e.src == h.from && e.dst == h.to) ||
                           (e.dst == h.from && e.src == h.to);
            CHECK(touches);
            if (mode.variant == ReachMode::Variant::Batched) {
              int b = mode.batch_of_event[h.event_index];
              CHECK(b > carried_batch);
              carried_batch = b;
            } else {
              CHECK(e.t > carried);
              carried = e.t;
            }
            at = h.to;
          }
          if (mode.variant == ReachMode::Variant::DynamicFrom && !p->hops.empty())
            CHECK(p->hops.front().t >= mode.from_time);
          CHECK(at == dst);
        }
  }
}

TEST_CASE("asymmetric mixing census on a reversed two-edge path") {
  // edge (0,1) at t=2, edge (1,2) at t=1: only 2 -> 0 mixes end to end
  EventStream s = gen_path_graph({2, 1});
  auto pairs = asymmetry_pairs(s, kInf, ReachMode::strict());
  auto has = [&](int a, int b) {
    return std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) != pairs.end();
  };
  CHECK(has(2, 0));
  CHECK_FALSE(has(0, 2));
  // single hops work both ways and must not show up
  CHECK_FALSE(has(0, 1));
  CHECK_FALSE(has(1, 2));
}

TEST_CASE("asymmetry census agrees with pairwise queries") {
  Rng rng(441992);
  for (int trial = 0; trial < 40; ++trial) {
    EventStream s = random_stream(rng, true);
    double tau = s.events().back().t + 1.0;
    auto pairs = asymmetry_pairs(s, tau, ReachMode::strict());
    for (int u = 0; u < s.num_nodes(); ++u)
      for (int v = 0; v < s.num_nodes(); ++v) {
        if (u == v) continue;
        bool fwd = !under_reaches(s, u, v, tau, ReachMode::strict());
        bool bwd = !under_reaches(s, v, u, tau, ReachMode::strict());
        bool listed =
            std::find(pairs.begin(), pairs.end(), std::make_pair(u, v)) != pairs.end();
        CHECK(listed == (fwd && !bwd));
      }
  }
}

TEST_CASE("staleness report is tau minus the last activation") {
  EventStream s = gen_erdos_temporal(12, 60, 5);
  double tau = 45.5;
  NodeBank bank(s.num_nodes());
  std::vector<double> last(static_cast<size_t>(s.num_nodes()),
                           -std::numeric_limits<double>::infinity());
  for (const Event& e : s.events()) {
    if (e.t >= tau) break;
    bank.observe(e.src, e.t);
    bank.observe(e.dst, e.t);
    last[static_cast<size_t>(e.src)] = e.t;
    last[static_cast<size_t>(e.dst)] = e.t;
  }
  auto rows = staleness_report(bank, tau);
  CHECK(static_cast<int>(rows.size()) == bank.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].node == bank.members()[i]);  // slot order
    CHECK(rows[i].staleness == tau - last[static_cast<size_t>(rows[i].node)]);
  }
}

TEST_CASE("static expansion widens a front without inventing nodes") {
  EventStream s = gen_path_graph({1, 2, 3, 4});
  MixingFront tight = temporal_mixing_set(s, 0, 2.5, ReachMode::strict());
  CHECK(tight.size() == 3);  // nodes 0, 1, 2
  Snapshot full = snapshot(s, kInf, false);
  MixingFront one = expand_front_static(tight, full, 1);
  CHECK(one.size() == 4);
  CHECK(one.contains(3));
  CHECK_FALSE(one.contains(4));
  MixingFront two = expand_front_static(tight, full, 2);
  CHECK(two.size() == 5);
  MixingFront zero = expand_front_static(tight, full, 0);
  CHECK(zero.size() == tight.size());
}

TEST_CASE("argument validation") {
  EventStream s = gen_path_graph({1, 2});
  CHECK_THROWS(temporal_mixing_set(s, -1, kInf, ReachMode::strict()));
  CHECK_THROWS(temporal_mixing_set(s, 99, kInf, ReachMode::strict()));
  CHECK_THROWS(ReachMode::batched({1, 0}));
  ReachMode short_map = ReachMode::batched(std::vector<int>{0});
  CHECK_THROWS(temporal_mixing_set(s, 0, kInf, short_map));
}
