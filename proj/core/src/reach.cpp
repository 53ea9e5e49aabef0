#include "tg/reach.hpp"

#include <limits>
#include <queue>
#include <stdexcept>

namespace tg {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

ReachMode ReachMode::batched(std::vector<int> b) {
  for (size_t i = 1; i < b.size(); ++i)
    if (b[i] < b[i - 1]) throw std::invalid_argument("batch ids must be nondecreasing");
  ReachMode m;
  m.variant = Variant::Batched;
  m.batch_of_event = std::move(b);
  return m;
}

ReachMode ReachMode::batched(const EventStream& s, size_t batch_size) {
  std::vector<int> b(s.num_events());
  for (const TemporalBatch& tb : batchify(s, batch_size))
    for (size_t i = tb.begin; i < tb.end; ++i) b[i] = tb.id;
  return batched(std::move(b));
}

ReachMode ReachMode::dynamic_from(double t0) {
  ReachMode m;
  m.variant = Variant::DynamicFrom;
  m.from_time = t0;
  return m;
}

namespace {

struct Pred {
  int from = -1;
  size_t event_index = 0;
};

// Shared sweep. When preds is non-null, records the event that first
// set each node so a witness walk can be reconstructed.
MixingFront sweep(const EventStream& s, int source, double tau, const ReachMode& mode,
                  std::unordered_map<int, Pred>* preds) {
  if (source < 0 || source >= s.num_nodes())
    throw std::invalid_argument("temporal_mixing_set: source out of range");
  if (mode.variant == ReachMode::Variant::Batched &&
      mode.batch_of_event.size() != s.num_events())
    throw std::invalid_argument("temporal_mixing_set: batch map size mismatch");

  MixingFront front;
  front.source = source;
  front.earliest[source] = kNegInf;

  const bool batched = mode.variant == ReachMode::Variant::Batched;
  const bool dynamic = mode.variant == ReachMode::Variant::DynamicFrom;

  // Batched mode gates eligibility on the front as of the batch start.
  std::unordered_map<int, double> pre_front = front.earliest;
  int current_batch = batched && !mode.batch_of_event.empty() ? mode.batch_of_event[0] : 0;

  auto eligible = [&](int node, double t, int batch) {
    const auto& gate = batched ? pre_front : front.earliest;
    auto it = gate.find(node);
    if (it == gate.end()) return false;
    if (batched) return it->second < static_cast<double>(batch);
    if (dynamic && node == source && it->second == kNegInf) return t >= mode.from_time;
    return it->second < t;
  };

  const auto& events = s.events();
  for (size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.t >= tau) break;
    int batch = batched ? mode.batch_of_event[i] : 0;
    if (batched && batch != current_batch) {
      pre_front = front.earliest;
      current_batch = batch;
    }
    double mix_value = batched ? static_cast<double>(batch) : e.t;
    bool a_ok = eligible(e.src, e.t, batch);
    bool b_ok = eligible(e.dst, e.t, batch);
    if (a_ok && front.earliest.find(e.dst) == front.earliest.end()) {
      front.earliest[e.dst] = mix_value;
      if (preds) (*preds)[e.dst] = {e.src, i};
    }
    if (b_ok && front.earliest.find(e.src) == front.earliest.end()) {
      front.earliest[e.src] = mix_value;
      if (preds) (*preds)[e.src] = {e.dst, i};
    }
  }
  return front;
}

}  // namespace

MixingFront temporal_mixing_set(const EventStream& s, int source, double tau,
                                const ReachMode& mode) {
  return sweep(s, source, tau, mode, nullptr);
}

bool under_reaches(const EventStream& s, int source, int target, double tau,
                   const ReachMode& mode) {
  return !temporal_mixing_set(s, source, tau, mode).contains(target);
}

std::optional<MixingPath> find_mixing_path(const EventStream& s, int source, int target,
                                           double tau, const ReachMode& mode) {
  std::unordered_map<int, Pred> preds;
  MixingFront front = sweep(s, source, tau, mode, &preds);
  if (!front.contains(target)) return std::nullopt;
  MixingPath path;
  path.source = source;
  path.target = target;
  int cur = target;
  while (cur != source) {
    const Pred& p = preds.at(cur);
    const Event& e = s.events()[p.event_index];
    path.hops.push_back({p.from, cur, e.t, p.event_index});
    cur = p.from;
  }
  std::reverse(path.hops.begin(), path.hops.end());
  return path;
}

bool static_under_reaches(const Snapshot& view, int u, int v, int k) {
  if (u == v) return k < 0;
  int n = view.stream->num_nodes();
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (size_t i = 0; i < view.end; ++i) {
    const Event& e = view.event(i);
    adj[static_cast<size_t>(e.src)].push_back(e.dst);
    adj[static_cast<size_t>(e.dst)].push_back(e.src);
  }
  std::vector<int> dist(static_cast<size_t>(n), -1);
  std::queue<int> q;
  dist[static_cast<size_t>(u)] = 0;
  q.push(u);
  while (!q.empty()) {
    int x = q.front();
    q.pop();
    if (x == v) return dist[static_cast<size_t>(v)] > k;
    for (int y : adj[static_cast<size_t>(x)])
      if (dist[static_cast<size_t>(y)] < 0) {
        dist[static_cast<size_t>(y)] = dist[static_cast<size_t>(x)] + 1;
        q.push(y);
      }
  }
  return true;  // unreachable
}

std::vector<std::pair<int, int>> asymmetry_pairs(const EventStream& s, double tau,
                                                 const ReachMode& mode) {
  int n = s.num_nodes();
  std::vector<MixingFront> fronts;
  fronts.reserve(static_cast<size_t>(n));
  for (int u = 0; u < n; ++u) fronts.push_back(temporal_mixing_set(s, u, tau, mode));
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && fronts[static_cast<size_t>(u)].contains(v) &&
          !fronts[static_cast<size_t>(v)].contains(u))
        out.emplace_back(u, v);
  return out;
}

std::vector<StalenessEntry> staleness_report(const NodeBank& bank, double tau) {
  std::vector<StalenessEntry> out;
  out.reserve(static_cast<size_t>(bank.size()));
  for (int node : bank.members()) out.push_back({node, tau - bank.last_activation(node)});
  return out;
}

MixingFront expand_front_static(const MixingFront& front, const Snapshot& view, int hops) {
  MixingFront out = front;
  if (hops <= 0) return out;
  int n = view.stream->num_nodes();
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (size_t i = 0; i < view.end; ++i) {
    const Event& e = view.event(i);
    adj[static_cast<size_t>(e.src)].push_back(e.dst);
    adj[static_cast<size_t>(e.dst)].push_back(e.src);
  }
  std::queue<std::pair<int, int>> q;  // node, remaining hops
  for (const auto& [node, value] : front.earliest) q.push({node, hops});
  while (!q.empty()) {
    auto [x, left] = q.front();
    q.pop();
    if (left == 0) continue;
    for (int y : adj[static_cast<size_t>(x)]) {
      if (out.earliest.find(y) != out.earliest.end()) continue;
      out.earliest[y] = out.earliest.at(x);
      q.push({y, left - 1});
    }
  }
  return out;
}

}  // namespace tg
