#include "tg/ctdg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace tg {

EventStream EventStream::ingest(std::vector<Event> records, int num_nodes_hint) {
  EventStream s;
  size_t width = records.empty() ? 0 : records[0].feat.size();
  int max_id = num_nodes_hint - 1;
  for (const Event& e : records) {
    if (e.src < 0 || e.dst < 0) throw std::invalid_argument("ingest: negative node id");
    if (e.t < 0.0 || !std::isfinite(e.t)) throw std::invalid_argument("ingest: bad timestamp");
    if (e.feat.size() != width) throw std::invalid_argument("ingest: inconsistent feature widths");
    max_id = std::max({max_id, e.src, e.dst});
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  for (size_t i = 1; i < records.size(); ++i)
    if (records[i].t == records[i - 1].t) {
      s.simple_timing_ = false;
      break;
    }
  s.events_ = std::move(records);
  s.num_nodes_ = max_id + 1;
  s.efeat_width_ = static_cast<int>(width);
  s.node_feats_ = Tensor(s.num_nodes_, 1);
  return s;
}

void EventStream::set_node_feats(Tensor x) {
  if (x.rows != num_nodes_) throw std::invalid_argument("node feature rows != num_nodes");
  if (x.cols < 1) throw std::invalid_argument("node feature width must be >= 1");
  node_feats_ = std::move(x);
  explicit_feats_ = true;
}

Snapshot snapshot(const EventStream& s, double tau, bool inclusive) {
  Snapshot v;
  v.stream = &s;
  v.tau = tau;
  v.inclusive = inclusive;
  const auto& ev = s.events();
  auto cmp = [](const Event& e, double t) { return e.t < t; };
  if (inclusive) {
    // first index with t > tau
    size_t lo = 0, hi = ev.size();
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (ev[mid].t <= tau) lo = mid + 1; else hi = mid;
    }
    v.end = lo;
  } else {
    v.end = static_cast<size_t>(
        std::lower_bound(ev.begin(), ev.end(), tau, cmp) - ev.begin());
  }
  return v;
}

std::vector<TemporalBatch> batchify(const EventStream& s, size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batchify: batch_size must be positive");
  std::vector<TemporalBatch> out;
  size_t n = s.num_events();
  int id = 0;
  for (size_t begin = 0; begin < n; begin += batch_size) {
    TemporalBatch b;
    b.id = id++;
    b.begin = begin;
    b.end = std::min(n, begin + batch_size);
    out.push_back(b);
  }
  return out;
}

void NodeBank::observe(int u, double t) {
  auto i = static_cast<size_t>(u);
  if (!observed_[i]) {
    observed_[i] = 1;
    slot_[i] = static_cast<int>(members_.size());
    members_.push_back(u);
  }
  last_activation_[i] = t;
}

BankUpdate node_bank_update(NodeBank& bank, const EventStream& s, const TemporalBatch& b) {
  BankUpdate u;
  std::unordered_set<int> seen_in_batch;
  std::unordered_set<int> seen_before;
  for (size_t i = b.begin; i < b.end; ++i) {
    const Event& e = s.events()[i];
    for (int node : {e.src, e.dst}) {
      if (!seen_in_batch.insert(node).second) continue;
      if (bank.observed(node))
        seen_before.insert(node);
      else
        u.new_ids.push_back(node);
    }
  }
  u.seen_ids.assign(seen_before.begin(), seen_before.end());
  std::sort(u.seen_ids.begin(), u.seen_ids.end());
  for (size_t i = b.begin; i < b.end; ++i) {
    const Event& e = s.events()[i];
    bank.observe(e.src, e.t);
    bank.observe(e.dst, e.t);
  }
  return u;
}

std::vector<NeighborEvent> temporal_neighbourhood(const Snapshot& view, int u,
                                                  size_t max_neighbors) {
  std::vector<NeighborEvent> out;
  if (max_neighbors == 0) return out;
  for (size_t i = view.end; i-- > 0;) {
    const Event& e = view.event(i);
    int other;
    if (e.src == u) other = e.dst;
    else if (e.dst == u) other = e.src;
    else continue;
    out.push_back({other, e.t, i});
    if (out.size() == max_neighbors) break;
  }
  return out;
}

}  // namespace tg
