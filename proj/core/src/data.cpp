#include "tg/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "tg/rng.hpp"

namespace tg {
namespace {

// directed pair key; ids are dense so this never overflows for sane graphs
long long pair_key(int u, int v, int num_nodes) {
  return static_cast<long long>(u) * num_nodes + v;
}

void fisher_yates(std::vector<int>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.uniform_int(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

SplitResult chronological_split(const EventStream& stream, const SplitSpec& spec) {
  if (!(spec.train > 0.0) || !(spec.val >= 0.0) || !(spec.train + spec.val < 1.0))
    throw std::invalid_argument("split fractions must satisfy 0 < train, 0 <= val, train+val < 1");
  size_t n = stream.num_events();
  SplitResult r;
  r.train_end = static_cast<size_t>(std::floor(spec.train * static_cast<double>(n)));
  r.val_end = static_cast<size_t>(std::floor((spec.train + spec.val) * static_cast<double>(n)));
  if (r.train_end == 0 || r.val_end <= r.train_end || r.val_end >= n)
    throw std::invalid_argument("split leaves an empty segment");
  return r;
}

double surprise_index(const EventStream& stream, const SplitResult& split) {
  if (split.val_end >= stream.num_events())
    throw std::invalid_argument("surprise_index: empty test segment");
  int n = stream.num_nodes();
  std::unordered_set<long long> train_pairs;
  for (size_t i = 0; i < split.train_end; ++i) {
    const Event& e = stream.events()[i];
    train_pairs.insert(pair_key(e.src, e.dst, n));
  }
  std::unordered_set<long long> test_pairs;
  size_t unseen = 0;
  for (size_t i = split.val_end; i < stream.num_events(); ++i) {
    const Event& e = stream.events()[i];
    long long k = pair_key(e.src, e.dst, n);
    if (test_pairs.insert(k).second && !train_pairs.count(k)) ++unseen;
  }
  return static_cast<double>(unseen) / static_cast<double>(test_pairs.size());
}

NegativeSampler::NegativeSampler(const EventStream& stream, std::uint64_t seed)
    : seed_(seed) {
  std::unordered_set<int> dsts;
  for (const Event& e : stream.events()) dsts.insert(e.dst);
  universe_.assign(dsts.begin(), dsts.end());
  std::sort(universe_.begin(), universe_.end());
}

std::vector<int> NegativeSampler::sample(std::size_t query_index, int true_dst, int k) const {
  if (k < 0) throw std::invalid_argument("negative count must be >= 0");
  bool dst_in = std::binary_search(universe_.begin(), universe_.end(), true_dst);
  int avail = static_cast<int>(universe_.size()) - (dst_in ? 1 : 0);
  if (k > avail) throw std::invalid_argument("fewer negative candidates than requested");
  Rng rng(derive_seed(seed_, "neg", query_index));
  std::vector<int> out;
  out.reserve(static_cast<size_t>(k));
  std::unordered_set<int> chosen;
  while (static_cast<int>(out.size()) < k) {
    int cand = universe_[rng.uniform_int(universe_.size())];
    if (cand == true_dst || !chosen.insert(cand).second) continue;
    out.push_back(cand);
  }
  return out;
}

EventStream gen_path_graph(const std::vector<double>& times) {
  if (times.empty()) throw std::invalid_argument("path graph needs at least one edge");
  std::vector<Event> ev;
  ev.reserve(times.size());
  for (size_t i = 0; i < times.size(); ++i)
    ev.push_back({static_cast<int>(i), static_cast<int>(i) + 1, times[i], {}});
  return EventStream::ingest(std::move(ev));
}

EventStream gen_erdos_temporal(int n_nodes, int n_events, std::uint64_t seed) {
  if (n_nodes < 2 || n_events < 1) throw std::invalid_argument("gen_erdos_temporal: degenerate sizes");
  Rng rng(derive_seed(seed, "erdos"));
  std::vector<Event> ev;
  ev.reserve(static_cast<size_t>(n_events));
  for (int i = 0; i < n_events; ++i) {
    int u = static_cast<int>(rng.uniform_int(static_cast<size_t>(n_nodes)));
    int v = static_cast<int>(rng.uniform_int(static_cast<size_t>(n_nodes - 1)));
    if (v >= u) ++v;
    ev.push_back({u, v, static_cast<double>(i + 1), {}});
  }
  return EventStream::ingest(std::move(ev), n_nodes);
}

BipartiteStream gen_bipartite(const BipartiteSpec& spec) {
  if (spec.n_users < 2 || spec.n_items < 2 || spec.n_clusters < 1 ||
      spec.n_items < spec.n_clusters)
    throw std::invalid_argument("gen_bipartite: degenerate sizes");
  if (spec.surprise < 0.0 || spec.surprise > 1.0)
    throw std::invalid_argument("gen_bipartite: surprise must be in [0,1]");
  if (spec.regimes < 1) throw std::invalid_argument("gen_bipartite: regimes must be >= 1");
  const int C = spec.n_clusters;
  const int U = spec.n_users;
  const int n = spec.n_events;

  Rng assign_rng(derive_seed(spec.seed, "bp.assign"));
  Rng user_rng(derive_seed(spec.seed, "bp.user"));
  Rng item_rng(derive_seed(spec.seed, "bp.item"));
  Rng feat_rng(derive_seed(spec.seed, "bp.feat"));
  Rng test_rng(derive_seed(spec.seed, "bp.test"));

  std::vector<int> user_cluster(static_cast<size_t>(U));
  for (int u = 0; u < U; ++u)
    user_cluster[static_cast<size_t>(u)] = static_cast<int>(assign_rng.uniform_int(static_cast<size_t>(C)));
  // round-robin item clusters keep every cluster populated
  std::vector<std::vector<int>> items_by_cluster(static_cast<size_t>(C));
  for (int j = 0; j < spec.n_items; ++j)
    items_by_cluster[static_cast<size_t>(j % C)].push_back(U + j);

  size_t train_end = static_cast<size_t>(std::floor(spec.split.train * n));
  size_t val_end = static_cast<size_t>(std::floor((spec.split.train + spec.split.val) * n));
  if (train_end == 0 || val_end <= train_end || val_end >= static_cast<size_t>(n))
    throw std::invalid_argument("gen_bipartite: split leaves an empty segment");

  // Regime schedule: the interior switches sit at r*n/R so the model sees
  // several shifts with labels during training; the final switch lands
  // exactly at the start of the test segment. At each switch the preferred
  // clusters of every user rotate by a fresh random offset, so the current
  // offset is a global latent that a node silent across the switch cannot
  // recover from its own history.
  const int R = spec.regimes;
  std::vector<size_t> starts = {0};
  for (int r = 1; r + 1 < R; ++r) {
    size_t b = static_cast<size_t>(n) * static_cast<size_t>(r) / static_cast<size_t>(R);
    if (b >= val_end)
      throw std::invalid_argument("gen_bipartite: regime schedule collides with the test segment");
    starts.push_back(b);
  }
  if (R >= 2) starts.push_back(val_end);
  auto regime_at = [&](size_t pos) {
    int r = 0;
    while (r + 1 < static_cast<int>(starts.size()) && pos >= starts[static_cast<size_t>(r) + 1])
      ++r;
    return r;
  };

  // every switch picks an offset distinct from the previous two (capped by
  // C-1), so a cohort that slept through exactly one regime never wakes up
  // to the offset it fell asleep with, yet the sequence stays random enough
  // that the clock alone does not reveal it
  Rng rot_rng(derive_seed(spec.seed, "bp.rot"));
  std::vector<int> rot(starts.size(), 0);
  for (size_t r = 1; r < rot.size(); ++r) {
    size_t w = std::min({r, static_cast<size_t>(C > 1 ? C - 1 : 0), static_cast<size_t>(2)});
    std::vector<int> options;
    for (int o = 0; o < C; ++o) {
      bool used = false;
      for (size_t q = r - w; q < r; ++q) used = used || rot[q] == o;
      if (!used) options.push_back(o);
    }
    if (options.empty()) options.push_back(0);
    rot[r] = options[rot_rng.uniform_int(options.size())];
  }

  // one silent cohort per interior regime; members emit nothing while their
  // regime runs, so their memories straddle at least one rotation when they
  // come back
  int n_stale = std::min(static_cast<int>(std::ceil(spec.stale_user_frac * U)), U - 1);
  std::vector<std::vector<char>> silent(starts.size(), std::vector<char>(static_cast<size_t>(U), 0));
  Rng silent_rng(derive_seed(spec.seed, "bp.silent"));
  std::vector<int> perm(static_cast<size_t>(U));
  for (int u = 0; u < U; ++u) perm[static_cast<size_t>(u)] = u;
  for (size_t r = 1; r + 1 < starts.size(); ++r) {
    fisher_yates(perm, silent_rng);
    for (int i = 0; i < n_stale; ++i) silent[r][static_cast<size_t>(perm[static_cast<size_t>(i)])] = 1;
  }
  std::vector<std::vector<int>> active_users(starts.size());
  for (size_t r = 0; r < starts.size(); ++r)
    for (int u = 0; u < U; ++u)
      if (!silent[r][static_cast<size_t>(u)]) active_users[r].push_back(u);

  // the cohort that slept through the last pre-test regime is the stale
  // cohort the test segment oversamples
  std::vector<int> stale;
  if (starts.size() >= 3)
    for (int u = 0; u < U; ++u)
      if (silent[starts.size() - 2][static_cast<size_t>(u)]) stale.push_back(u);

  // Seasonality: each regime favours one slice of every cluster's item
  // pool, so items drift out of circulation together with the offsets and
  // a stale node's old neighbourhood stops receiving fresh traffic. The
  // cycle length of 3 keeps the test-season slice warm from its previous
  // run while items two regimes stale sit out the test segment.
  const int seasons = static_cast<int>(starts.size()) >= 3 ? 3 : std::max<int>(1, static_cast<int>(starts.size()));
  std::vector<std::vector<std::vector<int>>> season_items(
      static_cast<size_t>(C), std::vector<std::vector<int>>(static_cast<size_t>(seasons)));
  for (int c = 0; c < C; ++c) {
    const auto& pool = items_by_cluster[static_cast<size_t>(c)];
    for (size_t k = 0; k < pool.size(); ++k)
      season_items[static_cast<size_t>(c)][k % static_cast<size_t>(seasons)].push_back(pool[k]);
  }
  auto preferred_pool = [&](int pc, int r, Rng& rng) -> const std::vector<int>& {
    const auto& slice = season_items[static_cast<size_t>(pc)][static_cast<size_t>(r % seasons)];
    if (slice.empty() || rng.uniform() >= spec.season_strength)
      return items_by_cluster[static_cast<size_t>(pc)];
    return slice;
  };

  auto pick_item = [&](int pc, int r, Rng& rng) {
    if (rng.uniform() < spec.pref_strength) {
      const auto& pool = preferred_pool(pc, r, rng);
      return pool[rng.uniform_int(pool.size())];
    }
    return U + static_cast<int>(rng.uniform_int(static_cast<size_t>(spec.n_items)));
  };

  std::vector<Event> ev;
  ev.reserve(static_cast<size_t>(n));
  std::unordered_set<long long> train_pairs;
  std::vector<std::vector<int>> train_items(static_cast<size_t>(U));
  int total_nodes = U + spec.n_items;

  for (size_t p = 0; p < val_end; ++p) {
    int r = regime_at(p);
    const auto& pool = active_users[static_cast<size_t>(r)];
    int u = pool[user_rng.uniform_int(pool.size())];
    int pc = (user_cluster[static_cast<size_t>(u)] + rot[static_cast<size_t>(r)]) % C;
    int item = pick_item(pc, r, item_rng);
    ev.push_back({u, item, static_cast<double>(p + 1), {}});
    if (p < train_end) {
      if (train_pairs.insert(pair_key(u, item, total_nodes)).second)
        train_items[static_cast<size_t>(u)].push_back(item);
    }
  }

  // test segment: greedily balance distinct unseen vs seen pairs so the
  // realized surprise tracks the target
  std::unordered_set<long long> test_pairs;
  std::vector<int> fresh;
  {
    std::vector<char> in_stale(static_cast<size_t>(U), 0);
    for (int u : stale) in_stale[static_cast<size_t>(u)] = 1;
    for (int u = 0; u < U; ++u)
      if (!in_stale[static_cast<size_t>(u)]) fresh.push_back(u);
  }
  const int rot_regime = static_cast<int>(rot.size()) - 1;
  const int rot_test = rot.back();
  size_t n_new = 0, n_old = 0;
  for (size_t p = val_end; p < static_cast<size_t>(n); ++p) {
    int u;
    if (test_rng.uniform() < spec.stale_query_frac && !stale.empty()) {
      u = stale[test_rng.uniform_int(stale.size())];
    } else {
      u = fresh[test_rng.uniform_int(fresh.size())];
    }
    int pc = (user_cluster[static_cast<size_t>(u)] + rot_test) % C;
    bool want_new =
        static_cast<double>(n_new) < spec.surprise * static_cast<double>(n_new + n_old + 1);

    int item = -1;
    if (want_new) {
      const auto& pool = preferred_pool(pc, rot_regime, test_rng);
      for (int tries = 0; tries < 64 && item < 0; ++tries) {
        int cand = pool[test_rng.uniform_int(pool.size())];
        long long k = pair_key(u, cand, total_nodes);
        if (!train_pairs.count(k) && !test_pairs.count(k)) item = cand;
      }
      if (item < 0) {
        for (int cand : items_by_cluster[static_cast<size_t>(pc)]) {
          long long k = pair_key(u, cand, total_nodes);
          if (!train_pairs.count(k) && !test_pairs.count(k)) { item = cand; break; }
        }
      }
      if (item < 0) {
        for (int j = 0; j < spec.n_items && item < 0; ++j) {
          int cand = U + j;
          long long k = pair_key(u, cand, total_nodes);
          if (!train_pairs.count(k) && !test_pairs.count(k)) item = cand;
        }
      }
    }
    if (item < 0) {
      // repeat path: revisit any previously trained item; deliberately
      // blind to the current offset so repeats do not leak it
      const auto& hist = train_items[static_cast<size_t>(u)];
      if (!hist.empty()) {
        item = hist[test_rng.uniform_int(hist.size())];
      } else {
        item = pick_item(pc, rot_regime, test_rng);
      }
    }
    long long k = pair_key(u, item, total_nodes);
    if (test_pairs.insert(k).second) {
      if (train_pairs.count(k)) ++n_old; else ++n_new;
    }
    ev.push_back({u, item, static_cast<double>(p + 1), {}});
  }

  BipartiteStream out;
  out.stream = EventStream::ingest(std::move(ev), total_nodes);
  out.split = {train_end, val_end};
  out.stale_users = std::move(stale);
  out.realized_surprise =
      static_cast<double>(n_new) / static_cast<double>(std::max<size_t>(1, n_new + n_old));

  Tensor feats(total_nodes, C);
  for (int v = 0; v < total_nodes; ++v) {
    int c = v < U ? user_cluster[static_cast<size_t>(v)] : (v - U) % C;
    for (int j = 0; j < C; ++j)
      feats.at(v, j) = (j == c ? 1.0 : 0.0) + spec.feature_noise * feat_rng.normal();
  }
  out.stream.set_node_feats(std::move(feats));
  return out;
}

StaleStream gen_stale(const StaleSpec& spec) {
  if (spec.n_nodes < 2 * spec.n_clusters || spec.n_clusters < 1)
    throw std::invalid_argument("gen_stale: each cluster needs at least two nodes");
  if (spec.window < 0.0) throw std::invalid_argument("gen_stale: negative window");
  const int n = spec.n_events;
  const int C = spec.n_clusters;

  std::vector<std::vector<int>> cluster_members(static_cast<size_t>(C));
  auto cluster_of = [&](int v) { return v % C; };
  for (int v = 0; v < spec.n_nodes; ++v)
    cluster_members[static_cast<size_t>(cluster_of(v))].push_back(v);

  Rng bg_rng(derive_seed(spec.seed, "st.bg"));
  std::vector<Event> ev;
  ev.reserve(static_cast<size_t>(n));
  for (int p = 0; p < n; ++p) {
    int u = static_cast<int>(bg_rng.uniform_int(static_cast<size_t>(spec.n_nodes)));
    const auto& mem = cluster_members[static_cast<size_t>(cluster_of(u))];
    int v = u;
    while (v == u) v = mem[bg_rng.uniform_int(mem.size())];
    ev.push_back({u, v, static_cast<double>(p + 1), {}});
  }

  double train_end_time = std::floor(spec.split.train * n);
  double window_end = std::floor((spec.split.train + spec.split.val) * n) + 1.0;
  double window_start = window_end - spec.window;

  StaleStream out;
  out.window_start = window_start;
  out.window_end = window_end;

  if (spec.window > 0.0) {
    if (window_start < 2.0) throw std::invalid_argument("gen_stale: window longer than the prefix");
    Rng fix_rng(derive_seed(spec.seed, "st.fix"));
    std::vector<int> shuffled(static_cast<size_t>(spec.n_nodes));
    for (int v = 0; v < spec.n_nodes; ++v) shuffled[static_cast<size_t>(v)] = v;
    fisher_yates(shuffled, fix_rng);
    int n_stale = std::max(1, static_cast<int>(std::ceil(spec.stale_frac * spec.n_nodes)));
    std::vector<char> is_stale(static_cast<size_t>(spec.n_nodes), 0);
    std::vector<int> stale;
    std::vector<std::vector<int>> active_by_cluster(static_cast<size_t>(C));
    for (int i = 0; i < spec.n_nodes; ++i) {
      int v = shuffled[static_cast<size_t>(i)];
      int c = cluster_of(v);
      // keep at least two active nodes per cluster so replacements exist
      bool can_stale = static_cast<int>(stale.size()) < n_stale;
      int active_left = static_cast<int>(cluster_members[static_cast<size_t>(c)].size());
      for (int w : stale)
        if (cluster_of(w) == c) --active_left;
      if (can_stale && active_left > 2) {
        is_stale[static_cast<size_t>(v)] = 1;
        stale.push_back(v);
      }
    }
    if (stale.empty()) throw std::invalid_argument("gen_stale: clusters too small for a stale cohort");
    for (int v = 0; v < spec.n_nodes; ++v)
      if (!is_stale[static_cast<size_t>(v)])
        active_by_cluster[static_cast<size_t>(cluster_of(v))].push_back(v);
    std::sort(stale.begin(), stale.end());

    auto active_peer = [&](int cluster, int avoid) {
      const auto& pool = active_by_cluster[static_cast<size_t>(cluster)];
      int w = avoid;
      while (w == avoid) w = pool[fix_rng.uniform_int(pool.size())];
      return w;
    };

    // silence the cohort strictly inside the window
    for (Event& e : ev) {
      if (e.t <= window_start || e.t >= window_end) continue;
      if (is_stale[static_cast<size_t>(e.src)])
        e.src = active_peer(cluster_of(e.src), e.dst);
      if (is_stale[static_cast<size_t>(e.dst)])
        e.dst = active_peer(cluster_of(e.dst), e.src);
    }
    // reconnect the cohort in the test segment
    for (Event& e : ev) {
      if (e.t < window_end) continue;
      if (fix_rng.uniform() < 0.5) {
        int s = stale[fix_rng.uniform_int(stale.size())];
        e.src = s;
        e.dst = active_peer(cluster_of(s), s);
      }
    }
    // pin each stale node's last pre-test event to the window start
    for (int s : stale)
      ev.push_back({s, active_peer(cluster_of(s), s), window_start, {}});
    out.stale_nodes = std::move(stale);
  }

  out.stream = EventStream::ingest(std::move(ev), spec.n_nodes);
  size_t train_end = 0, val_end = 0;
  for (const Event& e : out.stream.events()) {
    if (e.t <= train_end_time) ++train_end;
    if (e.t < window_end) ++val_end;
  }
  if (train_end == 0 || val_end <= train_end || val_end >= out.stream.num_events())
    throw std::invalid_argument("gen_stale: split leaves an empty segment");
  out.split = {train_end, val_end};
  return out;
}

}  // namespace tg
