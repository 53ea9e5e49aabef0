#include "tg/cayley.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "tg/eig.hpp"

namespace tg {

uint64_t sl2_order(uint32_t n) {
  if (n == 0) throw std::invalid_argument("sl2_order: n must be positive");
  uint64_t order = static_cast<uint64_t>(n) * n * n;
  uint32_t m = n;
  for (uint32_t p = 2; p * p <= m; ++p) {
    if (m % p != 0) continue;
    while (m % p == 0) m /= p;
    order = order / (static_cast<uint64_t>(p) * p) * (static_cast<uint64_t>(p) * p - 1);
  }
  if (m > 1) order = order / (static_cast<uint64_t>(m) * m) * (static_cast<uint64_t>(m) * m - 1);
  return order;
}

uint32_t smallest_n_for(uint64_t capacity) {
  if (capacity == 0) throw std::invalid_argument("smallest_n_for: capacity must be positive");
  for (uint32_t n = 1;; ++n) {
    if (sl2_order(n) >= capacity) return n;
    if (n > 100000) throw std::invalid_argument("smallest_n_for: capacity too large");
  }
}

namespace {

uint64_t key_of(const ZnMatrix& m) {
  return (static_cast<uint64_t>(m.a)) | (static_cast<uint64_t>(m.b) << 16) |
         (static_cast<uint64_t>(m.c) << 32) | (static_cast<uint64_t>(m.d) << 48);
}

ZnMatrix mul(const ZnMatrix& x, const ZnMatrix& y, uint32_t n) {
  auto m = [n](uint64_t v) { return static_cast<uint32_t>(v % n); };
  ZnMatrix r;
  r.a = m(static_cast<uint64_t>(x.a) * y.a + static_cast<uint64_t>(x.b) * y.c);
  r.b = m(static_cast<uint64_t>(x.a) * y.b + static_cast<uint64_t>(x.b) * y.d);
  r.c = m(static_cast<uint64_t>(x.c) * y.a + static_cast<uint64_t>(x.d) * y.c);
  r.d = m(static_cast<uint64_t>(x.c) * y.b + static_cast<uint64_t>(x.d) * y.d);
  return r;
}

}  // namespace

size_t CayleyGraph::num_edges() const {
  size_t deg_sum = 0;
  for (const auto& nb : adj) deg_sum += nb.size();
  return deg_sum / 2;
}

CayleyGraph build_cayley(uint32_t n) {
  if (n == 0) throw std::invalid_argument("build_cayley: n must be positive");
  if (n >= (1u << 16)) throw std::invalid_argument("build_cayley: n too large");
  CayleyGraph g;
  g.n = n;

  auto r = [n](uint32_t v) { return v % n; };
  ZnMatrix id{r(1), 0, 0, r(1)};
  std::vector<ZnMatrix> gens = {
      {r(1), r(1), 0, r(1)},      // upper shear
      {r(1), 0, r(1), r(1)},      // lower shear
      {r(1), r(n - 1), 0, r(1)},  // inverses
      {r(1), 0, r(n - 1), r(1)},
  };

  std::unordered_map<uint64_t, int> index;
  std::queue<int> todo;
  index.emplace(key_of(id), 0);
  g.vertex.push_back(id);
  todo.push(0);
  while (!todo.empty()) {
    int v = todo.front();
    todo.pop();
    ZnMatrix mv = g.vertex[static_cast<size_t>(v)];
    for (const ZnMatrix& gen : gens) {
      ZnMatrix w = mul(mv, gen, n);
      uint64_t k = key_of(w);
      if (index.find(k) == index.end()) {
        int id_new = static_cast<int>(g.vertex.size());
        index.emplace(k, id_new);
        g.vertex.push_back(w);
        todo.push(id_new);
      }
    }
  }

  size_t count = g.vertex.size();
  g.adj.assign(count, {});
  for (size_t v = 0; v < count; ++v) {
    std::vector<int> nb;
    for (const ZnMatrix& gen : gens) {
      int w = index.at(key_of(mul(g.vertex[v], gen, n)));
      if (w != static_cast<int>(v)) nb.push_back(w);
    }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    g.adj[v] = std::move(nb);
  }
  return g;
}

double spectral_gap(const Adjacency& adj, size_t cap) {
  size_t n = adj.size();
  if (n < 2) throw std::invalid_argument("spectral_gap: graph too small");
  if (n > cap) throw std::invalid_argument("spectral_gap: vertex count exceeds cap");
  Tensor lap(static_cast<int>(n), static_cast<int>(n));
  std::vector<double> dinv(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    if (!adj[i].empty()) dinv[i] = 1.0 / std::sqrt(static_cast<double>(adj[i].size()));
  for (size_t i = 0; i < n; ++i) {
    lap.at(static_cast<int>(i), static_cast<int>(i)) = adj[i].empty() ? 0.0 : 1.0;
    for (int j : adj[i])
      lap.at(static_cast<int>(i), j) -= dinv[i] * dinv[static_cast<size_t>(j)];
  }
  auto eigs = eig_sym(std::move(lap));
  double lambda1 = eigs[1];
  if (lambda1 < 1e-9)
    throw std::invalid_argument("spectral_gap: graph is disconnected");
  return lambda1;
}

double spectral_gap(const CayleyGraph& g, size_t cap) { return spectral_gap(g.adj, cap); }

ExpanderAssignment assign_vertices(const CayleyGraph& g, int bank_capacity, AssignMode mode) {
  if (bank_capacity <= 0) throw std::invalid_argument("assign_vertices: empty bank");
  if (static_cast<size_t>(bank_capacity) > g.num_vertices())
    throw std::invalid_argument("assign_vertices: graph too small for bank");
  ExpanderAssignment a;
  a.mode = mode;
  a.bank_capacity = bank_capacity;
  if (mode == AssignMode::Induced) {
    a.num_working = bank_capacity;
    a.adj.assign(static_cast<size_t>(bank_capacity), {});
    for (int v = 0; v < bank_capacity; ++v)
      for (int w : g.adj[static_cast<size_t>(v)])
        if (w < bank_capacity) a.adj[static_cast<size_t>(v)].push_back(w);
  } else {
    a.num_working = static_cast<int>(g.num_vertices());
    a.adj = g.adj;
  }
  return a;
}

}  // namespace tg
