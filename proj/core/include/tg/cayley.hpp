#pragma once

#include <cstdint>
#include <vector>

#include "tg/nn.hpp"

namespace tg {

// Element of SL(2, Z_n), entries stored as residues in [0, n).
struct ZnMatrix {
  uint32_t a = 1, b = 0, c = 0, d = 1;
};

// |SL(2, Z_n)| = n^3 * prod_{p | n} (1 - 1/p^2)
uint64_t sl2_order(uint32_t n);

// Smallest n whose group order reaches `capacity`.
uint32_t smallest_n_for(uint64_t capacity);

// Cayley graph on generators [[1,1],[0,1]], [[1,0],[1,1]] and their
// inverses. Vertex 0 is the identity, vertex ids follow BFS discovery
// order, parallel edges and self-loops are dropped. 4-regular for
// n >= 3; connected by construction.
struct CayleyGraph {
  uint32_t n = 0;
  std::vector<ZnMatrix> vertex;  // id -> group element
  Adjacency adj;

  size_t num_vertices() const { return vertex.size(); }
  size_t num_edges() const;
};

CayleyGraph build_cayley(uint32_t n);

// Second-smallest eigenvalue of the symmetric normalized Laplacian.
// Dense eigensolve; refuses graphs above `cap` vertices.
double spectral_gap(const Adjacency& adj, size_t cap = 512);
double spectral_gap(const CayleyGraph& g, size_t cap = 512);

enum class AssignMode { Induced, Relay };

// Bank slot i occupies Cayley vertex i. Induced mode restricts the
// graph to occupied vertices; relay mode keeps unoccupied vertices as
// feature-less pass-through rows.
struct ExpanderAssignment {
  AssignMode mode = AssignMode::Induced;
  int bank_capacity = 0;  // slots covered by this assignment
  int num_working = 0;    // rows the mixer operates on
  Adjacency adj;          // working adjacency (num_working nodes)
};

ExpanderAssignment assign_vertices(const CayleyGraph& g, int bank_capacity, AssignMode mode);

}  // namespace tg
