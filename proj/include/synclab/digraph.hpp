#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synclab/errors.hpp"

namespace synclab {

// Directed influence graph. An arc (j, i) means "j influences i": theta_j
// appears in oscillator i's coupling sum, and reachability (spanning tree,
// layers) follows that direction. Vertices are 0-based in memory; the JSON
// interchange format uses 1-based ids.
struct Digraph {
  int n = 0;
  std::vector<std::pair<int, int>> arcs;  // (j, i), unique, no self-loops

  // in_neighbors()[i] = sorted j with (j, i) in arcs (the set N_i)
  std::vector<std::vector<int>> in_neighbors() const;
  std::vector<std::vector<int>> out_neighbors() const;

  void validate() const;  // throws InvalidConfig on range/self-loop/duplicate
};

// JSON form: { "n": int, "arcs": [[j, i], ...] } with 1-based vertex ids.
Digraph digraph_from_json(const nlohmann::json& j);
nlohmann::json digraph_to_json(const Digraph& g);

// True iff some vertex reaches every other vertex along arc direction.
bool has_spanning_tree(const Digraph& g);

// Maximal strongly connected components; each sorted ascending, the list
// ordered by smallest member. A lone vertex is its own component.
std::vector<std::vector<int>> strongly_connected_components(const Digraph& g);

// Components with no incoming arc from outside, i.e. the sources of the
// condensation. Never empty.
std::vector<std::vector<int>> maximum_nodes(const Digraph& g);

// Layered peeling: layer 0 holds the maximum nodes of g, layer 1 the maximum
// nodes of what remains, and so on; influence only flows from lower layers to
// higher ones. If one peel yields several maximum nodes they are merged into
// a single layer; the separate pieces stay available in `sublayers`.
struct NodeDecomposition {
  std::vector<std::vector<int>> layers;                  // ascending vertex ids
  std::vector<std::vector<std::vector<int>>> sublayers;  // unmerged maximum nodes per layer
  std::vector<int> layer_of;                             // vertex -> layer index

  int depth() const { return static_cast<int>(layers.size()) - 1; }  // d
  int layer_size(int k) const { return static_cast<int>(layers[k].size()); }
  std::vector<int> prefix_sizes() const;  // S_k = |layer 0| + ... + |layer k|
};

// Throws NoSpanningTree by default, which is what makes layer 0 unique.
// Pass require_spanning_tree = false to peel an arbitrary digraph.
NodeDecomposition node_decomposition(const Digraph& g, bool require_spanning_tree = true);

}  // namespace synclab
