#pragma once

#include <Eigen/Dense>
#include <optional>
#include <set>
#include <utility>
#include <vector>

// Undirected-graph machinery: measurement graphs, chordality testing,
// chordal embeddings, maximal cliques and clique trees.

namespace treeloc {

using VertexPair = std::pair<int, int>;  // stored with first < second

struct Graph {
  int n_vertices = 0;
  std::set<VertexPair> edges;

  Graph() = default;
  explicit Graph(int n) : n_vertices(n) {}

  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;
  std::vector<int> neighbors(int v) const;
  bool connected() const;
};

struct ChordalEmbedding {
  Graph base;
  std::set<VertexPair> fill_edges;
  std::vector<int> peo;  // perfect elimination ordering of the embedded graph

  Graph embedded() const;
};

struct Clique {
  std::vector<int> members;  // sorted ascending
};

struct CliqueTree {
  std::vector<Clique> cliques;
  std::vector<int> parent;  // -1 for the root
  int root = 0;
  std::vector<std::vector<int>> children;
  std::vector<std::vector<int>> separators;  // S_k = C_k ∩ C_parent(k); empty at root
  std::vector<std::vector<int>> residuals;   // R_k = C_k \ S_k

  int size() const { return static_cast<int>(cliques.size()); }
  int height() const;  // edges on the longest root-leaf path
  std::vector<int> postorder() const;
};

// Edge (i,j) present iff ||p_i - p_j|| < r_c; second output lists, per
// sensor, the anchors within range.
std::pair<Graph, std::vector<std::vector<int>>> build_measurement_graph(
    const Eigen::MatrixXd& sensor_positions, const Eigen::MatrixXd& anchor_positions,
    double r_c);

// Maximum-cardinality search plus PEO verification. Returns the PEO when
// the graph is chordal.
std::optional<std::vector<int>> is_chordal(const Graph& g);

// Greedy minimum-degree elimination. Throws if g is disconnected.
ChordalEmbedding chordal_embed(const Graph& g);

// Maximal cliques of a chordal graph from its PEO. Throws on an invalid PEO.
std::vector<Clique> enumerate_cliques(const ChordalEmbedding& e);

// Maximum-weight spanning tree over |C_i ∩ C_j| (Prim, lowest-index
// tie-break). root_clique = -1 selects the largest clique.
CliqueTree build_clique_tree(const std::vector<Clique>& cliques, int root_clique = -1);

// Clique-intersection property check over all pairs.
bool verify_cip(const CliqueTree& t);

}  // namespace treeloc
