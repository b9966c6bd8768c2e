#include "treeloc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace treeloc {

void Graph::add_edge(int i, int j) {
  if (i == j) throw std::invalid_argument("Graph: self-loop");
  if (i < 0 || j < 0 || i >= n_vertices || j >= n_vertices)
    throw std::invalid_argument("Graph: vertex out of range");
  edges.insert({std::min(i, j), std::max(i, j)});
}

bool Graph::has_edge(int i, int j) const {
  return edges.count({std::min(i, j), std::max(i, j)}) > 0;
}

std::vector<int> Graph::neighbors(int v) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges) {
    if (a == v) out.push_back(b);
    else if (b == v) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Graph::connected() const {
  if (n_vertices == 0) return true;
  std::vector<std::vector<int>> adj(n_vertices);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n_vertices, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        q.push(w);
      }
  }
  return count == n_vertices;
}

Graph ChordalEmbedding::embedded() const {
  Graph g = base;
  for (const auto& [a, b] : fill_edges) g.add_edge(a, b);
  return g;
}

int CliqueTree::height() const {
  int h = 0;
  for (int k = 0; k < size(); ++k) {
    int depth = 0;
    for (int v = k; parent[v] >= 0; v = parent[v]) ++depth;
    h = std::max(h, depth);
  }
  return h;
}

std::vector<int> CliqueTree::postorder() const {
  std::vector<int> order;
  order.reserve(size());
  // iterative DFS, children in ascending order
  std::vector<std::pair<int, size_t>> stack{{root, 0}};
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < children[node].size()) {
      int child = children[node][idx++];
      stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

std::pair<Graph, std::vector<std::vector<int>>> build_measurement_graph(
    const Eigen::MatrixXd& sensor_positions, const Eigen::MatrixXd& anchor_positions,
    double r_c) {
  if (r_c < 0) throw std::invalid_argument("build_measurement_graph: negative r_c");
  if (!sensor_positions.allFinite() || !anchor_positions.allFinite())
    throw std::invalid_argument("build_measurement_graph: non-finite positions");
  const int n = static_cast<int>(sensor_positions.rows());
  const int m = static_cast<int>(anchor_positions.rows());
  Graph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double d = (sensor_positions.row(i) - sensor_positions.row(j)).norm();
      if (d == 0.0 && r_c == 0.0)
        throw std::invalid_argument(
            "build_measurement_graph: coincident sensors with r_c = 0");
      if (d < r_c) g.add_edge(i, j);
    }
  std::vector<std::vector<int>> anchor_adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if ((sensor_positions.row(i) - anchor_positions.row(j)).norm() < r_c)
        anchor_adj[i].push_back(j);
  return {std::move(g), std::move(anchor_adj)};
}

namespace {

// Validates that `order` is a perfect elimination ordering of g: each
// vertex's later neighbors form a clique.
bool check_peo(const Graph& g, const std::vector<int>& order) {
  const int n = g.n_vertices;
  if (static_cast<int>(order.size()) != n) return false;
  std::vector<int> pos(n, -1);
  for (int t = 0; t < n; ++t) {
    if (order[t] < 0 || order[t] >= n || pos[order[t]] != -1) return false;
    pos[order[t]] = t;
  }
  for (int t = 0; t < n; ++t) {
    int v = order[t];
    std::vector<int> later;
    for (int w : g.neighbors(v))
      if (pos[w] > t) later.push_back(w);
    if (later.empty()) continue;
    // the earliest later neighbor must be adjacent to all the others
    int u = *std::min_element(later.begin(), later.end(),
                              [&](int a, int b) { return pos[a] < pos[b]; });
    for (int w : later)
      if (w != u && !g.has_edge(u, w)) return false;
  }
  return true;
}

}  // namespace

std::optional<std::vector<int>> is_chordal(const Graph& g) {
  const int n = g.n_vertices;
  if (n == 0) return std::vector<int>{};
  // maximum-cardinality search; visit order reversed is a candidate PEO
  std::vector<int> weight(n, 0);
  std::vector<char> visited(n, 0);
  std::vector<int> visit_order;
  visit_order.reserve(n);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v)
      if (!visited[v] && (best == -1 || weight[v] > weight[best])) best = v;
    visited[best] = 1;
    visit_order.push_back(best);
    for (int w : g.neighbors(best))
      if (!visited[w]) ++weight[w];
  }
  std::vector<int> peo(visit_order.rbegin(), visit_order.rend());
  if (check_peo(g, peo)) return peo;
  return std::nullopt;
}

ChordalEmbedding chordal_embed(const Graph& g) {
  if (!g.connected()) throw std::invalid_argument("chordal_embed: graph not connected");
  const int n = g.n_vertices;
  std::vector<std::set<int>> adj(n);
  for (const auto& [a, b] : g.edges) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  ChordalEmbedding e;
  e.base = g;
  std::vector<char> eliminated(n, 0);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v)
      if (!eliminated[v] &&
          (best == -1 || adj[v].size() < adj[best].size()))
        best = v;
    e.peo.push_back(best);
    std::vector<int> nb(adj[best].begin(), adj[best].end());
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) {
        int i = nb[a], j = nb[b];
        if (!adj[i].count(j)) {
          adj[i].insert(j);
          adj[j].insert(i);
          VertexPair p{std::min(i, j), std::max(i, j)};
          if (!g.edges.count(p)) e.fill_edges.insert(p);
        }
      }
    for (int w : nb) adj[w].erase(best);
    adj[best].clear();
    eliminated[best] = 1;
  }
  return e;
}

std::vector<Clique> enumerate_cliques(const ChordalEmbedding& e) {
  Graph g = e.embedded();
  if (!check_peo(g, e.peo))
    throw std::invalid_argument("enumerate_cliques: invalid perfect elimination ordering");
  const int n = g.n_vertices;
  std::vector<int> pos(n);
  for (int t = 0; t < n; ++t) pos[e.peo[t]] = t;
  std::vector<std::vector<int>> candidates;
  for (int t = 0; t < n; ++t) {
    int v = e.peo[t];
    std::vector<int> cand{v};
    for (int w : g.neighbors(v))
      if (pos[w] > t) cand.push_back(w);
    std::sort(cand.begin(), cand.end());
    candidates.push_back(std::move(cand));
  }
  std::vector<Clique> out;
  for (size_t a = 0; a < candidates.size(); ++a) {
    bool maximal = true;
    for (size_t b = 0; b < candidates.size(); ++b) {
      if (a == b || candidates[b].size() < candidates[a].size()) continue;
      if (candidates[b].size() == candidates[a].size() && b > a) continue;
      if (std::includes(candidates[b].begin(), candidates[b].end(),
                        candidates[a].begin(), candidates[a].end()) &&
          candidates[b] != candidates[a]) {
        maximal = false;
        break;
      }
      if (candidates[b] == candidates[a] && b < a) {  // deduplicate
        maximal = false;
        break;
      }
    }
    if (maximal) out.push_back(Clique{candidates[a]});
  }
  return out;
}

namespace {

std::vector<int> set_intersection(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

CliqueTree build_clique_tree(const std::vector<Clique>& cliques, int root_clique) {
  const int q = static_cast<int>(cliques.size());
  if (q == 0) throw std::invalid_argument("build_clique_tree: no cliques");
  CliqueTree t;
  t.cliques = cliques;
  int root = root_clique;
  if (root < 0) {
    root = 0;
    for (int k = 1; k < q; ++k)
      if (cliques[k].members.size() > cliques[root].members.size()) root = k;
  }
  if (root >= q) throw std::invalid_argument("build_clique_tree: root index out of range");
  t.root = root;
  t.parent.assign(q, -1);
  // Prim maximum-weight spanning tree with weights |C_i ∩ C_j|
  std::vector<int> key(q, -1), link(q, -1);
  std::vector<char> in_tree(q, 0);
  key[root] = 0;
  for (int step = 0; step < q; ++step) {
    int best = -1;
    for (int k = 0; k < q; ++k)
      if (!in_tree[k] && key[k] >= 0 && (best == -1 || key[k] > key[best])) best = k;
    if (best == -1)
      throw std::invalid_argument("build_clique_tree: cliques from disconnected graph");
    in_tree[best] = 1;
    t.parent[best] = link[best];
    for (int k = 0; k < q; ++k) {
      if (in_tree[k]) continue;
      int w = static_cast<int>(
          set_intersection(cliques[best].members, cliques[k].members).size());
      if (w > 0 && w > key[k]) {
        key[k] = w;
        link[k] = best;
      }
    }
  }
  if (q > 1) {
    // a multi-clique chordal cover of a connected graph must overlap
    for (int k = 0; k < q; ++k)
      if (k != root && t.parent[k] < 0)
        throw std::invalid_argument("build_clique_tree: cliques from disconnected graph");
  }
  t.children.assign(q, {});
  for (int k = 0; k < q; ++k)
    if (t.parent[k] >= 0) t.children[t.parent[k]].push_back(k);
  for (auto& c : t.children) std::sort(c.begin(), c.end());
  t.separators.assign(q, {});
  t.residuals.assign(q, {});
  for (int k = 0; k < q; ++k) {
    if (t.parent[k] >= 0)
      t.separators[k] =
          set_intersection(cliques[k].members, cliques[t.parent[k]].members);
    std::set_difference(cliques[k].members.begin(), cliques[k].members.end(),
                        t.separators[k].begin(), t.separators[k].end(),
                        std::back_inserter(t.residuals[k]));
  }
  return t;
}

bool verify_cip(const CliqueTree& t) {
  const int q = t.size();
  std::vector<int> depth(q, 0);
  for (int k = 0; k < q; ++k)
    for (int v = k; t.parent[v] >= 0; v = t.parent[v]) ++depth[k];
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j) {
      auto inter = set_intersection(t.cliques[i].members, t.cliques[j].members);
      if (inter.empty()) continue;
      // walk both nodes to their lowest common ancestor
      int a = i, b = j;
      auto contains = [&](int k) {
        return std::includes(t.cliques[k].members.begin(), t.cliques[k].members.end(),
                             inter.begin(), inter.end());
      };
      int da = depth[a], db = depth[b];
      while (da > db) {
        if (!contains(a)) return false;
        a = t.parent[a];
        --da;
      }
      while (db > da) {
        if (!contains(b)) return false;
        b = t.parent[b];
        --db;
      }
      while (a != b) {
        if (!contains(a) || !contains(b)) return false;
        a = t.parent[a];
        b = t.parent[b];
      }
      if (!contains(a)) return false;
    }
  return true;
}

}  // namespace treeloc
