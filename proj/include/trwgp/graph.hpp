#ifndef TRWGP_GRAPH_HPP
#define TRWGP_GRAPH_HPP

// Undirected graphs with a canonical edge list, plus directed spanning
// trees (parent arrays). Edges are stored as (u, v) with u < v; the list
// order is the canonical edge order used everywhere downstream (file
// formats, sweep schedules, table layouts).

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <string>
#include <vector>

namespace trwgp {

struct edge
{
  int u = -1;
  int v = -1;
};

inline bool operator==(const edge& a, const edge& b) { return a.u == b.u && a.v == b.v; }

class graph
{
public:
  graph() = default;

  // Validates vertex ranges, orientation, self-loops and duplicates.
  // Connectivity is checked separately (validators need to report on
  // disconnected inputs rather than fail to construct them).
  graph(int n, std::vector<edge> edges) : n_(n), edges_(std::move(edges))
  {
    if (n_ < 1)
      throw std::invalid_argument("graph needs at least one vertex");
    adjacency_.resize(static_cast<size_t>(n_));
    for (size_t e = 0; e < edges_.size(); ++e) {
      const auto [u, v] = edges_[e];
      if (u < 0 || v < 0 || u >= n_ || v >= n_)
        throw std::invalid_argument("edge endpoint out of range: " + std::to_string(u) + " " + std::to_string(v));
      if (u == v)
        throw std::invalid_argument("self loop at vertex " + std::to_string(u));
      if (u > v)
        throw std::invalid_argument("edge not in canonical orientation: " + std::to_string(u) + " " + std::to_string(v));
      adjacency_[static_cast<size_t>(u)].push_back({v, static_cast<int>(e)});
      adjacency_[static_cast<size_t>(v)].push_back({u, static_cast<int>(e)});
    }
    for (int i = 0; i < n_; ++i)
      for (size_t a = 0; a < adjacency_[i].size(); ++a)
        for (size_t b = a + 1; b < adjacency_[i].size(); ++b)
          if (adjacency_[i][a].neighbor == adjacency_[i][b].neighbor)
            throw std::invalid_argument("duplicate edge at vertex " + std::to_string(i));
  }

  struct neighbor_ref
  {
    int neighbor;
    int edge_index;
  };

  int num_vertices() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<edge>& edges() const { return edges_; }
  const edge& edge_at(int e) const { return edges_[static_cast<size_t>(e)]; }
  const std::vector<neighbor_ref>& neighbors(int i) const { return adjacency_[static_cast<size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(adjacency_[static_cast<size_t>(i)].size()); }

  // -1 when the pair is not an edge; order of a and b does not matter.
  int edge_index(int a, int b) const
  {
    if (a < 0 || b < 0 || a >= n_ || b >= n_)
      return -1;
    for (const auto& r : adjacency_[static_cast<size_t>(a)])
      if (r.neighbor == b)
        return r.edge_index;
    return -1;
  }

  bool connected() const
  {
    if (n_ == 0)
      return false;
    std::vector<char> seen(static_cast<size_t>(n_), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (const auto& r : adjacency_[static_cast<size_t>(i)])
        if (!seen[static_cast<size_t>(r.neighbor)]) {
          seen[static_cast<size_t>(r.neighbor)] = 1;
          ++count;
          stack.push_back(r.neighbor);
        }
    }
    return count == n_;
  }

private:
  int n_ = 0;
  std::vector<edge> edges_;
  std::vector<std::vector<neighbor_ref>> adjacency_;
};

// Spanning tree directed away from its root: parent[root] == -1, every
// other vertex has exactly one parent and the parent edges reach all
// vertices.
struct directed_tree
{
  int root = -1;
  std::vector<int> parent;
};

// Checks that t is a spanning tree of g directed away from t.root.
inline bool is_spanning_arborescence(const graph& g, const directed_tree& t)
{
  const int n = g.num_vertices();
  if (t.root < 0 || t.root >= n || static_cast<int>(t.parent.size()) != n)
    return false;
  if (t.parent[static_cast<size_t>(t.root)] != -1)
    return false;
  for (int i = 0; i < n; ++i) {
    if (i == t.root)
      continue;
    const int p = t.parent[static_cast<size_t>(i)];
    if (p < 0 || p >= n || g.edge_index(p, i) < 0)
      return false;
    // Walk to the root; cycles would loop longer than n steps.
    int cur = i;
    int steps = 0;
    while (cur != t.root) {
      cur = t.parent[static_cast<size_t>(cur)];
      if (cur < 0 || ++steps > n)
        return false;
    }
  }
  return true;
}

} // namespace trwgp

#endif
