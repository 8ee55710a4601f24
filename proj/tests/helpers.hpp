#ifndef TRWGP_TESTS_HELPERS_HPP
#define TRWGP_TESTS_HELPERS_HPP

// Shared random-instance generators for the test suites. Everything is
// driven by an explicit rng so each test pins its own seed.

#include <utility>
#include <vector>

#include <trwgp/trwgp.hpp>

namespace testutil {

// Connected graph: a random tree plus each remaining pair independently
// with probability extra. Edges come out canonical by construction.
inline trwgp::graph random_connected_graph(trwgp::rng& r, int n, double extra)
{
  std::vector<std::vector<bool>> adj(static_cast<size_t>(n), std::vector<bool>(static_cast<size_t>(n), false));
  for (int i = 1; i < n; ++i) {
    const int j = static_cast<int>(r.below(static_cast<std::uint64_t>(i)));
    adj[static_cast<size_t>(j)][static_cast<size_t>(i)] = true;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!adj[static_cast<size_t>(i)][static_cast<size_t>(j)] && r.uniform(0.0, 1.0) < extra)
        adj[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;
  std::vector<trwgp::edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (adj[static_cast<size_t>(i)][static_cast<size_t>(j)])
        edges.push_back({i, j});
  return trwgp::graph(n, edges);
}

// Random potentials on a fixed graph; cardinalities drawn from [kmin, kmax].
inline trwgp::pairwise_mrf random_model(trwgp::rng& r, const trwgp::graph& g, int kmin, int kmax, double scale)
{
  trwgp::pairwise_mrf m;
  m.g = g;
  m.cards.resize(static_cast<size_t>(g.num_vertices()));
  for (auto& k : m.cards)
    k = kmin + static_cast<int>(r.below(static_cast<std::uint64_t>(kmax - kmin + 1)));
  m.node_pot.resize(m.cards.size());
  for (int i = 0; i < g.num_vertices(); ++i) {
    m.node_pot[static_cast<size_t>(i)].resize(static_cast<size_t>(m.card(i)));
    for (auto& v : m.node_pot[static_cast<size_t>(i)])
      v = r.uniform(-scale, scale);
  }
  m.edge_pot.reserve(static_cast<size_t>(g.num_edges()));
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge_at(e);
    trwgp::table t(m.card(u), m.card(v));
    for (auto& w : t.a)
      w = r.uniform(-scale, scale);
    m.edge_pot.push_back(std::move(t));
  }
  return m;
}

inline trwgp::graph random_tree_graph(trwgp::rng& r, int n)
{
  return random_connected_graph(r, n, 0.0);
}

inline trwgp::pairwise_mrf random_tree_model(trwgp::rng& r, int n, int kmin, int kmax, double scale)
{
  return random_model(r, random_tree_graph(r, n), kmin, kmax, scale);
}

inline trwgp::graph path_graph(int n)
{
  std::vector<trwgp::edge> edges;
  for (int i = 0; i + 1 < n; ++i)
    edges.push_back({i, i + 1});
  return trwgp::graph(n, edges);
}

inline trwgp::graph cycle_graph(int n)
{
  std::vector<trwgp::edge> edges;
  for (int i = 0; i + 1 < n; ++i)
    edges.push_back({i, i + 1});
  edges.push_back({0, n - 1});
  return trwgp::graph(n, edges);
}

inline trwgp::graph complete_graph(int n)
{
  std::vector<trwgp::edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      edges.push_back({i, j});
  return trwgp::graph(n, edges);
}

inline trwgp::graph grid_graph(int rows, int cols)
{
  std::vector<trwgp::edge> edges;
  for (int r0 = 0; r0 < rows; ++r0)
    for (int c0 = 0; c0 < cols; ++c0) {
      const int v = r0 * cols + c0;
      if (c0 + 1 < cols)
        edges.push_back({v, v + 1});
      if (r0 + 1 < rows)
        edges.push_back({v, v + cols});
    }
  return trwgp::graph(rows * cols, edges);
}

// Zero-potential model with every node at cardinality k.
inline trwgp::pairwise_mrf zero_model(const trwgp::graph& g, int k)
{
  trwgp::pairwise_mrf m;
  m.g = g;
  m.cards.assign(static_cast<size_t>(g.num_vertices()), k);
  m.node_pot.assign(m.cards.size(), std::vector<double>(static_cast<size_t>(k), 0.0));
  m.edge_pot.assign(static_cast<size_t>(g.num_edges()), trwgp::table(k, k));
  return m;
}

inline void randomize_beta(trwgp::rng& r, trwgp::dual_state& s, double scale)
{
  const trwgp::graph& g = s.model().g;
  for (int e = 0; e < g.num_edges(); ++e) {
    trwgp::table b = s.beta(e);
    for (auto& v : b.a)
      v = r.uniform(-scale, scale);
    s.set_beta(e, b);
  }
}

inline std::vector<int> random_assignment(trwgp::rng& r, const trwgp::pairwise_mrf& m)
{
  std::vector<int> x(static_cast<size_t>(m.g.num_vertices()));
  for (int i = 0; i < m.g.num_vertices(); ++i)
    x[static_cast<size_t>(i)] = static_cast<int>(r.below(static_cast<std::uint64_t>(m.card(i))));
  return x;
}

// Largest absolute difference across all marginal tables of two states.
inline double marginals_diff(const trwgp::primal_marginals& a, const trwgp::primal_marginals& b)
{
  double d = 0.0;
  for (size_t i = 0; i < a.log_node.size(); ++i)
    for (size_t x = 0; x < a.log_node[i].size(); ++x)
      d = std::max(d, std::abs(std::exp(a.log_node[i][x]) - std::exp(b.log_node[i][x])));
  for (size_t e = 0; e < a.log_cond.size(); ++e)
    for (int s = 0; s < 2; ++s) {
      const trwgp::table& ta = a.log_cond[e][static_cast<size_t>(s)];
      const trwgp::table& tb = b.log_cond[e][static_cast<size_t>(s)];
      for (size_t q = 0; q < ta.a.size(); ++q)
        d = std::max(d, std::abs(std::exp(ta.a[q]) - std::exp(tb.a[q])));
    }
  return d;
}

} // namespace testutil

#endif
