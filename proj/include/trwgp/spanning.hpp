#ifndef TRWGP_SPANNING_HPP
#define TRWGP_SPANNING_HPP

// Edge appearance probabilities under distributions over directed spanning
// trees (arborescences directed away from their root).
//
// Orientation convention used across the whole library: a directed tree
// edge goes parent -> child, and rho_dir stores the probability that the
// edge appears with that orientation. Per canonical edge (u, v) slot 0
// holds parent u -> child v and slot 1 holds parent v -> child u.
//
// Two independent routes compute the same quantities: exhaustive
// enumeration (small graphs, the oracle) and per-root minors of the graph
// Laplacian (the production route). They share no code on purpose.

#include <array>
#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include <trwgp/graph.hpp>
#include <trwgp/mrf.hpp>
#include <trwgp/numeric.hpp>

namespace trwgp {

struct edge_probabilities
{
  std::vector<double> rho_root;
  std::vector<std::array<double, 2>> rho_dir;

  static int slot(const edge& e, int parent)
  {
    assert(parent == e.u || parent == e.v);
    return parent == e.u ? 0 : 1;
  }

  double dir_at(const graph& g, int e, int parent) const
  {
    return rho_dir[static_cast<size_t>(e)][static_cast<size_t>(slot(g.edge_at(e), parent))];
  }

  // Probability of the directed edge parent -> child.
  double dir(const graph& g, int parent, int child) const
  {
    const int e = g.edge_index(parent, child);
    if (e < 0)
      throw std::invalid_argument("no edge between " + std::to_string(parent) + " and " + std::to_string(child));
    return dir_at(g, e, parent);
  }

  double root(int i) const { return rho_root[static_cast<size_t>(i)]; }
};

inline validation_report validate_probs(const edge_probabilities& p, const graph& g, bool strict_positive)
{
  validation_report rep;
  const int n = g.num_vertices();
  const int ne = g.num_edges();
  if (static_cast<int>(p.rho_root.size()) != n || static_cast<int>(p.rho_dir.size()) != ne) {
    rep.issues.push_back("probability table sizes do not match the graph");
    return rep;
  }
  const auto check_entry = [&](double v, const std::string& what) {
    if (!std::isfinite(v))
      rep.issues.push_back(what + " is not finite");
    else if (v < 0.0)
      rep.issues.push_back(what + " is negative");
    else if (strict_positive && v == 0.0)
      rep.issues.push_back(what + " is zero");
  };
  double root_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    check_entry(p.rho_root[static_cast<size_t>(i)], "root probability of vertex " + std::to_string(i));
    root_sum += p.rho_root[static_cast<size_t>(i)];
  }
  if (std::abs(root_sum - 1.0) > 1e-12)
    rep.issues.push_back("root probabilities sum to " + format_value(root_sum) + " instead of 1");
  for (int e = 0; e < ne; ++e) {
    const auto [u, v] = g.edge_at(e);
    check_entry(p.rho_dir[static_cast<size_t>(e)][0], "dir probability " + std::to_string(u) + " -> " + std::to_string(v));
    check_entry(p.rho_dir[static_cast<size_t>(e)][1], "dir probability " + std::to_string(v) + " -> " + std::to_string(u));
    const double both = p.rho_dir[static_cast<size_t>(e)][0] + p.rho_dir[static_cast<size_t>(e)][1];
    if (both > 1.0 + 1e-12)
      rep.issues.push_back("edge " + std::to_string(u) + " " + std::to_string(v) + " appears with total probability " + format_value(both) + " > 1");
  }
  // Each vertex is either a root or has exactly one parent.
  for (int i = 0; i < n; ++i) {
    double mass = p.rho_root[static_cast<size_t>(i)];
    for (const auto& r : g.neighbors(i))
      mass += p.rho_dir[static_cast<size_t>(r.edge_index)][static_cast<size_t>(edge_probabilities::slot(g.edge_at(r.edge_index), r.neighbor))];
    if (std::abs(mass - 1.0) > 1e-10)
      rep.issues.push_back("vertex " + std::to_string(i) + " root-or-parent mass is " + format_value(mass) + " instead of 1");
  }
  return rep;
}

namespace detail {

inline int uf_find(std::vector<int>& parent, int x)
{
  while (parent[static_cast<size_t>(x)] != x) {
    parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
    x = parent[static_cast<size_t>(x)];
  }
  return x;
}

inline void enumerate_undirected_trees(const graph& g, int next_edge, int chosen, std::vector<int>& uf,
                                       std::vector<int>& picked, std::vector<std::vector<int>>& out)
{
  const int n = g.num_vertices();
  const int need = n - 1;
  if (chosen == need) {
    out.push_back(picked);
    return;
  }
  if (next_edge >= g.num_edges() || g.num_edges() - next_edge < need - chosen)
    return;
  const auto [u, v] = g.edge_at(next_edge);
  const int ru = uf_find(uf, u);
  const int rv = uf_find(uf, v);
  if (ru != rv) {
    std::vector<int> uf_copy = uf;
    uf_copy[static_cast<size_t>(ru)] = rv;
    picked.push_back(next_edge);
    enumerate_undirected_trees(g, next_edge + 1, chosen + 1, uf_copy, picked, out);
    picked.pop_back();
  }
  enumerate_undirected_trees(g, next_edge + 1, chosen, uf, picked, out);
}

} // namespace detail

// Every spanning tree of g paired with every choice of root, as parent
// arrays. Exhaustive; guarded to small graphs.
inline std::vector<directed_tree> enumerate_directed_trees(const graph& g)
{
  const int n = g.num_vertices();
  if (n > 12)
    throw std::invalid_argument("directed tree enumeration is limited to 12 vertices");
  std::vector<std::vector<int>> undirected;
  if (n == 1) {
    undirected.push_back({});
  } else {
    std::vector<int> uf(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      uf[static_cast<size_t>(i)] = i;
    std::vector<int> picked;
    detail::enumerate_undirected_trees(g, 0, 0, uf, picked, undirected);
  }

  std::vector<directed_tree> out;
  out.reserve(undirected.size() * static_cast<size_t>(n));
  for (const auto& tree_edges : undirected) {
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (int e : tree_edges) {
      const auto [u, v] = g.edge_at(e);
      adj[static_cast<size_t>(u)].push_back(v);
      adj[static_cast<size_t>(v)].push_back(u);
    }
    for (int root = 0; root < n; ++root) {
      directed_tree t;
      t.root = root;
      t.parent.assign(static_cast<size_t>(n), -1);
      std::vector<int> stack{root};
      std::vector<char> seen(static_cast<size_t>(n), 0);
      seen[static_cast<size_t>(root)] = 1;
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (int j : adj[static_cast<size_t>(i)])
          if (!seen[static_cast<size_t>(j)]) {
            seen[static_cast<size_t>(j)] = 1;
            t.parent[static_cast<size_t>(j)] = i;
            stack.push_back(j);
          }
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

// Appearance probabilities of an explicit weighted tree collection.
inline edge_probabilities probs_from_trees(const graph& g, const std::vector<std::pair<directed_tree, double>>& trees)
{
  double total = 0.0;
  for (const auto& [t, w] : trees) {
    if (w < 0.0)
      throw std::invalid_argument("tree weight is negative");
    if (!is_spanning_arborescence(g, t))
      throw std::invalid_argument("tree is not a spanning arborescence of the graph");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("tree weights sum to " + format_value(total) + " instead of 1");

  edge_probabilities p;
  p.rho_root.assign(static_cast<size_t>(g.num_vertices()), 0.0);
  p.rho_dir.assign(static_cast<size_t>(g.num_edges()), {0.0, 0.0});
  for (const auto& [t, w] : trees) {
    p.rho_root[static_cast<size_t>(t.root)] += w;
    for (int i = 0; i < g.num_vertices(); ++i) {
      const int par = t.parent[static_cast<size_t>(i)];
      if (par < 0)
        continue;
      const int e = g.edge_index(par, i);
      p.rho_dir[static_cast<size_t>(e)][static_cast<size_t>(edge_probabilities::slot(g.edge_at(e), par))] += w;
    }
  }
  return p;
}

struct tree_probs_diag
{
  // Largest estimated condition number across the per-root solves.
  double max_condition = 0.0;
  std::vector<std::string> warnings;
};

// Appearance probabilities of the uniform distribution over all directed
// spanning trees. Uses one Laplacian minor inversion per root: with the
// minor's inverse M (root row/column deleted), the fraction of trees
// rooted at r containing parent -> child is M(c,c) - M(c,p), with the
// M(c,p) term dropped when the parent is the root, and zero when the
// child is the root. Root probabilities are exactly 1/n because every
// spanning tree can be rooted at every vertex.
inline edge_probabilities uniform_tree_probs(const graph& g, tree_probs_diag* diag = nullptr)
{
  if (!g.connected())
    throw std::invalid_argument("tree probabilities need a connected graph");
  const int n = g.num_vertices();

  edge_probabilities p;
  p.rho_root.assign(static_cast<size_t>(n), 1.0 / n);
  p.rho_dir.assign(static_cast<size_t>(g.num_edges()), {0.0, 0.0});
  if (n == 1)
    return p;

  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge_at(e);
    lap(u, u) += 1.0;
    lap(v, v) += 1.0;
    lap(u, v) -= 1.0;
    lap(v, u) -= 1.0;
  }

  double max_condition = 0.0;
  for (int root = 0; root < n; ++root) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    const auto idx = [root](int i) { return i < root ? i : i - 1; };
    for (int i = 0; i < n; ++i) {
      if (i == root)
        continue;
      for (int j = 0; j < n; ++j) {
        if (j == root)
          continue;
        minor(idx(i), idx(j)) = lap(i, j);
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(minor);
    const double rc = lu.rcond();
    const double condition = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    max_condition = std::max(max_condition, condition);
    const Eigen::MatrixXd inv = lu.inverse();
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto [u, v] = g.edge_at(e);
      for (int s = 0; s < 2; ++s) {
        const int par = s == 0 ? u : v;
        const int chd = s == 0 ? v : u;
        if (chd == root)
          continue;
        double frac = inv(idx(chd), idx(chd));
        if (par != root)
          frac -= inv(idx(chd), idx(par));
        p.rho_dir[static_cast<size_t>(e)][static_cast<size_t>(s)] += frac / n;
      }
    }
  }
  if (diag) {
    diag->max_condition = max_condition;
    if (max_condition > 1e12)
      diag->warnings.push_back("Laplacian minor condition estimate " + format_value(max_condition) + " exceeds 1e12; edge probabilities may be inaccurate");
  }
  return p;
}

} // namespace trwgp

#endif
