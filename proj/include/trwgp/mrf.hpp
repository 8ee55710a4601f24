#ifndef TRWGP_MRF_HPP
#define TRWGP_MRF_HPP

// Pairwise Markov random fields in the log domain, and the seeded Ising
// grid generator used for experiments.

#include <cmath>
#include <string>
#include <vector>

#include <trwgp/graph.hpp>
#include <trwgp/numeric.hpp>

namespace trwgp {

// Log-domain pairwise model: p(x) proportional to
// exp(sum_i node_pot[i][x_i] + sum_(u,v) edge_pot[e](x_u, x_v)).
// Edge tables are k_u x k_v, rows indexed by the state of the lower
// endpoint u of the canonical edge.
struct pairwise_mrf
{
  graph g;
  std::vector<int> cards;
  std::vector<std::vector<double>> node_pot;
  std::vector<table> edge_pot;

  int card(int i) const { return cards[static_cast<size_t>(i)]; }
};

struct validation_report
{
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

// Structural and numeric checks; reports every violation instead of
// stopping at the first.
inline validation_report validate_model(const pairwise_mrf& m)
{
  validation_report rep;
  const int n = m.g.num_vertices();
  const int ne = m.g.num_edges();
  if (static_cast<int>(m.cards.size()) != n)
    rep.issues.push_back("cards size mismatch");
  if (static_cast<int>(m.node_pot.size()) != n)
    rep.issues.push_back("node_pot size mismatch");
  if (static_cast<int>(m.edge_pot.size()) != ne)
    rep.issues.push_back("edge_pot size mismatch");
  if (!rep.ok())
    return rep;
  if (!m.g.connected())
    rep.issues.push_back("graph is disconnected");
  for (int i = 0; i < n; ++i) {
    if (m.cards[i] < 2)
      rep.issues.push_back("card of vertex " + std::to_string(i) + " must be at least 2");
    if (static_cast<int>(m.node_pot[i].size()) != m.cards[i]) {
      rep.issues.push_back("node_pot[" + std::to_string(i) + "] has wrong length");
      continue;
    }
    for (int x = 0; x < m.cards[i]; ++x)
      if (!std::isfinite(m.node_pot[i][static_cast<size_t>(x)]))
        rep.issues.push_back("node_pot[" + std::to_string(i) + "][" + std::to_string(x) + "] is not finite");
  }
  for (int e = 0; e < ne; ++e) {
    const auto [u, v] = m.g.edge_at(e);
    const table& t = m.edge_pot[static_cast<size_t>(e)];
    if (t.rows != m.cards[u] || t.cols != m.cards[v]) {
      rep.issues.push_back("edge_pot[" + std::to_string(e) + "] has wrong shape");
      continue;
    }
    for (int a = 0; a < t.rows; ++a)
      for (int b = 0; b < t.cols; ++b)
        if (!std::isfinite(t(a, b)))
          rep.issues.push_back("edge_pot[" + std::to_string(e) + "](" + std::to_string(a) + "," + std::to_string(b) + ") is not finite");
  }
  return rep;
}

// Log-score of one joint assignment: sum of the table entries it selects.
inline double assignment_score(const pairwise_mrf& m, const std::vector<int>& x)
{
  const int n = m.g.num_vertices();
  if (static_cast<int>(x.size()) != n)
    throw std::out_of_range("assignment length mismatch");
  for (int i = 0; i < n; ++i)
    if (x[i] < 0 || x[i] >= m.cards[i])
      throw std::out_of_range("state of vertex " + std::to_string(i) + " out of range");
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    s += m.node_pot[static_cast<size_t>(i)][static_cast<size_t>(x[i])];
  for (int e = 0; e < m.g.num_edges(); ++e) {
    const auto [u, v] = m.g.edge_at(e);
    s += m.edge_pot[static_cast<size_t>(e)](x[static_cast<size_t>(u)], x[static_cast<size_t>(v)]);
  }
  return s;
}

struct ising_spec
{
  int rows = 0;
  int cols = 0;
  double alpha_field = 0.0;
  double alpha_inter = 0.0;
  std::uint64_t seed = 0;
};

// 4-neighbor grid Ising model over spins s(0) = +1, s(1) = -1.
// Vertex (r, c) has index r * cols + c; canonical edges are emitted per
// cell in row-major order, right neighbor before down neighbor. Fields
// h_i ~ U[-alpha_field, alpha_field] are drawn first (vertex order), then
// interactions w_uv ~ U[-alpha_inter, alpha_inter] (canonical edge order);
// see trwgp::rng for the pinned generator.
inline pairwise_mrf gen_ising_grid(const ising_spec& spec)
{
  if (spec.rows < 1 || spec.cols < 1)
    throw std::invalid_argument("grid dimensions must be positive");
  if (spec.rows * spec.cols < 2)
    throw std::invalid_argument("grid needs at least two vertices");
  if (spec.alpha_field < 0.0 || spec.alpha_inter < 0.0)
    throw std::invalid_argument("alpha parameters must be nonnegative");

  const int n = spec.rows * spec.cols;
  std::vector<edge> edges;
  edges.reserve(static_cast<size_t>(spec.rows * (spec.cols - 1) + (spec.rows - 1) * spec.cols));
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      const int i = r * spec.cols + c;
      if (c + 1 < spec.cols)
        edges.push_back({i, i + 1});
      if (r + 1 < spec.rows)
        edges.push_back({i, i + spec.cols});
    }

  pairwise_mrf m;
  m.g = graph(n, std::move(edges));
  m.cards.assign(static_cast<size_t>(n), 2);

  const auto spin = [](int state) { return state == 0 ? 1.0 : -1.0; };

  rng gen(spec.seed);
  m.node_pot.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double h = gen.uniform(-spec.alpha_field, spec.alpha_field);
    m.node_pot[static_cast<size_t>(i)] = {h * spin(0), h * spin(1)};
  }
  m.edge_pot.resize(static_cast<size_t>(m.g.num_edges()));
  for (int e = 0; e < m.g.num_edges(); ++e) {
    const double w = gen.uniform(-spec.alpha_inter, spec.alpha_inter);
    table t(2, 2);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        t(a, b) = w * spin(a) * spin(b);
    m.edge_pot[static_cast<size_t>(e)] = std::move(t);
  }
  return m;
}

} // namespace trwgp

#endif
