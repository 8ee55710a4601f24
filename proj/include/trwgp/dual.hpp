#ifndef TRWGP_DUAL_HPP
#define TRWGP_DUAL_HPP

// Unconstrained dual of the tree-reweighted free energy. The state is one
// unconstrained real table beta per canonical edge; everything else is
// derived:
//
//   lambda(p -> c)(x_p)  row log-normalizer of the directed conditional,
//                        -rho_(c|p) * LSE_(x_c) of z, with
//                        z = (theta_e / 2 + delta * beta_e) / rho_(c|p)
//   node term of i       rho_(o_i) * LSE_(x_i)((theta_i - sum of lambda
//                        over edges leaving i) / rho_(o_i))
//   dual objective       sum of node terms; an upper bound on log Z,
//                        tight on trees at the optimum
//
// Each directed copy of an edge carries half of the edge potential, so
// the two copies together account for it exactly once; delta is -1 for
// the copy oriented u -> v of the canonical edge (u, v) and +1 for
// v -> u. The lambda tables are cached and refreshed on every write to
// the incident beta table; lambda_cache_drift exists to audit that.

#include <array>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <trwgp/mrf.hpp>
#include <trwgp/spanning.hpp>

namespace trwgp {

// Node marginals and per-direction conditionals, all in log domain.
// log_cond[e][slot] has rows indexed by the parent (conditioning) state;
// slot 0 is parent u, slot 1 is parent v of canonical edge (u, v).
struct primal_marginals
{
  std::vector<std::vector<double>> log_node;
  std::vector<std::array<table, 2>> log_cond;
};

enum class entropy_form
{
  conditional,
  mutual_info
};

namespace detail {

// Both joint reconstructions of one edge in canonical (x_u, x_v)
// indexing: forward = cond(u->v) * mu_u, reverse = cond(v->u) * mu_v.
// Shared by the gradient, the optimality residual and the consistency
// check so that "residual equals gradient magnitude" holds bitwise.
inline std::pair<table, table> joints_from_logs(const table& lc0, const table& lc1,
                                                std::span<const double> lmu_u, std::span<const double> lmu_v)
{
  const int ku = lc0.rows;
  const int kv = lc0.cols;
  table fwd(ku, kv);
  table rev(ku, kv);
  for (int a = 0; a < ku; ++a)
    for (int b = 0; b < kv; ++b) {
      fwd(a, b) = std::exp(lc0(a, b) + lmu_u[static_cast<size_t>(a)]);
      rev(a, b) = std::exp(lc1(b, a) + lmu_v[static_cast<size_t>(b)]);
    }
  return {std::move(fwd), std::move(rev)};
}

// Entropy of a normalized log-domain distribution.
inline double entropy_of_log(std::span<const double> l)
{
  double h = 0.0;
  for (double x : l) {
    const double p = std::exp(x);
    if (p > 0.0)
      h -= p * x;
  }
  return h;
}

} // namespace detail

class dual_state
{
public:
  dual_state(pairwise_mrf m, edge_probabilities p) : m_(std::move(m)), p_(std::move(p))
  {
    const auto mrep = validate_model(m_);
    if (!mrep.ok())
      throw std::invalid_argument("invalid model: " + mrep.issues.front());
    const auto prep = validate_probs(p_, m_.g, true);
    if (!prep.ok())
      throw std::invalid_argument("invalid edge probabilities: " + prep.issues.front());

    const int ne = m_.g.num_edges();
    beta_.reserve(static_cast<size_t>(ne));
    lambda_.resize(static_cast<size_t>(ne));
    for (int e = 0; e < ne; ++e) {
      const auto [u, v] = m_.g.edge_at(e);
      beta_.emplace_back(m_.card(u), m_.card(v));
      refresh_lambda(e);
    }
  }

  const pairwise_mrf& model() const { return m_; }
  const edge_probabilities& probs() const { return p_; }

  const table& beta(int e) const { return beta_[static_cast<size_t>(e)]; }

  void set_beta(int e, table b)
  {
    table& cur = beta_[static_cast<size_t>(e)];
    if (b.rows != cur.rows || b.cols != cur.cols)
      throw std::invalid_argument("beta table shape mismatch on edge " + std::to_string(e));
    for (double x : b.a)
      if (!std::isfinite(x))
        throw std::invalid_argument("beta entry is not finite on edge " + std::to_string(e));
    cur = std::move(b);
    refresh_lambda(e);
  }

  // Cached lambda of the directed copy; slot 0 is parent u, slot 1 parent v.
  std::span<const double> lambda(int e, int slot) const
  {
    return lambda_[static_cast<size_t>(e)][static_cast<size_t>(slot)];
  }

  // Same table addressed by the directed pair.
  std::span<const double> lambda_table(int parent, int child) const
  {
    const int e = m_.g.edge_index(parent, child);
    if (e < 0)
      throw std::invalid_argument("no edge between " + std::to_string(parent) + " and " + std::to_string(child));
    return lambda(e, edge_probabilities::slot(m_.g.edge_at(e), parent));
  }

  // rho_(o_i) * LSE over x_i of (theta_i - sum of outgoing lambda) / rho_(o_i).
  double node_term(int i) const
  {
    const std::vector<double> t = node_argument(i);
    const double rho = p_.root(i);
    std::vector<double> s(t.size());
    for (size_t x = 0; x < t.size(); ++x)
      s[x] = t[x] / rho;
    return rho * log_sum_exp(s);
  }

  double dual_objective() const
  {
    double f = 0.0;
    for (int i = 0; i < m_.g.num_vertices(); ++i)
      f += node_term(i);
    return f;
  }

  // Normalized log marginal of one vertex.
  std::vector<double> log_node_marginal(int i) const
  {
    const std::vector<double> t = node_argument(i);
    const double rho = p_.root(i);
    std::vector<double> s(t.size());
    for (size_t x = 0; x < t.size(); ++x)
      s[x] = t[x] / rho;
    const double z = log_sum_exp(s);
    for (double& x : s)
      x -= z;
    return s;
  }

  // Row-normalized log conditional of one directed copy, rows indexed by
  // the parent state.
  table log_cond(int e, int slot) const
  {
    table z = cond_argument(e, slot);
    for (int r = 0; r < z.rows; ++r) {
      const double n = log_sum_exp(z.row(r));
      for (int c = 0; c < z.cols; ++c)
        z(r, c) -= n;
    }
    return z;
  }

  // Forward and reverse joint reconstructions in (x_u, x_v) indexing.
  std::pair<table, table> edge_joints(int e) const
  {
    const auto [u, v] = m_.g.edge_at(e);
    return detail::joints_from_logs(log_cond(e, 0), log_cond(e, 1), log_node_marginal(u), log_node_marginal(v));
  }

  // Gradient of the dual objective with respect to this edge's beta:
  // reverse joint minus forward joint.
  table edge_gradient(int e) const
  {
    auto [fwd, rev] = edge_joints(e);
    for (size_t i = 0; i < fwd.a.size(); ++i)
      rev.a[i] -= fwd.a[i];
    return rev;
  }

  double edge_residual(int e) const
  {
    const table g = edge_gradient(e);
    double m = 0.0;
    for (double x : g.a)
      m = std::max(m, std::abs(x));
    return m;
  }

  // Max abs difference between the cached lambda tables and a fresh
  // recomputation; audits the cache-on-write discipline.
  double lambda_cache_drift() const
  {
    double drift = 0.0;
    for (int e = 0; e < m_.g.num_edges(); ++e)
      for (int s = 0; s < 2; ++s) {
        const std::vector<double> fresh = compute_lambda(e, s);
        const auto& cached = lambda_[static_cast<size_t>(e)][static_cast<size_t>(s)];
        for (size_t x = 0; x < fresh.size(); ++x)
          drift = std::max(drift, std::abs(fresh[x] - cached[x]));
      }
    return drift;
  }

private:
  pairwise_mrf m_;
  edge_probabilities p_;
  std::vector<table> beta_;
  std::vector<std::array<std::vector<double>, 2>> lambda_;

  // z(x_p, x_c) = (theta_e / 2 + delta * beta_e) / rho_(c|p); delta is -1
  // for the u -> v copy and +1 for v -> u, and the table is laid out
  // parent-major.
  table cond_argument(int e, int slot) const
  {
    const auto [u, v] = m_.g.edge_at(e);
    const table& th = m_.edge_pot[static_cast<size_t>(e)];
    const table& b = beta_[static_cast<size_t>(e)];
    const double rho = p_.rho_dir[static_cast<size_t>(e)][static_cast<size_t>(slot)];
    const double delta = slot == 0 ? -1.0 : 1.0;
    const int kp = slot == 0 ? m_.card(u) : m_.card(v);
    const int kc = slot == 0 ? m_.card(v) : m_.card(u);
    table z(kp, kc);
    for (int r = 0; r < kp; ++r)
      for (int c = 0; c < kc; ++c) {
        const int a = slot == 0 ? r : c;
        const int bb = slot == 0 ? c : r;
        z(r, c) = (th(a, bb) / 2.0 + delta * b(a, bb)) / rho;
      }
    return z;
  }

  std::vector<double> compute_lambda(int e, int slot) const
  {
    const table z = cond_argument(e, slot);
    const double rho = p_.rho_dir[static_cast<size_t>(e)][static_cast<size_t>(slot)];
    std::vector<double> l(static_cast<size_t>(z.rows));
    for (int r = 0; r < z.rows; ++r)
      l[static_cast<size_t>(r)] = -rho * log_sum_exp(z.row(r));
    return l;
  }

  void refresh_lambda(int e)
  {
    lambda_[static_cast<size_t>(e)][0] = compute_lambda(e, 0);
    lambda_[static_cast<size_t>(e)][1] = compute_lambda(e, 1);
  }

  // theta_i minus the lambda tables of the directed copies leaving i.
  std::vector<double> node_argument(int i) const
  {
    std::vector<double> t = m_.node_pot[static_cast<size_t>(i)];
    for (const auto& r : m_.g.neighbors(i)) {
      const auto l = lambda(r.edge_index, edge_probabilities::slot(m_.g.edge_at(r.edge_index), i));
      for (size_t x = 0; x < t.size(); ++x)
        t[x] -= l[x];
    }
    return t;
  }
};

inline primal_marginals to_primal(const dual_state& s)
{
  const graph& g = s.model().g;
  primal_marginals m;
  m.log_node.reserve(static_cast<size_t>(g.num_vertices()));
  for (int i = 0; i < g.num_vertices(); ++i)
    m.log_node.push_back(s.log_node_marginal(i));
  m.log_cond.reserve(static_cast<size_t>(g.num_edges()));
  for (int e = 0; e < g.num_edges(); ++e)
    m.log_cond.push_back({s.log_cond(e, 0), s.log_cond(e, 1)});
  return m;
}

// Forward and reverse joints of one edge from explicit marginals, in
// canonical (x_u, x_v) indexing.
inline std::pair<table, table> edge_joints(const graph& g, const primal_marginals& m, int e)
{
  const auto [u, v] = g.edge_at(e);
  return detail::joints_from_logs(m.log_cond[static_cast<size_t>(e)][0], m.log_cond[static_cast<size_t>(e)][1],
                                  m.log_node[static_cast<size_t>(u)], m.log_node[static_cast<size_t>(v)]);
}

// Max discrepancy between the two joint reconstructions across all edges.
// Zero exactly at dual optimality; identical to the max norm of the dual
// gradient by construction.
inline double optimality_residual(const graph& g, const primal_marginals& m)
{
  double r = 0.0;
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [fwd, rev] = edge_joints(g, m, e);
    for (size_t i = 0; i < fwd.a.size(); ++i)
      r = std::max(r, std::abs(rev.a[i] - fwd.a[i]));
  }
  return r;
}

// Max violation over the directed consistency constraints: equality of
// the two joint copies, agreement of each copy's parent-side sums with
// the node marginal, node normalization, and nonnegativity.
inline double consistency_check(const graph& g, const primal_marginals& m)
{
  double worst = 0.0;
  for (int i = 0; i < g.num_vertices(); ++i) {
    double sum = 0.0;
    for (double l : m.log_node[static_cast<size_t>(i)]) {
      const double p = std::exp(l);
      worst = std::max(worst, -p);
      sum += p;
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge_at(e);
    const auto [fwd, rev] = edge_joints(g, m, e);
    for (size_t i = 0; i < fwd.a.size(); ++i) {
      worst = std::max(worst, std::abs(rev.a[i] - fwd.a[i]));
      worst = std::max(worst, -fwd.a[i]);
      worst = std::max(worst, -rev.a[i]);
    }
    for (int a = 0; a < fwd.rows; ++a) {
      double s = 0.0;
      for (int b = 0; b < fwd.cols; ++b)
        s += fwd(a, b);
      worst = std::max(worst, std::abs(s - std::exp(m.log_node[static_cast<size_t>(u)][static_cast<size_t>(a)])));
    }
    for (int b = 0; b < rev.cols; ++b) {
      double s = 0.0;
      for (int a = 0; a < rev.rows; ++a)
        s += rev(a, b);
      worst = std::max(worst, std::abs(s - std::exp(m.log_node[static_cast<size_t>(v)][static_cast<size_t>(b)])));
    }
  }
  return worst;
}

// Entropy of the tree distribution assembled from the marginals along t.
// The conditional form is the root entropy plus parent-weighted row
// entropies; the mutual-information form is the node entropies minus the
// per-edge mutual information of the reconstructed joint (both of that
// joint's marginals taken from the joint itself). The forms agree on
// consistent marginals and differ otherwise.
inline double tree_entropy(const graph& g, const primal_marginals& m, const directed_tree& t, entropy_form form)
{
  if (!is_spanning_arborescence(g, t))
    throw std::invalid_argument("tree is not a spanning arborescence of the graph");

  if (form == entropy_form::conditional) {
    double h = detail::entropy_of_log(m.log_node[static_cast<size_t>(t.root)]);
    for (int c = 0; c < g.num_vertices(); ++c) {
      const int p = t.parent[static_cast<size_t>(c)];
      if (p < 0)
        continue;
      const int e = g.edge_index(p, c);
      const table& lc = m.log_cond[static_cast<size_t>(e)][static_cast<size_t>(edge_probabilities::slot(g.edge_at(e), p))];
      for (int xp = 0; xp < lc.rows; ++xp)
        h += std::exp(m.log_node[static_cast<size_t>(p)][static_cast<size_t>(xp)]) * detail::entropy_of_log(lc.row(xp));
    }
    return h;
  }

  double h = 0.0;
  for (int i = 0; i < g.num_vertices(); ++i)
    h += detail::entropy_of_log(m.log_node[static_cast<size_t>(i)]);
  for (int c = 0; c < g.num_vertices(); ++c) {
    const int p = t.parent[static_cast<size_t>(c)];
    if (p < 0)
      continue;
    const int e = g.edge_index(p, c);
    const table& lc = m.log_cond[static_cast<size_t>(e)][static_cast<size_t>(edge_probabilities::slot(g.edge_at(e), p))];
    table joint(lc.rows, lc.cols);
    for (int xp = 0; xp < lc.rows; ++xp)
      for (int xc = 0; xc < lc.cols; ++xc)
        joint(xp, xc) = std::exp(lc(xp, xc) + m.log_node[static_cast<size_t>(p)][static_cast<size_t>(xp)]);
    std::vector<double> pa(static_cast<size_t>(joint.rows), 0.0);
    std::vector<double> pb(static_cast<size_t>(joint.cols), 0.0);
    for (int a = 0; a < joint.rows; ++a)
      for (int b = 0; b < joint.cols; ++b) {
        pa[static_cast<size_t>(a)] += joint(a, b);
        pb[static_cast<size_t>(b)] += joint(a, b);
      }
    double mi = 0.0;
    for (int a = 0; a < joint.rows; ++a)
      for (int b = 0; b < joint.cols; ++b) {
        const double j = joint(a, b);
        if (j > 0.0)
          mi += j * std::log(j / (pa[static_cast<size_t>(a)] * pb[static_cast<size_t>(b)]));
      }
    h -= mi;
  }
  return h;
}

// Tree-reweighted free energy of explicit marginals. The energy term
// pairs each edge potential with the average of the edge's two joint
// reconstructions (they coincide on consistent marginals). The entropy
// is either the root-weighted node entropies plus direction-weighted
// conditional entropies, or the node entropies minus appearance-weighted
// mutual information of the averaged joint. At the dual optimum this
// equals minus the dual objective.
inline double primal_objective(const pairwise_mrf& mrf, const edge_probabilities& ep, const primal_marginals& m,
                               entropy_form form)
{
  const graph& g = mrf.g;
  double energy = 0.0;
  for (int i = 0; i < g.num_vertices(); ++i)
    for (size_t x = 0; x < m.log_node[static_cast<size_t>(i)].size(); ++x)
      energy += std::exp(m.log_node[static_cast<size_t>(i)][x]) * mrf.node_pot[static_cast<size_t>(i)][x];

  std::vector<table> averaged;
  averaged.reserve(static_cast<size_t>(g.num_edges()));
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [fwd, rev] = edge_joints(g, m, e);
    table avg(fwd.rows, fwd.cols);
    for (size_t i = 0; i < avg.a.size(); ++i)
      avg.a[i] = 0.5 * (fwd.a[i] + rev.a[i]);
    const table& th = mrf.edge_pot[static_cast<size_t>(e)];
    for (size_t i = 0; i < avg.a.size(); ++i)
      energy += avg.a[i] * th.a[i];
    averaged.push_back(std::move(avg));
  }

  double entropy = 0.0;
  if (form == entropy_form::conditional) {
    for (int i = 0; i < g.num_vertices(); ++i)
      entropy += ep.root(i) * detail::entropy_of_log(m.log_node[static_cast<size_t>(i)]);
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto [u, v] = g.edge_at(e);
      for (int s = 0; s < 2; ++s) {
        const double rho = ep.rho_dir[static_cast<size_t>(e)][static_cast<size_t>(s)];
        const int parent = s == 0 ? u : v;
        const table& lc = m.log_cond[static_cast<size_t>(e)][static_cast<size_t>(s)];
        for (int xp = 0; xp < lc.rows; ++xp)
          entropy += rho * std::exp(m.log_node[static_cast<size_t>(parent)][static_cast<size_t>(xp)]) *
                     detail::entropy_of_log(lc.row(xp));
      }
    }
  } else {
    for (int i = 0; i < g.num_vertices(); ++i)
      entropy += detail::entropy_of_log(m.log_node[static_cast<size_t>(i)]);
    for (int e = 0; e < g.num_edges(); ++e) {
      const table& j = averaged[static_cast<size_t>(e)];
      std::vector<double> pa(static_cast<size_t>(j.rows), 0.0);
      std::vector<double> pb(static_cast<size_t>(j.cols), 0.0);
      for (int a = 0; a < j.rows; ++a)
        for (int b = 0; b < j.cols; ++b) {
          pa[static_cast<size_t>(a)] += j(a, b);
          pb[static_cast<size_t>(b)] += j(a, b);
        }
      const double rho = ep.rho_dir[static_cast<size_t>(e)][0] + ep.rho_dir[static_cast<size_t>(e)][1];
      double mi = 0.0;
      for (int a = 0; a < j.rows; ++a)
        for (int b = 0; b < j.cols; ++b)
          if (j(a, b) > 0.0)
            mi += j(a, b) * std::log(j(a, b) / (pa[static_cast<size_t>(a)] * pb[static_cast<size_t>(b)]));
      entropy -= rho * mi;
    }
  }
  return -energy - entropy;
}

// Log of the appearance-weighted product of marginal estimates at one
// assignment: sum of rho_(o_i) log mu_i(x_i) plus, per canonical edge,
// both direction-weighted log conditionals. Differs from the assignment
// score by a constant independent of x.
inline double reparam_product(const graph& g, const edge_probabilities& ep, const primal_marginals& m,
                              const std::vector<int>& x)
{
  if (static_cast<int>(x.size()) != g.num_vertices())
    throw std::invalid_argument("assignment length mismatch");
  double s = 0.0;
  for (int i = 0; i < g.num_vertices(); ++i) {
    const double l = m.log_node[static_cast<size_t>(i)][static_cast<size_t>(x[static_cast<size_t>(i)])];
    if (!std::isfinite(l))
      throw std::domain_error("zero node marginal at the evaluated assignment");
    s += ep.root(i) * l;
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge_at(e);
    const double l0 = m.log_cond[static_cast<size_t>(e)][0](x[static_cast<size_t>(u)], x[static_cast<size_t>(v)]);
    const double l1 = m.log_cond[static_cast<size_t>(e)][1](x[static_cast<size_t>(v)], x[static_cast<size_t>(u)]);
    if (!std::isfinite(l0) || !std::isfinite(l1))
      throw std::domain_error("zero conditional at the evaluated assignment");
    s += ep.rho_dir[static_cast<size_t>(e)][0] * l0 + ep.rho_dir[static_cast<size_t>(e)][1] * l1;
  }
  return s;
}

} // namespace trwgp

#endif
