#ifndef TRWGP_MP_HPP
#define TRWGP_MP_HPP

// Tree-reweighted message passing baseline. Messages live in log domain,
// one per directed edge copy, normalized so each message's log-sum-exp
// is zero. Updates are synchronous (all messages recomputed from the
// previous sweep's values), with optional log-domain damping. Appearance
// probabilities enter through the undirected per-edge weight
// rho_e = rho(u -> v) + rho(v -> u).
//
// Unlike the coordinate solver this iteration has no descent guarantee;
// undamped runs on strongly coupled models can oscillate indefinitely,
// which the solver flags as non-settling instead of looping to the cap.

#include <chrono>
#include <cmath>
#include <vector>

#include <trwgp/dual.hpp>
#include <trwgp/gp.hpp>

namespace trwgp {

struct mp_config
{
  double damping = 0.0; // log-domain blend: damping * old + (1 - damping) * new
  double tol = 1e-8;    // stop when the max absolute log-message change falls below this
  int max_sweeps = 2000;
  int primal_eval_every = 1; // sweeps between primal objective evaluations; 0 = never
  entropy_form primal_form = entropy_form::conditional;
};

// Sweep threshold and change level at which an undamped run is declared
// non-settling rather than still converging.
inline constexpr int mp_settle_sweeps = 500;
inline constexpr double mp_settle_change = 1e-3;

// Log messages per directed edge copy; slot 0 flows u -> v (a table over
// x_v), slot 1 flows v -> u (over x_u).
struct message_set
{
  std::vector<std::array<std::vector<double>, 2>> log_msg;
};

inline message_set uniform_messages(const pairwise_mrf& m)
{
  message_set s;
  s.log_msg.resize(static_cast<size_t>(m.g.num_edges()));
  for (int e = 0; e < m.g.num_edges(); ++e) {
    const auto [u, v] = m.g.edge_at(e);
    s.log_msg[static_cast<size_t>(e)][0].assign(static_cast<size_t>(m.card(v)), -std::log(m.card(v)));
    s.log_msg[static_cast<size_t>(e)][1].assign(static_cast<size_t>(m.card(u)), -std::log(m.card(u)));
  }
  return s;
}

namespace detail {

inline double undirected_rho(const edge_probabilities& ep, int e)
{
  return ep.rho_dir[static_cast<size_t>(e)][0] + ep.rho_dir[static_cast<size_t>(e)][1];
}

// Message from src into tgt along edge e, read from the set.
inline const std::vector<double>& message_into(const message_set& s, const graph& g, int e, int tgt)
{
  const int slot = g.edge_at(e).v == tgt ? 0 : 1;
  return s.log_msg[static_cast<size_t>(e)][static_cast<size_t>(slot)];
}

// Weighted message sum at vertex j with the given edge's own incoming
// message down-weighted: theta_j plus sum over k in N(j) of
// rho_kj * log M(k -> j), except the excluded edge contributes
// -(1 - rho_e) * log M(other -> j) instead.
inline std::vector<double> source_factor(const message_set& s, const pairwise_mrf& m, const edge_probabilities& ep,
                                         int j, int e_excluded)
{
  std::vector<double> f = m.node_pot[static_cast<size_t>(j)];
  for (const auto& r : m.g.neighbors(j)) {
    const auto& msg = message_into(s, m.g, r.edge_index, j);
    const double w = r.edge_index == e_excluded ? -(1.0 - undirected_rho(ep, e_excluded))
                                                : undirected_rho(ep, r.edge_index);
    for (size_t x = 0; x < f.size(); ++x)
      f[x] += w * msg[x];
  }
  return f;
}

} // namespace detail

// One synchronous sweep; returns the max absolute change applied to any
// log-message entry (after damping).
inline double trw_mp_sweep(message_set& s, const pairwise_mrf& m, const edge_probabilities& ep, const mp_config& cfg)
{
  const graph& g = m.g;
  message_set next;
  next.log_msg.resize(static_cast<size_t>(g.num_edges()));

  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge_at(e);
    const double rho = detail::undirected_rho(ep, e);
    if (rho <= 0.0)
      throw std::invalid_argument("message update needs a positive appearance probability on edge " + std::to_string(e));
    const table& th = m.edge_pot[static_cast<size_t>(e)];
    for (int slot = 0; slot < 2; ++slot) {
      const int src = slot == 0 ? u : v;
      const int tgt = slot == 0 ? v : u;
      const std::vector<double> f = detail::source_factor(s, m, ep, src, e);
      std::vector<double> out(static_cast<size_t>(m.card(tgt)));
      std::vector<double> acc(static_cast<size_t>(m.card(src)));
      for (int xt = 0; xt < m.card(tgt); ++xt) {
        for (int xs = 0; xs < m.card(src); ++xs) {
          const double pot = slot == 0 ? th(xs, xt) : th(xt, xs);
          acc[static_cast<size_t>(xs)] = pot / rho + f[static_cast<size_t>(xs)];
        }
        out[static_cast<size_t>(xt)] = log_sum_exp(acc);
      }
      const double z = log_sum_exp(out);
      for (double& x : out)
        x -= z;
      next.log_msg[static_cast<size_t>(e)][static_cast<size_t>(slot)] = std::move(out);
    }
  }

  double change = 0.0;
  for (int e = 0; e < g.num_edges(); ++e)
    for (int slot = 0; slot < 2; ++slot) {
      auto& cur = s.log_msg[static_cast<size_t>(e)][static_cast<size_t>(slot)];
      auto& upd = next.log_msg[static_cast<size_t>(e)][static_cast<size_t>(slot)];
      if (cfg.damping > 0.0) {
        for (size_t x = 0; x < upd.size(); ++x)
          upd[x] = cfg.damping * cur[x] + (1.0 - cfg.damping) * upd[x];
        const double z = log_sum_exp(upd);
        for (double& x : upd)
          x -= z;
      }
      for (size_t x = 0; x < upd.size(); ++x)
        change = std::max(change, std::abs(upd[x] - cur[x]));
      cur = std::move(upd);
    }
  return change;
}

// Pseudomarginals read off the current messages: singleton beliefs from
// the full weighted message product, pairwise beliefs from the edge
// potential over rho plus both endpoint factors excluding the cross
// message; conditionals come from the pairwise belief, singletons from
// the node belief, so the two need not be consistent away from a fixed
// point.
inline primal_marginals trw_mp_beliefs(const message_set& s, const pairwise_mrf& m, const edge_probabilities& ep)
{
  const graph& g = m.g;
  primal_marginals out;
  out.log_node.resize(static_cast<size_t>(g.num_vertices()));
  for (int i = 0; i < g.num_vertices(); ++i) {
    std::vector<double> b = m.node_pot[static_cast<size_t>(i)];
    for (const auto& r : g.neighbors(i)) {
      const auto& msg = detail::message_into(s, g, r.edge_index, i);
      const double w = detail::undirected_rho(ep, r.edge_index);
      for (size_t x = 0; x < b.size(); ++x)
        b[x] += w * msg[x];
    }
    const double z = log_sum_exp(b);
    for (double& x : b)
      x -= z;
    out.log_node[static_cast<size_t>(i)] = std::move(b);
  }

  out.log_cond.resize(static_cast<size_t>(g.num_edges()));
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge_at(e);
    const double rho = detail::undirected_rho(ep, e);
    const table& th = m.edge_pot[static_cast<size_t>(e)];
    const std::vector<double> fu = detail::source_factor(s, m, ep, u, e);
    const std::vector<double> fv = detail::source_factor(s, m, ep, v, e);
    table lb(m.card(u), m.card(v));
    for (int a = 0; a < lb.rows; ++a)
      for (int b = 0; b < lb.cols; ++b)
        lb(a, b) = th(a, b) / rho + fu[static_cast<size_t>(a)] + fv[static_cast<size_t>(b)];
    const double z = log_sum_exp(std::span<const double>(lb.a));
    for (double& x : lb.a)
      x -= z;

    table c0(lb.rows, lb.cols);
    for (int a = 0; a < lb.rows; ++a) {
      const double rz = log_sum_exp(lb.row(a));
      for (int b = 0; b < lb.cols; ++b)
        c0(a, b) = lb(a, b) - rz;
    }
    table c1(lb.cols, lb.rows);
    for (int b = 0; b < lb.cols; ++b) {
      std::vector<double> col(static_cast<size_t>(lb.rows));
      for (int a = 0; a < lb.rows; ++a)
        col[static_cast<size_t>(a)] = lb(a, b);
      const double cz = log_sum_exp(col);
      for (int a = 0; a < lb.rows; ++a)
        c1(b, a) = col[static_cast<size_t>(a)] - cz;
    }
    out.log_cond[static_cast<size_t>(e)] = {std::move(c0), std::move(c1)};
  }
  return out;
}

struct mp_result
{
  message_set messages;
  primal_marginals beliefs;
  solve_trace trace;
};

// Synchronous sweeps from uniform messages. Stops on message-change
// convergence, on the sweep cap, or (undamped only) on the non-settling
// detector: change still above mp_settle_change after mp_settle_sweeps.
inline mp_result solve_trw_mp(const pairwise_mrf& mrf, const edge_probabilities& ep, const mp_config& cfg)
{
  if (!(cfg.damping >= 0.0 && cfg.damping < 1.0))
    throw std::invalid_argument("damping must lie in [0, 1)");
  if (cfg.max_sweeps < 0)
    throw std::invalid_argument("max_sweeps must be nonnegative");
  const auto prep = validate_probs(ep, mrf.g, true);
  if (!prep.ok())
    throw std::invalid_argument("invalid edge probabilities: " + prep.issues.front());

  message_set msgs = uniform_messages(mrf);
  solve_trace trace;
  trace.status = solve_status::max_sweeps;
  const auto start = std::chrono::steady_clock::now();

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double change = trw_mp_sweep(msgs, mrf, ep, cfg);

    trace_record rec;
    rec.update = sweep;
    rec.sweep = sweep;
    rec.residual = change;
    rec.elapsed_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    if (cfg.primal_eval_every > 0 && sweep % cfg.primal_eval_every == 0)
      rec.primal_obj = primal_objective(mrf, ep, trw_mp_beliefs(msgs, mrf, ep), cfg.primal_form);
    trace.records.push_back(rec);

    if (change < cfg.tol) {
      trace.status = solve_status::converged;
      break;
    }
    if (cfg.damping == 0.0 && sweep >= mp_settle_sweeps && change > mp_settle_change) {
      trace.status = solve_status::non_settling;
      break;
    }
  }

  primal_marginals beliefs = trw_mp_beliefs(msgs, mrf, ep);
  return {std::move(msgs), std::move(beliefs), std::move(trace)};
}

} // namespace trwgp

#endif
