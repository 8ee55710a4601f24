#ifndef TRWGP_GP_HPP
#define TRWGP_GP_HPP

// Coordinate solver for the dual objective. One update touches one
// canonical edge: beta moves by eps times the log ratio of the forward
// and reverse joint reconstructions, which provably decreases the dual
// objective whenever eps stays below the smallest of the four appearance
// probabilities involved. The sweep loop is a deterministic round-robin
// over canonical edges starting from beta = 0.
//
// The same update is also available purely in marginal space
// (update_edge_marginal_form); it must match the beta route entrywise
// and serves as its cross-check.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <trwgp/dual.hpp>

namespace trwgp {

struct gp_config
{
  double eps_factor = 0.5; // in (0, 1); fraction of the per-edge safe step bound
  double tol = 1e-8;       // stop when the optimality residual falls below this
  int max_sweeps = 2000;
  int primal_eval_every = 1;  // sweeps between primal objective evaluations; 0 = never
  bool check_monotone = true; // abort if any update increases the dual objective beyond 1e-12
  bool record_trace = true;   // per-update trace rows (long runs may turn this off)
  entropy_form primal_form = entropy_form::conditional;
};

enum class solve_status
{
  converged,
  max_sweeps,
  non_settling
};

inline const char* to_string(solve_status s)
{
  switch (s) {
  case solve_status::converged:
    return "converged";
  case solve_status::max_sweeps:
    return "max-sweeps";
  default:
    return "non-settling";
  }
}

// One trace row; NaN doubles and negative ints print as empty CSV cells.
struct trace_record
{
  std::int64_t update = -1;
  int sweep = -1;
  int edge_u = -1;
  int edge_v = -1;
  double dual_obj = std::numeric_limits<double>::quiet_NaN();
  double primal_obj = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();
  std::int64_t elapsed_ns = -1;
};

struct solve_trace
{
  std::vector<trace_record> records;
  solve_status status = solve_status::max_sweeps;
  std::vector<std::string> warnings;
};

inline std::string trace_csv(const solve_trace& t)
{
  std::ostringstream out;
  out << "update,sweep,edge_u,edge_v,dual_obj,primal_obj,residual,delta,elapsed_ns\n";
  const auto num = [](double v) { return std::isnan(v) ? std::string() : format_value(v); };
  for (const auto& r : t.records) {
    if (r.update >= 0)
      out << r.update;
    out << ',';
    if (r.sweep >= 0)
      out << r.sweep;
    out << ',';
    if (r.edge_u >= 0)
      out << r.edge_u;
    out << ',';
    if (r.edge_v >= 0)
      out << r.edge_v;
    out << ',' << num(r.dual_obj) << ',' << num(r.primal_obj) << ',' << num(r.residual) << ',' << num(r.delta) << ',';
    if (r.elapsed_ns >= 0)
      out << r.elapsed_ns;
    out << "\n";
  }
  return out.str();
}

// eps_factor times the smallest of the two root probabilities and the two
// directed appearance probabilities of the edge; descent is guaranteed
// strictly below that minimum.
inline double step_size(const edge_probabilities& ep, const graph& g, int e, double eps_factor)
{
  if (!(eps_factor > 0.0 && eps_factor < 1.0))
    throw std::invalid_argument("eps_factor must lie in (0, 1)");
  const auto [u, v] = g.edge_at(e);
  const double m = std::min(std::min(ep.root(u), ep.root(v)),
                            std::min(ep.rho_dir[static_cast<size_t>(e)][0], ep.rho_dir[static_cast<size_t>(e)][1]));
  if (m <= 0.0)
    throw std::invalid_argument("step size needs strictly positive appearance probabilities");
  return eps_factor * m;
}

namespace detail {

// Log joints of one edge with the underflow floor applied; floored keeps
// count of entries that actually hit the floor.
struct edge_log_joints
{
  table fwd;
  table rev;
};

inline edge_log_joints log_joints(const table& lc0, const table& lc1, std::span<const double> lmu_u,
                                  std::span<const double> lmu_v, std::int64_t* floored)
{
  const int ku = lc0.rows;
  const int kv = lc0.cols;
  edge_log_joints j{table(ku, kv), table(ku, kv)};
  for (int a = 0; a < ku; ++a)
    for (int b = 0; b < kv; ++b) {
      const double f = lc0(a, b) + lmu_u[static_cast<size_t>(a)];
      const double r = lc1(b, a) + lmu_v[static_cast<size_t>(b)];
      if (floored && (f < log_floor || r < log_floor))
        ++*floored;
      j.fwd(a, b) = clamp_log(f);
      j.rev(a, b) = clamp_log(r);
    }
  return j;
}

} // namespace detail

// One coordinate step: beta_e += eps * (log forward joint - log reverse
// joint). Returns the decrease of the dual objective, computed from the
// only two node terms that change. Nonnegative for any eps below the
// per-edge bound (up to roundoff).
inline double update_edge_beta(dual_state& s, int e, double eps, std::int64_t* floored = nullptr)
{
  const graph& g = s.model().g;
  const auto [u, v] = g.edge_at(e);
  const double before = s.node_term(u) + s.node_term(v);

  const auto j = detail::log_joints(s.log_cond(e, 0), s.log_cond(e, 1), s.log_node_marginal(u),
                                    s.log_node_marginal(v), floored);
  table b = s.beta(e);
  for (size_t i = 0; i < b.a.size(); ++i)
    b.a[i] += eps * (j.fwd.a[i] - j.rev.a[i]);
  s.set_beta(e, std::move(b));

  return before - (s.node_term(u) + s.node_term(v));
}

// The same step expressed on the marginal tables alone: with
// d = log reverse joint - log forward joint, the four affected tables
// move by scaled multiples of d and renormalize. Must match
// to_primal(update_edge_beta(...)) entrywise; kept as that route's
// cross-check.
inline void update_edge_marginal_form(primal_marginals& m, const graph& g, const edge_probabilities& ep, int e,
                                      double eps)
{
  const auto [u, v] = g.edge_at(e);
  const double rho_uv = ep.rho_dir[static_cast<size_t>(e)][0];
  const double rho_vu = ep.rho_dir[static_cast<size_t>(e)][1];
  const table lc0 = m.log_cond[static_cast<size_t>(e)][0];
  const table lc1 = m.log_cond[static_cast<size_t>(e)][1];
  const std::vector<double> lmu_u = m.log_node[static_cast<size_t>(u)];
  const std::vector<double> lmu_v = m.log_node[static_cast<size_t>(v)];
  const int ku = lc0.rows;
  const int kv = lc0.cols;

  const auto j = detail::log_joints(lc0, lc1, lmu_u, lmu_v, nullptr);
  table d(ku, kv);
  for (size_t i = 0; i < d.a.size(); ++i)
    d.a[i] = j.rev.a[i] - j.fwd.a[i];

  // Singletons: each shifts by its own directed share of the row
  // normalizer change, then renormalizes.
  std::vector<double> row(static_cast<size_t>(kv));
  std::vector<double> nu(lmu_u);
  for (int a = 0; a < ku; ++a) {
    for (int b = 0; b < kv; ++b)
      row[static_cast<size_t>(b)] = lc0(a, b) + (eps / rho_uv) * d(a, b);
    nu[static_cast<size_t>(a)] += (rho_uv / ep.root(u)) * log_sum_exp(row);
  }
  const double zu = log_sum_exp(nu);
  for (double& x : nu)
    x -= zu;

  std::vector<double> col(static_cast<size_t>(ku));
  std::vector<double> nv(lmu_v);
  for (int b = 0; b < kv; ++b) {
    for (int a = 0; a < ku; ++a)
      col[static_cast<size_t>(a)] = lc1(b, a) - (eps / rho_vu) * d(a, b);
    nv[static_cast<size_t>(b)] += (rho_vu / ep.root(v)) * log_sum_exp(col);
  }
  const double zv = log_sum_exp(nv);
  for (double& x : nv)
    x -= zv;

  // Conditionals: blend toward the opposite reconstruction and renormalize
  // per conditioning row.
  table c0(ku, kv);
  for (int a = 0; a < ku; ++a) {
    for (int b = 0; b < kv; ++b)
      c0(a, b) = lc0(a, b) + (eps / rho_uv) * d(a, b);
    const double z = log_sum_exp(c0.row(a));
    for (int b = 0; b < kv; ++b)
      c0(a, b) -= z;
  }
  table c1(kv, ku);
  for (int b = 0; b < kv; ++b) {
    for (int a = 0; a < ku; ++a)
      c1(b, a) = lc1(b, a) - (eps / rho_vu) * d(a, b);
    const double z = log_sum_exp(c1.row(b));
    for (int a = 0; a < ku; ++a)
      c1(b, a) -= z;
  }

  m.log_node[static_cast<size_t>(u)] = std::move(nu);
  m.log_node[static_cast<size_t>(v)] = std::move(nv);
  m.log_cond[static_cast<size_t>(e)][0] = std::move(c0);
  m.log_cond[static_cast<size_t>(e)][1] = std::move(c1);
}

struct gp_result
{
  dual_state state;
  primal_marginals marginals;
  solve_trace trace;
};

// Round-robin solve from beta = 0. The traced dual objective is the
// initial objective minus a compensated running sum of update decreases,
// so the column is monotone by construction; a fresh recomputation once
// per sweep bounds the bookkeeping drift at 1e-9.
inline gp_result solve(const pairwise_mrf& mrf, const edge_probabilities& ep, const gp_config& cfg)
{
  if (cfg.max_sweeps < 0)
    throw std::invalid_argument("max_sweeps must be nonnegative");

  dual_state state(mrf, ep);
  const graph& g = state.model().g;
  const int ne = g.num_edges();
  solve_trace trace;

  std::vector<double> eps(static_cast<size_t>(ne));
  for (int e = 0; e < ne; ++e)
    eps[static_cast<size_t>(e)] = step_size(ep, g, e, cfg.eps_factor);

  std::vector<double> residual(static_cast<size_t>(ne));
  for (int e = 0; e < ne; ++e)
    residual[static_cast<size_t>(e)] = state.edge_residual(e);
  const auto max_residual = [&residual] {
    double m = 0.0;
    for (double r : residual)
      m = std::max(m, r);
    return m;
  };

  const double initial_obj = state.dual_objective();
  compensated_sum decrease;
  std::int64_t floored = 0;
  std::int64_t update_count = 0;
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed_ns = [&start] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  };

  trace.status = max_residual() < cfg.tol ? solve_status::converged : solve_status::max_sweeps;
  for (int sweep = 1; trace.status != solve_status::converged && sweep <= cfg.max_sweeps; ++sweep) {
    for (int e = 0; e < ne; ++e) {
      const double delta = update_edge_beta(state, e, eps[static_cast<size_t>(e)], &floored);
      if (cfg.check_monotone && delta < -1e-12)
        throw std::logic_error("dual objective increased by " + format_value(-delta) + " on edge " + std::to_string(e));
      decrease.add(delta);
      ++update_count;

      // Only tables of u, v and this edge changed, so only residuals of
      // edges touching u or v can move.
      const auto [u, v] = g.edge_at(e);
      for (const auto& r : g.neighbors(u))
        residual[static_cast<size_t>(r.edge_index)] = state.edge_residual(r.edge_index);
      for (const auto& r : g.neighbors(v))
        residual[static_cast<size_t>(r.edge_index)] = state.edge_residual(r.edge_index);

      if (cfg.record_trace) {
        trace_record rec;
        rec.update = update_count;
        rec.sweep = sweep;
        rec.edge_u = u;
        rec.edge_v = v;
        rec.dual_obj = initial_obj - decrease.value();
        rec.residual = max_residual();
        rec.delta = delta;
        rec.elapsed_ns = elapsed_ns();
        trace.records.push_back(rec);
      }
    }

    const double fresh = state.dual_objective();
    const double drift = std::abs(fresh - (initial_obj - decrease.value()));
    if (drift > 1e-9)
      throw std::logic_error("dual objective bookkeeping drifted by " + format_value(drift));

    if (cfg.record_trace && !trace.records.empty() && cfg.primal_eval_every > 0 && sweep % cfg.primal_eval_every == 0)
      trace.records.back().primal_obj = primal_objective(mrf, ep, to_primal(state), cfg.primal_form);

    if (max_residual() < cfg.tol)
      trace.status = solve_status::converged;
  }

  if (floored > 0)
    trace.warnings.push_back("log joint floored at " + format_value(log_floor) + " for " + std::to_string(floored) +
                             " entries");
  primal_marginals marginals = to_primal(state);
  return {std::move(state), std::move(marginals), std::move(trace)};
}

} // namespace trwgp

#endif
