#ifndef TRWGP_DESCENT_HPP
#define TRWGP_DESCENT_HPP

// Full-gradient descent on the dual objective with backtracking line
// search. Exists as an independent route to the same optimum value as
// the coordinate solver: the objective is convex, so the two must agree.

#include <chrono>
#include <cmath>
#include <vector>

#include <trwgp/dual.hpp>
#include <trwgp/gp.hpp>

namespace trwgp {

struct descent_config
{
  double tol = 1e-8; // stop when the gradient max norm falls below this
  int max_iters = 100000;
  double armijo = 1e-4;   // sufficient-decrease fraction of t * |grad|^2
  int max_halvings = 60;  // line search failure beyond this many halvings
  bool record_trace = true;
};

struct descent_result
{
  dual_state state;
  solve_trace trace;
};

inline descent_result solve_gradient_descent(const pairwise_mrf& mrf, const edge_probabilities& ep,
                                             const descent_config& cfg)
{
  dual_state state(mrf, ep);
  const graph& g = state.model().g;
  const int ne = g.num_edges();
  solve_trace trace;
  trace.status = solve_status::max_sweeps;

  double f = state.dual_objective();
  double step = 1.0;
  const auto start = std::chrono::steady_clock::now();

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    std::vector<table> grad;
    grad.reserve(static_cast<size_t>(ne));
    double gmax = 0.0;
    double gsq = 0.0;
    for (int e = 0; e < ne; ++e) {
      grad.push_back(state.edge_gradient(e));
      for (double x : grad.back().a) {
        gmax = std::max(gmax, std::abs(x));
        gsq += x * x;
      }
    }
    if (gmax < cfg.tol) {
      trace.status = solve_status::converged;
      break;
    }

    std::vector<table> saved;
    saved.reserve(static_cast<size_t>(ne));
    for (int e = 0; e < ne; ++e)
      saved.push_back(state.beta(e));

    // Halve from twice the last accepted step until the Armijo decrease
    // holds; exhausting the budget means the gradient is wrong.
    double t = 2.0 * step;
    double f_new = 0.0;
    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings; ++h, t /= 2.0) {
      for (int e = 0; e < ne; ++e) {
        table b = saved[static_cast<size_t>(e)];
        for (size_t i = 0; i < b.a.size(); ++i)
          b.a[i] -= t * grad[static_cast<size_t>(e)].a[i];
        state.set_beta(e, std::move(b));
      }
      f_new = state.dual_objective();
      if (f_new <= f - cfg.armijo * t * gsq) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw std::logic_error("line search failed after " + std::to_string(cfg.max_halvings) + " halvings");

    step = t;
    const double delta = f - f_new;
    f = f_new;
    if (cfg.record_trace) {
      trace_record rec;
      rec.update = iter;
      rec.sweep = iter;
      rec.dual_obj = f;
      rec.residual = gmax;
      rec.delta = delta;
      rec.elapsed_ns =
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
      trace.records.push_back(rec);
    }
  }

  return {std::move(state), std::move(trace)};
}

} // namespace trwgp

#endif
