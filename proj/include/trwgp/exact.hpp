#ifndef TRWGP_EXACT_HPP
#define TRWGP_EXACT_HPP

// Brute force reference answers by enumeration over the full joint state
// space. Deliberately independent of the solver code paths: scores come
// from assignment_score and the partition function from a streaming
// log-sum-exp, so these routines can vouch for everything else.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <trwgp/dual.hpp>
#include <trwgp/mrf.hpp>
#include <trwgp/numeric.hpp>

namespace trwgp {

// Hard cap on enumerable joint state spaces.
inline constexpr std::uint64_t max_enumerable_states = std::uint64_t(1) << 20;

class size_guard_error : public std::runtime_error
{
public:
  explicit size_guard_error(std::uint64_t states)
    : std::runtime_error("joint state space has " + std::to_string(states) + " states, enumeration is capped at " +
                         std::to_string(max_enumerable_states))
  {
  }
};

namespace detail {

inline std::uint64_t checked_state_count(const pairwise_mrf& m)
{
  std::uint64_t total = 1;
  for (int k : m.cards) {
    total *= static_cast<std::uint64_t>(k);
    if (total > max_enumerable_states)
      throw size_guard_error(total);
  }
  return total;
}

// Streaming log(sum(exp(s))) that never materializes the term list.
class running_lse
{
public:
  void add(double s)
  {
    if (s <= neg_inf)
      return;
    if (s > shift_) {
      sum_ *= std::exp(shift_ - s);
      shift_ = s;
    }
    sum_ += std::exp(s - shift_);
  }

  double value() const { return sum_ > 0.0 ? shift_ + std::log(sum_) : neg_inf; }

private:
  double shift_ = neg_inf;
  double sum_ = 0.0;
};

inline bool advance_state(std::vector<int>& x, const std::vector<int>& cards)
{
  for (size_t i = 0; i < x.size(); ++i) {
    if (++x[i] < cards[i])
      return true;
    x[i] = 0;
  }
  return false;
}

} // namespace detail

inline double exact_log_partition(const pairwise_mrf& m)
{
  detail::checked_state_count(m);
  detail::running_lse lse;
  std::vector<int> x(static_cast<size_t>(m.g.num_vertices()), 0);
  do {
    lse.add(assignment_score(m, x));
  } while (detail::advance_state(x, m.cards));
  return lse.value();
}

struct exact_result
{
  double log_z = 0.0;
  std::vector<std::vector<double>> node; // node[i][x_i]
  std::vector<table> edge;               // edge[e](x_u, x_v), canonical order
};

inline exact_result exact_marginals(const pairwise_mrf& m)
{
  detail::checked_state_count(m);
  exact_result r;
  r.log_z = exact_log_partition(m);

  const int n = m.g.num_vertices();
  r.node.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    r.node[static_cast<size_t>(i)].assign(static_cast<size_t>(m.card(i)), 0.0);
  r.edge.reserve(static_cast<size_t>(m.g.num_edges()));
  for (int e = 0; e < m.g.num_edges(); ++e) {
    const auto [u, v] = m.g.edge_at(e);
    r.edge.emplace_back(m.card(u), m.card(v));
  }

  // Second pass: probabilities exp(score - log_z) are at most 1, so plain
  // accumulation is stable.
  std::vector<int> x(static_cast<size_t>(n), 0);
  do {
    const double p = std::exp(assignment_score(m, x) - r.log_z);
    for (int i = 0; i < n; ++i)
      r.node[static_cast<size_t>(i)][static_cast<size_t>(x[static_cast<size_t>(i)])] += p;
    for (int e = 0; e < m.g.num_edges(); ++e) {
      const auto [u, v] = m.g.edge_at(e);
      r.edge[static_cast<size_t>(e)](x[static_cast<size_t>(u)], x[static_cast<size_t>(v)]) += p;
    }
  } while (detail::advance_state(x, m.cards));
  return r;
}

// The enumeration result in the solvers' log-marginal layout, with the
// conditional tables obtained by normalizing joint rows per parent state.
inline primal_marginals to_primal_marginals(const pairwise_mrf& m, const exact_result& r)
{
  primal_marginals out;
  const int n = m.g.num_vertices();
  out.log_node.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& l = out.log_node[static_cast<size_t>(i)];
    l.resize(r.node[static_cast<size_t>(i)].size());
    for (size_t x = 0; x < l.size(); ++x)
      l[x] = std::log(r.node[static_cast<size_t>(i)][x]);
  }
  out.log_cond.resize(static_cast<size_t>(m.g.num_edges()));
  for (int e = 0; e < m.g.num_edges(); ++e) {
    const table& j = r.edge[static_cast<size_t>(e)];
    table c0(j.rows, j.cols);
    for (int a = 0; a < j.rows; ++a) {
      double s = 0.0;
      for (int b = 0; b < j.cols; ++b)
        s += j(a, b);
      for (int b = 0; b < j.cols; ++b)
        c0(a, b) = std::log(j(a, b) / s);
    }
    table c1(j.cols, j.rows);
    for (int b = 0; b < j.cols; ++b) {
      double s = 0.0;
      for (int a = 0; a < j.rows; ++a)
        s += j(a, b);
      for (int a = 0; a < j.rows; ++a)
        c1(b, a) = std::log(j(a, b) / s);
    }
    out.log_cond[static_cast<size_t>(e)] = {std::move(c0), std::move(c1)};
  }
  return out;
}

} // namespace trwgp

#endif
