#ifndef TRWGP_IO_HPP
#define TRWGP_IO_HPP

// Text formats. All three are line oriented, whitespace separated, with
// '#' starting a full comment line, and all values printed with 17
// significant digits so that serialize-then-parse reproduces doubles
// exactly.
//
//   TRWMRF 1    model: header, nodes/cards/edges, edge list (canonical
//               order), node potential rows, edge potential rows
//   TRWRHO 1    tree weights: one "root i value" line per vertex, one
//               "dir p c value" line per directed edge (parent p, child c)
//   TRWMARG 1   marginals: one "node i ..." row per vertex, one
//               "cond p c ..." row per directed edge, row-major over
//               (x_p, x_c)

#include <cerrno>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <trwgp/mrf.hpp>
#include <trwgp/spanning.hpp>

namespace trwgp {

class parse_error : public std::runtime_error
{
public:
  parse_error(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
  {
  }

  int line() const { return line_; }

private:
  int line_;
};

namespace detail {

struct token_line
{
  int number = 0;
  std::vector<std::string> tokens;
};

inline std::vector<token_line> tokenize_lines(const std::string& text)
{
  std::vector<token_line> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream ls(line);
    token_line tl;
    tl.number = number;
    std::string tok;
    while (ls >> tok)
      tl.tokens.push_back(tok);
    if (tl.tokens.empty() || tl.tokens.front().front() == '#')
      continue;
    out.push_back(std::move(tl));
  }
  return out;
}

inline long parse_int(const token_line& tl, size_t idx, const std::string& what)
{
  if (idx >= tl.tokens.size())
    throw parse_error(tl.number, "missing " + what);
  const std::string& s = tl.tokens[idx];
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size())
    throw parse_error(tl.number, "invalid " + what + " '" + s + "'");
  return v;
}

inline double parse_value(const token_line& tl, size_t idx, const std::string& what)
{
  if (idx >= tl.tokens.size())
    throw parse_error(tl.number, "missing " + what);
  const std::string& s = tl.tokens[idx];
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw parse_error(tl.number, "invalid " + what + " '" + s + "'");
  if (!std::isfinite(v))
    throw parse_error(tl.number, what + " '" + s + "' is not finite");
  return v;
}

inline const token_line& expect_line(const std::vector<token_line>& lines, size_t idx, const std::string& what)
{
  if (idx >= lines.size()) {
    const int last = lines.empty() ? 1 : lines.back().number;
    throw parse_error(last, "unexpected end of input, expected " + what);
  }
  return lines[idx];
}

} // namespace detail

inline pairwise_mrf parse_model(const std::string& text)
{
  using namespace detail;
  const auto lines = tokenize_lines(text);
  size_t at = 0;

  const auto& magic = expect_line(lines, at++, "TRWMRF header");
  if (magic.tokens.size() != 2 || magic.tokens[0] != "TRWMRF" || magic.tokens[1] != "1")
    throw parse_error(magic.number, "expected 'TRWMRF 1' header");

  const auto& nodes_line = expect_line(lines, at++, "nodes line");
  if (nodes_line.tokens.size() != 2 || nodes_line.tokens[0] != "nodes")
    throw parse_error(nodes_line.number, "expected 'nodes N'");
  const long n = parse_int(nodes_line, 1, "node count");
  if (n < 1)
    throw parse_error(nodes_line.number, "node count must be at least 1");

  const auto& cards_line = expect_line(lines, at++, "cards line");
  if (cards_line.tokens.empty() || cards_line.tokens[0] != "cards")
    throw parse_error(cards_line.number, "expected 'cards k_0 ... k_(N-1)'");
  if (cards_line.tokens.size() != static_cast<size_t>(n) + 1)
    throw parse_error(cards_line.number, "expected " + std::to_string(n) + " cardinalities");
  std::vector<int> cards(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    const long k = parse_int(cards_line, static_cast<size_t>(i) + 1, "cardinality");
    if (k < 2)
      throw parse_error(cards_line.number, "cardinality of vertex " + std::to_string(i) + " must be at least 2");
    cards[static_cast<size_t>(i)] = static_cast<int>(k);
  }

  const auto& edges_line = expect_line(lines, at++, "edges line");
  if (edges_line.tokens.size() != 2 || edges_line.tokens[0] != "edges")
    throw parse_error(edges_line.number, "expected 'edges M'");
  const long m = parse_int(edges_line, 1, "edge count");
  if (m < 0)
    throw parse_error(edges_line.number, "edge count must be nonnegative");

  std::vector<edge> edges;
  std::set<std::pair<int, int>> seen_edges;
  edges.reserve(static_cast<size_t>(m));
  for (long e = 0; e < m; ++e) {
    const auto& el = expect_line(lines, at++, "edge line");
    if (el.tokens.size() != 2)
      throw parse_error(el.number, "expected 'u v'");
    const long u = parse_int(el, 0, "edge endpoint");
    const long v = parse_int(el, 1, "edge endpoint");
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw parse_error(el.number, "edge endpoint out of range");
    if (u == v)
      throw parse_error(el.number, "self loop at vertex " + std::to_string(u));
    if (u > v)
      throw parse_error(el.number, "edge not in canonical orientation: " + std::to_string(u) + " " + std::to_string(v));
    if (!seen_edges.insert({static_cast<int>(u), static_cast<int>(v)}).second)
      throw parse_error(el.number, "duplicate edge " + std::to_string(u) + " " + std::to_string(v));
    edges.push_back({static_cast<int>(u), static_cast<int>(v)});
  }

  pairwise_mrf model;
  model.g = graph(static_cast<int>(n), std::move(edges));
  model.cards = std::move(cards);

  model.node_pot.resize(static_cast<size_t>(n));
  std::vector<char> node_seen(static_cast<size_t>(n), 0);
  for (long i = 0; i < n; ++i) {
    const auto& nl = expect_line(lines, at++, "nodepot line");
    if (nl.tokens.empty() || nl.tokens[0] != "nodepot")
      throw parse_error(nl.number, "expected 'nodepot i values...'");
    const long idx = parse_int(nl, 1, "nodepot vertex");
    if (idx < 0 || idx >= n)
      throw parse_error(nl.number, "nodepot vertex out of range");
    if (node_seen[static_cast<size_t>(idx)])
      throw parse_error(nl.number, "duplicate nodepot for vertex " + std::to_string(idx));
    node_seen[static_cast<size_t>(idx)] = 1;
    const int k = model.cards[static_cast<size_t>(idx)];
    if (nl.tokens.size() != static_cast<size_t>(k) + 2)
      throw parse_error(nl.number, "expected " + std::to_string(k) + " values for vertex " + std::to_string(idx));
    auto& pot = model.node_pot[static_cast<size_t>(idx)];
    pot.resize(static_cast<size_t>(k));
    for (int x = 0; x < k; ++x)
      pot[static_cast<size_t>(x)] = parse_value(nl, static_cast<size_t>(x) + 2, "node potential");
  }

  model.edge_pot.resize(static_cast<size_t>(m));
  std::vector<char> edge_seen(static_cast<size_t>(m), 0);
  for (long e = 0; e < m; ++e) {
    const auto& el = expect_line(lines, at++, "edgepot line");
    if (el.tokens.empty() || el.tokens[0] != "edgepot")
      throw parse_error(el.number, "expected 'edgepot u v values...'");
    const long u = parse_int(el, 1, "edgepot endpoint");
    const long v = parse_int(el, 2, "edgepot endpoint");
    const int idx = model.g.edge_index(static_cast<int>(u), static_cast<int>(v));
    if (idx < 0 || model.g.edge_at(idx).u != u)
      throw parse_error(el.number, "edgepot names no canonical edge: " + std::to_string(u) + " " + std::to_string(v));
    if (edge_seen[static_cast<size_t>(idx)])
      throw parse_error(el.number, "duplicate edgepot for edge " + std::to_string(u) + " " + std::to_string(v));
    edge_seen[static_cast<size_t>(idx)] = 1;
    const int ku = model.cards[static_cast<size_t>(u)];
    const int kv = model.cards[static_cast<size_t>(v)];
    if (el.tokens.size() != static_cast<size_t>(ku) * kv + 3)
      throw parse_error(el.number, "expected " + std::to_string(ku * kv) + " values for edge " + std::to_string(u) + " " + std::to_string(v));
    table t(ku, kv);
    for (int a = 0; a < ku; ++a)
      for (int b = 0; b < kv; ++b)
        t(a, b) = parse_value(el, static_cast<size_t>(a * kv + b) + 3, "edge potential");
    model.edge_pot[static_cast<size_t>(idx)] = std::move(t);
  }

  if (at != lines.size())
    throw parse_error(lines[at].number, "unexpected trailing content");
  if (!model.g.connected())
    throw parse_error(0, "model graph is disconnected");
  const auto rep = validate_model(model);
  if (!rep.ok())
    throw parse_error(0, rep.issues.front());
  return model;
}

inline std::string serialize_model(const pairwise_mrf& m)
{
  std::ostringstream out;
  const int n = m.g.num_vertices();
  out << "TRWMRF 1\n";
  out << "nodes " << n << "\n";
  out << "cards";
  for (int i = 0; i < n; ++i)
    out << ' ' << m.cards[static_cast<size_t>(i)];
  out << "\n";
  out << "edges " << m.g.num_edges() << "\n";
  for (const auto& [u, v] : m.g.edges())
    out << u << ' ' << v << "\n";
  for (int i = 0; i < n; ++i) {
    out << "nodepot " << i;
    for (double v : m.node_pot[static_cast<size_t>(i)])
      out << ' ' << format_value(v);
    out << "\n";
  }
  for (int e = 0; e < m.g.num_edges(); ++e) {
    const auto [u, v] = m.g.edge_at(e);
    out << "edgepot " << u << ' ' << v;
    for (double x : m.edge_pot[static_cast<size_t>(e)].a)
      out << ' ' << format_value(x);
    out << "\n";
  }
  return out.str();
}

inline edge_probabilities parse_rho(const std::string& text, const graph& g)
{
  using namespace detail;
  const auto lines = tokenize_lines(text);
  size_t at = 0;

  const auto& magic = expect_line(lines, at++, "TRWRHO header");
  if (magic.tokens.size() != 2 || magic.tokens[0] != "TRWRHO" || magic.tokens[1] != "1")
    throw parse_error(magic.number, "expected 'TRWRHO 1' header");

  const int n = g.num_vertices();
  const int ne = g.num_edges();
  edge_probabilities p;
  p.rho_root.assign(static_cast<size_t>(n), 0.0);
  p.rho_dir.assign(static_cast<size_t>(ne), {0.0, 0.0});
  std::vector<char> root_seen(static_cast<size_t>(n), 0);
  std::vector<std::array<char, 2>> dir_seen(static_cast<size_t>(ne), {0, 0});

  while (at < lines.size()) {
    const auto& tl = lines[at++];
    if (tl.tokens[0] == "root") {
      if (tl.tokens.size() != 3)
        throw parse_error(tl.number, "expected 'root i value'");
      const long i = parse_int(tl, 1, "root vertex");
      if (i < 0 || i >= n)
        throw parse_error(tl.number, "root vertex out of range");
      if (root_seen[static_cast<size_t>(i)])
        throw parse_error(tl.number, "duplicate root line for vertex " + std::to_string(i));
      root_seen[static_cast<size_t>(i)] = 1;
      p.rho_root[static_cast<size_t>(i)] = parse_value(tl, 2, "root probability");
    } else if (tl.tokens[0] == "dir") {
      if (tl.tokens.size() != 4)
        throw parse_error(tl.number, "expected 'dir parent child value'");
      const long par = parse_int(tl, 1, "parent vertex");
      const long chd = parse_int(tl, 2, "child vertex");
      const int e = g.edge_index(static_cast<int>(par), static_cast<int>(chd));
      if (e < 0)
        throw parse_error(tl.number, "dir names no edge: " + std::to_string(par) + " " + std::to_string(chd));
      const int s = edge_probabilities::slot(g.edge_at(e), static_cast<int>(par));
      if (dir_seen[static_cast<size_t>(e)][static_cast<size_t>(s)])
        throw parse_error(tl.number, "duplicate dir line for " + std::to_string(par) + " -> " + std::to_string(chd));
      dir_seen[static_cast<size_t>(e)][static_cast<size_t>(s)] = 1;
      p.rho_dir[static_cast<size_t>(e)][static_cast<size_t>(s)] = parse_value(tl, 3, "dir probability");
    } else {
      throw parse_error(tl.number, "expected 'root' or 'dir' line");
    }
  }

  for (int i = 0; i < n; ++i)
    if (!root_seen[static_cast<size_t>(i)])
      throw parse_error(0, "missing root line for vertex " + std::to_string(i));
  for (int e = 0; e < ne; ++e) {
    const auto [u, v] = g.edge_at(e);
    if (!dir_seen[static_cast<size_t>(e)][0])
      throw parse_error(0, "missing dir line for " + std::to_string(u) + " -> " + std::to_string(v));
    if (!dir_seen[static_cast<size_t>(e)][1])
      throw parse_error(0, "missing dir line for " + std::to_string(v) + " -> " + std::to_string(u));
  }

  const auto rep = validate_probs(p, g, false);
  if (!rep.ok())
    throw parse_error(0, rep.issues.front());
  return p;
}

inline std::string serialize_rho(const edge_probabilities& p, const graph& g)
{
  std::ostringstream out;
  out << "TRWRHO 1\n";
  for (int i = 0; i < g.num_vertices(); ++i)
    out << "root " << i << ' ' << format_value(p.rho_root[static_cast<size_t>(i)]) << "\n";
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge_at(e);
    out << "dir " << u << ' ' << v << ' ' << format_value(p.rho_dir[static_cast<size_t>(e)][0]) << "\n";
    out << "dir " << v << ' ' << u << ' ' << format_value(p.rho_dir[static_cast<size_t>(e)][1]) << "\n";
  }
  return out.str();
}

} // namespace trwgp

#endif
