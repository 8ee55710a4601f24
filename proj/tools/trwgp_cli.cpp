// Command line front end: model generation, tree weights, solver runs
// with trace output, the exact oracle, and input checking. One binary,
// subcommands; every run is deterministic given its arguments, and all
// numbers print with 17 significant digits. Exit codes: 0 success or
// converged, 1 invalid input, 2 iteration cap or non-settling run,
// 3 state-space guard.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <trwgp/trwgp.hpp>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_cap = 2;
constexpr int exit_guard = 3;

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out)
    throw std::runtime_error("failed writing " + path);
}

// Text form of marginals: one probability row per vertex, one
// row-major conditional table per directed edge copy (parent first).
std::string serialize_marginals(const trwgp::graph& g, const trwgp::primal_marginals& m)
{
  std::ostringstream out;
  out << "TRWMARG 1\n";
  for (int i = 0; i < g.num_vertices(); ++i) {
    out << "node " << i;
    for (double l : m.log_node[static_cast<size_t>(i)])
      out << ' ' << trwgp::format_value(std::exp(l));
    out << "\n";
  }
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge_at(e);
    for (int slot = 0; slot < 2; ++slot) {
      const trwgp::table& lc = m.log_cond[static_cast<size_t>(e)][static_cast<size_t>(slot)];
      out << "cond " << (slot == 0 ? u : v) << ' ' << (slot == 0 ? v : u);
      for (double l : lc.a)
        out << ' ' << trwgp::format_value(std::exp(l));
      out << "\n";
    }
  }
  return out.str();
}

struct solve_args
{
  std::string model_path;
  std::string rho_path;
  std::string alg = "trw-gp";
  std::string primal_form = "cond";
  std::string trace_path;
  std::string marginals_path;
  double tol = 1e-8;
  double eps_factor = 0.5;
  double damping = 0.5;
  int max_sweeps = 2000;
  int primal_every = 1;
};

void print_summary(const char* status, double dual_obj, double primal_obj, double residual, std::int64_t sweeps)
{
  std::cout << "status " << status << "\n";
  if (!std::isnan(dual_obj))
    std::cout << "dual_obj " << trwgp::format_value(dual_obj) << "\n";
  if (!std::isnan(primal_obj))
    std::cout << "primal_obj " << trwgp::format_value(primal_obj) << "\n";
  std::cout << "residual " << trwgp::format_value(residual) << "\n";
  std::cout << "sweeps " << sweeps << "\n";
}

int run_solve(const solve_args& args)
{
  const trwgp::pairwise_mrf model = trwgp::parse_model(read_file(args.model_path));
  const trwgp::edge_probabilities probs = trwgp::parse_rho(read_file(args.rho_path), model.g);
  const trwgp::entropy_form form =
      args.primal_form == "mi" ? trwgp::entropy_form::mutual_info : trwgp::entropy_form::conditional;

  trwgp::solve_trace trace;
  double dual_obj = std::numeric_limits<double>::quiet_NaN();
  double primal_obj = std::numeric_limits<double>::quiet_NaN();
  double residual = 0.0;
  std::int64_t sweeps = 0;
  trwgp::primal_marginals marginals;

  if (args.alg == "trw-gp") {
    trwgp::gp_config cfg;
    cfg.tol = args.tol;
    cfg.max_sweeps = args.max_sweeps;
    cfg.eps_factor = args.eps_factor;
    cfg.primal_eval_every = args.primal_every;
    cfg.primal_form = form;
    trwgp::gp_result res = trwgp::solve(model, probs, cfg);
    trace = std::move(res.trace);
    marginals = std::move(res.marginals);
    dual_obj = res.state.dual_objective();
    primal_obj = trwgp::primal_objective(model, probs, marginals, form);
    residual = trwgp::optimality_residual(model.g, marginals);
    sweeps = trace.records.empty() ? 0 : trace.records.back().sweep;
  } else if (args.alg == "trw-mp") {
    trwgp::mp_config cfg;
    cfg.damping = args.damping;
    cfg.tol = args.tol;
    cfg.max_sweeps = args.max_sweeps;
    cfg.primal_eval_every = args.primal_every;
    cfg.primal_form = form;
    trwgp::mp_result res = trwgp::solve_trw_mp(model, probs, cfg);
    trace = std::move(res.trace);
    marginals = std::move(res.beliefs);
    primal_obj = trwgp::primal_objective(model, probs, marginals, form);
    residual = trace.records.empty() ? 0.0 : trace.records.back().residual;
    sweeps = trace.records.empty() ? 0 : trace.records.back().sweep;
  } else if (args.alg == "grad") {
    trwgp::descent_config cfg;
    cfg.tol = args.tol;
    trwgp::descent_result res = trwgp::solve_gradient_descent(model, probs, cfg);
    trace = std::move(res.trace);
    marginals = trwgp::to_primal(res.state);
    dual_obj = res.state.dual_objective();
    primal_obj = trwgp::primal_objective(model, probs, marginals, form);
    residual = trwgp::optimality_residual(model.g, marginals);
    sweeps = trace.records.empty() ? 0 : trace.records.back().sweep;
  } else {
    throw std::invalid_argument("unknown algorithm: " + args.alg);
  }

  if (!args.trace_path.empty())
    write_file(args.trace_path, trwgp::trace_csv(trace));
  if (!args.marginals_path.empty())
    write_file(args.marginals_path, serialize_marginals(model.g, marginals));
  for (const auto& w : trace.warnings)
    std::cerr << "warning: " << w << "\n";

  print_summary(trwgp::to_string(trace.status), dual_obj, primal_obj, residual, sweeps);
  return trace.status == trwgp::solve_status::converged ? exit_ok : exit_cap;
}

int run_exact(const std::string& model_path)
{
  const trwgp::pairwise_mrf model = trwgp::parse_model(read_file(model_path));
  const trwgp::exact_result r = trwgp::exact_marginals(model);
  std::cout << "logZ " << trwgp::format_value(r.log_z) << "\n";
  std::cout << serialize_marginals(model.g, trwgp::to_primal_marginals(model, r));
  return exit_ok;
}

int run_check(const std::string& model_path, const std::string& rho_path)
{
  int failures = 0;
  trwgp::pairwise_mrf model;
  try {
    model = trwgp::parse_model(read_file(model_path));
    std::cout << "model: ok (" << model.g.num_vertices() << " vertices, " << model.g.num_edges() << " edges)\n";
  } catch (const std::exception& e) {
    std::cout << "model: " << e.what() << "\n";
    return exit_input;
  }

  trwgp::edge_probabilities probs;
  try {
    probs = trwgp::parse_rho(read_file(rho_path), model.g);
  } catch (const std::exception& e) {
    std::cout << "rho: " << e.what() << "\n";
    return exit_input;
  }
  const trwgp::validation_report rep = trwgp::validate_probs(probs, model.g, true);
  if (rep.ok()) {
    std::cout << "rho: ok\n";
  } else {
    for (const auto& issue : rep.issues)
      std::cout << "rho: " << issue << "\n";
    ++failures;
  }

  if (model.g.num_vertices() <= 8) {
    const std::vector<trwgp::directed_tree> trees = trwgp::enumerate_directed_trees(model.g);
    std::vector<std::pair<trwgp::directed_tree, double>> weighted;
    weighted.reserve(trees.size());
    for (const auto& t : trees)
      weighted.emplace_back(t, 1.0 / static_cast<double>(trees.size()));
    const trwgp::edge_probabilities by_enum = trwgp::probs_from_trees(model.g, weighted);
    const trwgp::edge_probabilities by_minor = trwgp::uniform_tree_probs(model.g);
    double diff = 0.0;
    for (int i = 0; i < model.g.num_vertices(); ++i)
      diff = std::max(diff, std::abs(by_enum.rho_root[static_cast<size_t>(i)] - by_minor.rho_root[static_cast<size_t>(i)]));
    for (int e = 0; e < model.g.num_edges(); ++e)
      for (int s = 0; s < 2; ++s)
        diff = std::max(diff, std::abs(by_enum.rho_dir[static_cast<size_t>(e)][static_cast<size_t>(s)] -
                                       by_minor.rho_dir[static_cast<size_t>(e)][static_cast<size_t>(s)]));
    std::cout << "tree-weight cross-check: max diff " << trwgp::format_value(diff) << "\n";
    if (diff > 1e-10)
      ++failures;
  }

  return failures == 0 ? exit_ok : exit_input;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"pairwise MRF inference toolkit"};
  app.require_subcommand(1);

  // gen-ising
  int rows = 0;
  int cols = 0;
  double alpha_f = 0.0;
  double alpha_i = 0.0;
  std::uint64_t seed = 0;
  std::string out_path;
  CLI::App* gen = app.add_subcommand("gen-ising", "generate a random grid Ising model");
  gen->add_option("--rows", rows, "grid rows")->required();
  gen->add_option("--cols", cols, "grid columns")->required();
  gen->add_option("--alpha-f", alpha_f, "field strength bound")->required();
  gen->add_option("--alpha-i", alpha_i, "interaction strength bound")->required();
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("-o,--out", out_path, "output model path")->required();

  // tree-weights
  std::string model_path;
  CLI::App* weights = app.add_subcommand("tree-weights", "uniform spanning-tree appearance probabilities");
  weights->add_option("-m,--model", model_path, "model path")->required();
  weights->add_option("-o,--out", out_path, "output rho path")->required();

  // solve
  solve_args sargs;
  CLI::App* solve = app.add_subcommand("solve", "run a solver and write trace and marginals");
  solve->add_option("-m,--model", sargs.model_path, "model path")->required();
  solve->add_option("-r,--rho", sargs.rho_path, "rho path")->required();
  solve->add_option("--alg", sargs.alg, "algorithm")->check(CLI::IsMember({"trw-gp", "trw-mp", "grad"}));
  solve->add_option("--tol", sargs.tol, "convergence tolerance");
  solve->add_option("--max-sweeps", sargs.max_sweeps, "sweep cap");
  solve->add_option("--eps-factor", sargs.eps_factor, "step size fraction of the per-edge bound");
  solve->add_option("--damping", sargs.damping, "log-domain damping (trw-mp)");
  solve->add_option("--primal-form", sargs.primal_form, "primal entropy form")->check(CLI::IsMember({"cond", "mi"}));
  solve->add_option("--primal-every", sargs.primal_every, "sweeps between primal evaluations, 0 disables");
  solve->add_option("--trace", sargs.trace_path, "trace CSV output path");
  solve->add_option("--marginals", sargs.marginals_path, "marginals output path");

  // exact
  std::string exact_model;
  CLI::App* exact = app.add_subcommand("exact", "brute-force log partition function and marginals");
  exact->add_option("-m,--model", exact_model, "model path")->required();

  // check
  std::string check_model;
  std::string check_rho;
  CLI::App* check = app.add_subcommand("check", "validate a model and rho file pair");
  check->add_option("-m,--model", check_model, "model path")->required();
  check->add_option("-r,--rho", check_rho, "rho path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (gen->parsed()) {
      trwgp::ising_spec spec;
      spec.rows = rows;
      spec.cols = cols;
      spec.alpha_field = alpha_f;
      spec.alpha_inter = alpha_i;
      spec.seed = seed;
      write_file(out_path, trwgp::serialize_model(trwgp::gen_ising_grid(spec)));
      return exit_ok;
    }
    if (weights->parsed()) {
      const trwgp::pairwise_mrf model = trwgp::parse_model(read_file(model_path));
      trwgp::tree_probs_diag diag;
      const trwgp::edge_probabilities probs = trwgp::uniform_tree_probs(model.g, &diag);
      for (const auto& w : diag.warnings)
        std::cerr << "warning: " << w << "\n";
      const trwgp::validation_report rep = trwgp::validate_probs(probs, model.g, true);
      if (!rep.ok())
        throw std::runtime_error("computed probabilities failed validation: " + rep.issues.front());
      write_file(out_path, trwgp::serialize_rho(probs, model.g));
      return exit_ok;
    }
    if (solve->parsed())
      return run_solve(sargs);
    if (exact->parsed())
      return run_exact(exact_model);
    if (check->parsed())
      return run_check(check_model, check_rho);
  } catch (const trwgp::size_guard_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_guard;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_input;
  }
  return exit_input;
}
