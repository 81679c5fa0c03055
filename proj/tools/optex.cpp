#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "optex/formats.hpp"
#include "optex/heuristic.hpp"
#include "optex/io.hpp"

namespace {

using namespace optex;

bool verbose_logging() {
  const char* env = std::getenv("OPTEX_LOG");
  return env != nullptr && env[0] != '\0' && std::string(env) != "0";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << text;
}

std::string sibling_with_extension(const std::string& path, const std::string& ext) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + ext;
  }
  return path.substr(0, dot) + ext;
}

struct CommonArgs {
  std::string problem_path;
  std::string criterion = "A";
  std::string constraints_path;
  std::string caps_value;
  std::string bounds_override_path;
  std::string d0_list;
  std::string out_path;
  int budget = -1;
  double time_limit = std::numeric_limits<double>::infinity();
  long node_limit = std::numeric_limits<long>::max();
  unsigned long seed = 0;
  int threads = 1;
  int restarts = 10;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_solver_limits) {
  cmd->add_option("problem", a.problem_path, "problem JSON file")->required();
  cmd->add_option("--criterion", a.criterion,
                  "criterion tag (A|I|MV|G) or custom-blocks JSON path");
  cmd->add_option("--N", a.budget, "run budget override");
  cmd->add_option("--constraints", a.constraints_path, "constraint JSON file");
  cmd->add_option("--caps", a.caps_value,
                  "replication caps: integer (uniform) or JSON list path");
  cmd->add_option("--seed", a.seed, "heuristic RNG seed");
  cmd->add_option("--restarts", a.restarts, "heuristic restarts");
  cmd->add_option("--d0", a.d0_list,
                  "reference design: comma-separated 1-based point indices");
  cmd->add_option("--bounds-override", a.bounds_override_path,
                  "externally computed covariance bounds JSON file");
  cmd->add_option("--out", a.out_path, "output path (stdout when omitted)");
  if (with_solver_limits) {
    cmd->add_option("--time-limit", a.time_limit, "wall-clock limit in seconds");
    cmd->add_option("--nodes", a.node_limit, "node limit");
    cmd->add_option("--threads", a.threads, "parallel node evaluations");
  }
}

struct Prepared {
  DesignProblem problem;           // original
  CriterionSpec spec;
  std::vector<ExtraConstraint> extras;  // original indices
  std::optional<std::vector<int>> caps;
  ExactDesign d0_model;            // in model (expanded) space
  std::vector<int> d0_folded;
  double alpha;
  CovBounds bounds;
};

Prepared prepare(const CommonArgs& a) {
  DesignProblem problem =
      load_problem(a.problem_path, a.budget >= 0 ? std::optional<int>(a.budget) : std::nullopt);
  CriterionSpec spec = load_criterion(a.criterion, problem);
  std::vector<ExtraConstraint> extras =
      a.constraints_path.empty() ? std::vector<ExtraConstraint>{}
                                 : load_constraints(a.constraints_path, problem);
  std::optional<std::vector<int>> caps;
  if (!a.caps_value.empty()) caps = load_caps(a.caps_value, problem);

  std::optional<ExpandedProblem> expansion;
  if (caps.has_value()) expansion = expand_replications(problem, *caps);
  const DesignProblem& model_problem = expansion ? expansion->problem : problem;
  const std::vector<ExtraConstraint> model_extras =
      expansion ? expansion->translate(extras) : extras;

  std::optional<ExactDesign> d0;
  if (!a.d0_list.empty()) {
    const ExactDesign original_d0 = parse_design_list(a.d0_list, problem);
    d0 = expansion ? ExactDesign(expansion->unfold(original_d0.counts()),
                                 problem.run_budget())
                   : original_d0;
  } else {
    HeuristicConfig config;
    config.restarts = a.restarts;
    config.rng_seed = a.seed;
    if (verbose_logging()) {
      std::cerr << "optex: exchange heuristic on " << model_problem.num_points()
                << " points, seed " << a.seed << "\n";
    }
    d0 = exchange_search(model_problem, spec, config, model_extras);
  }

  const double alpha = criterion_value(spec, info_matrix(model_problem, *d0));
  CovBounds bounds = a.bounds_override_path.empty()
                         ? combined_bounds_from_alpha(spec, alpha)
                         : load_bounds_override(a.bounds_override_path, alpha);

  std::vector<int> folded =
      expansion ? expansion->fold(d0->counts()) : d0->counts();
  return Prepared{std::move(problem), std::move(spec),   std::move(extras), std::move(caps),
                  std::move(*d0),     std::move(folded), alpha,             std::move(bounds)};
}

void emit(const CommonArgs& a, const std::string& text) {
  if (a.out_path.empty()) {
    std::cout << text << '\n';
  } else {
    write_text(a.out_path, text);
  }
}

int run_solve(const CommonArgs& a) {
  Prepared p = prepare(a);
  MilpContext ctx = p.caps.has_value()
                        ? make_context_replicated(p.problem, *p.caps, p.spec, p.bounds, p.extras)
                        : make_context(p.problem, p.spec, p.bounds, p.extras);
  SolveLimits limits;
  limits.time_limit_sec = a.time_limit;
  limits.node_limit = a.node_limit;
  limits.threads = a.threads;
  if (verbose_logging()) {
    std::cerr << "optex: model has " << ctx.model.num_vars << " variables and "
              << ctx.model.num_rows() << " rows\n";
  }
  SolveResult result = solve(ctx, p.d0_model, limits);

  // Re-validate the reported design from scratch.
  const SymMatrix m = info_matrix(p.problem, result.design);
  const double recomputed = criterion_value(p.spec, m);
  if (std::abs(recomputed - result.criterion_value) > 1e-8 * (1.0 + std::abs(recomputed))) {
    std::cerr << "optex: error: reported value " << result.criterion_value
              << " disagrees with recomputation " << recomputed << "\n";
    return 1;
  }
  const SymMatrix sigma = invert(m);
  if (!satisfies_constraints(p.extras, result.design.counts(), &sigma, 1e-7)) {
    std::cerr << "optex: error: reported design violates the supplied constraints\n";
    return 1;
  }

  const std::string json = result_to_json(result, p.problem, a.criterion, a.seed);
  if (a.out_path.empty()) {
    std::cout << json << '\n';
  } else {
    write_text(a.out_path, json);
    write_text(sibling_with_extension(a.out_path, ".tsv"), result_to_tsv(result, p.problem));
  }
  return result.status == SolveStatus::TimeLimit ? 2 : 0;
}

int run_bounds(const CommonArgs& a) {
  Prepared p = prepare(a);
  emit(a, bounds_to_json(p.bounds, ExactDesign(p.d0_folded, p.problem.run_budget())));
  return 0;
}

int run_export(const CommonArgs& a, const std::string& format) {
  Prepared p = prepare(a);
  MilpContext ctx = p.caps.has_value()
                        ? make_context_replicated(p.problem, *p.caps, p.spec, p.bounds, p.extras)
                        : make_context(p.problem, p.spec, p.bounds, p.extras);
  ExportOptions options;
  options.format = format == "mps" ? ExportFormat::MPS : ExportFormat::LP;
  const std::string text = write_model_string(ctx.model, options);
  emit(a, text);
  return 0;
}

int run_enumerate(const CommonArgs& a, long cap) {
  DesignProblem problem =
      load_problem(a.problem_path, a.budget >= 0 ? std::optional<int>(a.budget) : std::nullopt);
  CriterionSpec spec = load_criterion(a.criterion, problem);
  std::vector<ExtraConstraint> extras =
      a.constraints_path.empty() ? std::vector<ExtraConstraint>{}
                                 : load_constraints(a.constraints_path, problem);
  std::vector<int> caps;
  if (!a.caps_value.empty()) caps = load_caps(a.caps_value, problem);
  OracleConfig config;
  if (cap > 0) config.max_designs = cap;
  OracleResult result = enumerate_best(problem, spec, extras, caps, config);
  emit(a, oracle_to_json(result, problem));
  return 0;
}

int run_heuristic(const CommonArgs& a) {
  Prepared p = prepare(a);
  emit(a, heuristic_to_json(ExactDesign(p.d0_folded, p.problem.run_budget()), p.alpha,
                            p.problem));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optex: provably optimal exact experimental designs via mixed-integer "
               "linear programming"};
  app.require_subcommand(1);

  CommonArgs solve_args, bounds_args, export_args, enum_args, heur_args;
  std::string export_format = "lp";
  long enum_cap = 0;

  CLI::App* cmd_solve = app.add_subcommand("solve", "compute a certified optimal design");
  add_common(cmd_solve, solve_args, true);

  CLI::App* cmd_bounds = app.add_subcommand("bounds", "construct covariance bounds");
  add_common(cmd_bounds, bounds_args, false);

  CLI::App* cmd_export = app.add_subcommand("export", "write the model in LP or MPS format");
  add_common(cmd_export, export_args, false);
  cmd_export->add_option("--format", export_format, "lp or mps")
      ->check(CLI::IsMember({"lp", "mps"}));

  CLI::App* cmd_enum = app.add_subcommand("enumerate", "ground-truth complete enumeration");
  add_common(cmd_enum, enum_args, false);
  cmd_enum->add_option("--max-designs", enum_cap, "enumeration cap (default 5e6)");

  CLI::App* cmd_heur = app.add_subcommand("heuristic", "exchange heuristic reference design");
  add_common(cmd_heur, heur_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_solve->parsed()) return run_solve(solve_args);
    if (cmd_bounds->parsed()) return run_bounds(bounds_args);
    if (cmd_export->parsed()) return run_export(export_args, export_format);
    if (cmd_enum->parsed()) return run_enumerate(enum_args, enum_cap);
    if (cmd_heur->parsed()) return run_heuristic(heur_args);
  } catch (const optex::Error& e) {
    std::cerr << "optex: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "optex: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
