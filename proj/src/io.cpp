#include "optex/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace optex {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

Sense parse_sense(const std::string& s) {
  if (s == "<=") return Sense::LE;
  if (s == ">=") return Sense::GE;
  if (s == "=" || s == "==") return Sense::EQ;
  throw SchemaError("unknown sense '" + s + "' (use \"<=\", \">=\" or \"=\")");
}

DenseMatrix parse_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw SchemaError(what + " must be a non-empty matrix (list of rows)");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  DenseMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw SchemaError(what + " has ragged rows");
    }
    for (int c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw SchemaError(what + " must contain numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const DenseMatrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

int to_zero_based(const json& j, int limit, const std::string& what) {
  if (!j.is_number_integer()) throw SchemaError(what + " must be an integer");
  const int idx = j.get<int>();
  if (idx < 1 || idx > limit) {
    throw SchemaError(what + " " + std::to_string(idx) + " out of range 1.." +
                      std::to_string(limit));
  }
  return idx - 1;
}

}  // namespace

DesignProblem load_problem(const std::string& path, std::optional<int> budget_override) {
  const json j = load_json(path);
  if (!j.is_object() || !j.contains("regressors")) {
    throw SchemaError("problem file needs a \"regressors\" field");
  }
  const DenseMatrix stack = parse_matrix(j["regressors"], "\"regressors\"");
  std::vector<Vector> regressors;
  regressors.reserve(stack.rows());
  for (int i = 0; i < stack.rows(); ++i) regressors.push_back(stack.row(i).transpose());

  int budget = 0;
  if (budget_override.has_value()) {
    budget = *budget_override;
  } else if (j.contains("N") && j["N"].is_number_integer()) {
    budget = j["N"].get<int>();
  } else {
    throw SchemaError("problem file needs an integer \"N\" (or pass --N)");
  }

  std::vector<std::string> labels;
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) throw SchemaError("\"labels\" must be a list of strings");
    for (const auto& l : j["labels"]) {
      labels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    }
  }
  return DesignProblem(std::move(regressors), budget, std::move(labels));
}

CriterionSpec load_criterion(const std::string& tag_or_path, const DesignProblem& problem) {
  if (tag_or_path == "A") return CriterionSpec::preset(CriterionKind::A, problem);
  if (tag_or_path == "I") return CriterionSpec::preset(CriterionKind::I, problem);
  if (tag_or_path == "MV") return CriterionSpec::preset(CriterionKind::MV, problem);
  if (tag_or_path == "G") return CriterionSpec::preset(CriterionKind::G, problem);

  const json j = load_json(tag_or_path);
  if (!j.is_object() || !j.contains("blocks") || !j["blocks"].is_array() || j["blocks"].empty()) {
    throw SchemaError("criterion file needs a non-empty \"blocks\" list");
  }
  std::vector<DenseMatrix> blocks;
  for (const auto& b : j["blocks"]) blocks.push_back(parse_matrix(b, "criterion block"));
  return CriterionSpec(std::move(blocks), CriterionKind::Custom);
}

std::vector<ExtraConstraint> load_constraints(const std::string& path,
                                              const DesignProblem& problem) {
  const json j = load_json(path);
  if (!j.is_array()) throw SchemaError("constraint file must be a JSON list");
  const int n = problem.num_points();
  const int m = problem.dimension();
  std::vector<ExtraConstraint> out;
  for (const auto& c : j) {
    if (!c.is_object() || !c.contains("kind")) {
      throw SchemaError("each constraint needs a \"kind\"");
    }
    const std::string kind = c["kind"].get<std::string>();
    if (kind == "design_linear") {
      if (!c.contains("points") || !c.contains("coeffs") || !c.contains("sense") ||
          !c.contains("rhs")) {
        throw SchemaError("design_linear needs points, coeffs, sense, rhs");
      }
      std::vector<int> idx;
      for (const auto& p : c["points"]) idx.push_back(to_zero_based(p, n, "design point"));
      std::vector<double> coeffs = c["coeffs"].get<std::vector<double>>();
      out.push_back(ExtraConstraint::design_linear(std::move(idx), std::move(coeffs),
                                                   parse_sense(c["sense"].get<std::string>()),
                                                   c["rhs"].get<double>()));
    } else if (kind == "covariance_linear") {
      if (!c.contains("entries") || !c.contains("coeffs") || !c.contains("sense") ||
          !c.contains("rhs")) {
        throw SchemaError("covariance_linear needs entries, coeffs, sense, rhs");
      }
      std::vector<std::pair<int, int>> entries;
      for (const auto& e : c["entries"]) {
        if (!e.is_array() || e.size() != 2) {
          throw SchemaError("covariance entries must be [j, k] pairs");
        }
        entries.emplace_back(to_zero_based(e[0], m, "covariance row"),
                             to_zero_based(e[1], m, "covariance column"));
      }
      std::vector<double> coeffs = c["coeffs"].get<std::vector<double>>();
      out.push_back(ExtraConstraint::covariance_linear(std::move(entries), std::move(coeffs),
                                                       parse_sense(c["sense"].get<std::string>()),
                                                       c["rhs"].get<double>()));
    } else if (kind == "augmentation") {
      if (!c.contains("point") || !c.contains("trials")) {
        throw SchemaError("augmentation needs point and trials");
      }
      out.push_back(ExtraConstraint::augmentation(to_zero_based(c["point"], n, "design point"),
                                                  c["trials"].get<int>()));
    } else if (kind == "criterion_limit") {
      if (!c.contains("criterion") || !c.contains("limit")) {
        throw SchemaError("criterion_limit needs criterion and limit");
      }
      const CriterionSpec spec2 =
          load_criterion(c["criterion"].get<std::string>(), problem);
      for (ExtraConstraint& row :
           covariance_constraint_from_criterion(spec2, c["limit"].get<double>())) {
        out.push_back(std::move(row));
      }
    } else {
      throw SchemaError("unknown constraint kind '" + kind + "'");
    }
  }
  for (const ExtraConstraint& c : out) c.validate(n, m);
  return out;
}

CovBounds load_bounds_override(const std::string& path, double fallback_alpha) {
  const json j = load_json(path);
  if (!j.is_object() || !j.contains("L") || !j.contains("U")) {
    throw SchemaError("bounds override needs \"L\" and \"U\" matrices");
  }
  const DenseMatrix lo = parse_matrix(j["L"], "\"L\"");
  const DenseMatrix hi = parse_matrix(j["U"], "\"U\"");
  const double alpha =
      j.contains("alpha") && j["alpha"].is_number() ? j["alpha"].get<double>() : fallback_alpha;
  return CovBounds(SymMatrix(lo), SymMatrix(hi), alpha);
}

ExactDesign parse_design_list(const std::string& csv, const DesignProblem& problem) {
  std::vector<int> counts(problem.num_points(), 0);
  std::stringstream ss(csv);
  std::string tok;
  int total = 0;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    int idx;
    try {
      idx = std::stoi(tok);
    } catch (...) {
      throw SchemaError("design list entries must be integers, got '" + tok + "'");
    }
    if (idx < 1 || idx > problem.num_points()) {
      throw SchemaError("design point " + std::to_string(idx) + " out of range");
    }
    ++counts[idx - 1];
    ++total;
  }
  if (total != problem.run_budget()) {
    throw SchemaError("design list has " + std::to_string(total) + " trials, expected " +
                      std::to_string(problem.run_budget()));
  }
  return ExactDesign(std::move(counts), problem.run_budget());
}

std::vector<int> load_caps(const std::string& value, const DesignProblem& problem) {
  try {
    std::size_t used = 0;
    const int uniform = std::stoi(value, &used);
    if (used == value.size()) {
      if (uniform < 1) throw SchemaError("uniform cap must be at least 1");
      return std::vector<int>(problem.num_points(), uniform);
    }
  } catch (const SchemaError&) {
    throw;
  } catch (...) {
    // not an integer literal; treat as a path
  }
  const json j = load_json(value);
  if (!j.is_array() || static_cast<int>(j.size()) != problem.num_points()) {
    throw SchemaError("caps file must list one integer per design point");
  }
  std::vector<int> caps;
  for (const auto& c : j) caps.push_back(c.get<int>());
  return caps;
}

std::string result_to_json(const SolveResult& result, const DesignProblem& problem,
                           const std::string& criterion_name, unsigned long seed) {
  json j;
  j["criterion"] = criterion_name;
  j["criterion_value"] = result.criterion_value;
  j["design"] = result.design.counts();
  json support = json::array();
  for (int i = 0; i < result.design.num_points(); ++i) {
    if (result.design.count(i) > 0) {
      support.push_back({{"index", i + 1},
                         {"label", problem.label(i)},
                         {"count", result.design.count(i)}});
    }
  }
  j["support"] = support;
  j["sigma"] = matrix_to_json(result.sigma.mat());
  j["status"] = to_string(result.status);
  j["gap"] = result.gap;
  j["nodes"] = result.nodes_explored;
  j["lp_pivots"] = result.lp_pivots;
  j["wall_time_sec"] = result.wall_time_sec;
  j["N"] = problem.run_budget();
  j["seed"] = seed;
  return j.dump(2);
}

std::string result_to_tsv(const SolveResult& result, const DesignProblem& problem) {
  std::ostringstream out;
  out << "label\tcount\n";
  for (int i = 0; i < result.design.num_points(); ++i) {
    out << problem.label(i) << '\t' << result.design.count(i) << '\n';
  }
  return out.str();
}

std::string bounds_to_json(const CovBounds& bounds, const ExactDesign& d0_folded) {
  json j;
  j["alpha"] = bounds.alpha;
  j["L"] = matrix_to_json(bounds.lower.mat());
  j["U"] = matrix_to_json(bounds.upper.mat());
  j["d0"] = d0_folded.counts();
  return j.dump(2);
}

std::string oracle_to_json(const OracleResult& result, const DesignProblem& problem) {
  json j;
  j["criterion_value"] = result.best_value;
  j["design"] = result.best.counts();
  json support = json::array();
  for (int i = 0; i < result.best.num_points(); ++i) {
    if (result.best.count(i) > 0) {
      support.push_back(
          {{"index", i + 1}, {"label", problem.label(i)}, {"count", result.best.count(i)}});
    }
  }
  j["support"] = support;
  j["examined"] = result.examined;
  j["constraint_rejected"] = result.constraint_rejected;
  j["singular_rejected"] = result.singular_rejected;
  return j.dump(2);
}

std::string heuristic_to_json(const ExactDesign& d0, double alpha,
                              const DesignProblem& problem) {
  json j;
  j["design"] = d0.counts();
  j["alpha"] = alpha;
  json support = json::array();
  for (int i = 0; i < d0.num_points(); ++i) {
    if (d0.count(i) > 0) {
      support.push_back(
          {{"index", i + 1}, {"label", problem.label(i)}, {"count", d0.count(i)}});
    }
  }
  j["support"] = support;
  return j.dump(2);
}

}  // namespace optex
