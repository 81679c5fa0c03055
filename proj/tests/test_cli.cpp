#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "optex/enumerate.hpp"
#include "test_util.hpp"

using namespace optex;
using namespace optex::testutil;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int exit_code;
  std::string stdout_text;
};

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "optex_cli_tests";
  fs::create_directories(dir);
  return dir;
}

CliRun run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const std::string command =
      std::string(OPTEX_CLI_PATH) + " " + args + " > " + out.string() + " 2> /dev/null";
  const int raw = std::system(command.c_str());
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  return CliRun{WEXITSTATUS(raw), buf.str()};
}

std::string write_quadratic_problem(int n, int budget) {
  json j;
  json regs = json::array();
  json labels = json::array();
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + 2.0 * i / (n - 1);
    regs.push_back({1.0, x, x * x});
    labels.push_back(std::to_string(x));
  }
  j["regressors"] = regs;
  j["N"] = budget;
  j["labels"] = labels;
  const fs::path path = work_dir() / ("quad" + std::to_string(n) + ".json");
  std::ofstream out(path);
  out << j.dump(1);
  return path.string();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("solve emits a self-consistent result") {
  const std::string problem_path = write_quadratic_problem(9, 4);
  const CliRun run = run_cli("solve " + problem_path + " --criterion A --seed 3");
  REQUIRE(run.exit_code == 0);
  const json j = json::parse(run.stdout_text);
  CHECK(j["status"] == "certified");
  CHECK(j["N"] == 4);
  int total = 0;
  for (int c : j["design"].get<std::vector<int>>()) total += c;
  CHECK(total == 4);

  // Against the in-process oracle.
  const DesignProblem problem = quadratic_grid(9, 4);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  const OracleResult oracle = enumerate_best(problem, spec);
  CHECK(j["criterion_value"].get<double>() ==
        doctest::Approx(oracle.best_value).epsilon(1e-7));
}

TEST_CASE("identical seeds reproduce the result file") {
  const std::string problem_path = write_quadratic_problem(7, 3);
  const CliRun a = run_cli("solve " + problem_path + " --criterion MV --seed 11");
  const CliRun b = run_cli("solve " + problem_path + " --criterion MV --seed 11");
  REQUIRE(a.exit_code == 0);
  json ja = json::parse(a.stdout_text);
  json jb = json::parse(b.stdout_text);
  ja.erase("wall_time_sec");
  jb.erase("wall_time_sec");
  CHECK(ja == jb);
}

TEST_CASE("solve writes JSON and TSV artifacts") {
  const std::string problem_path = write_quadratic_problem(7, 3);
  const fs::path out = work_dir() / "result.json";
  const CliRun run =
      run_cli("solve " + problem_path + " --criterion A --out " + out.string());
  REQUIRE(run.exit_code == 0);
  CHECK(fs::exists(out));
  const fs::path tsv = work_dir() / "result.tsv";
  REQUIRE(fs::exists(tsv));
  std::ifstream tin(tsv);
  std::string header;
  std::getline(tin, header);
  CHECK(header == "label\tcount");
  int lines = 0;
  std::string line;
  while (std::getline(tin, line)) ++lines;
  CHECK(lines == 7);
}

TEST_CASE("enumerate and heuristic agree with the library") {
  const std::string problem_path = write_quadratic_problem(9, 3);
  const CliRun oracle_run = run_cli("enumerate " + problem_path + " --criterion I");
  REQUIRE(oracle_run.exit_code == 0);
  const json oj = json::parse(oracle_run.stdout_text);

  const DesignProblem problem = quadratic_grid(9, 3);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::I, problem);
  const OracleResult oracle = enumerate_best(problem, spec);
  CHECK(oj["criterion_value"].get<double>() == doctest::Approx(oracle.best_value));
  CHECK(oj["examined"].get<long>() == oracle.examined);

  const CliRun heur_run = run_cli("heuristic " + problem_path + " --criterion I --seed 5");
  REQUIRE(heur_run.exit_code == 0);
  const json hj = json::parse(heur_run.stdout_text);
  CHECK(hj["alpha"].get<double>() >= oracle.best_value - 1e-9);
}

TEST_CASE("bounds subcommand reports alpha and matrices") {
  const std::string problem_path = write_quadratic_problem(9, 4);
  const CliRun run = run_cli("bounds " + problem_path + " --criterion MV --seed 2");
  REQUIRE(run.exit_code == 0);
  const json j = json::parse(run.stdout_text);
  CHECK(j["L"].size() == 3);
  CHECK(j["U"].size() == 3);
  // MV bounds equal alpha everywhere.
  const double alpha = j["alpha"].get<double>();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      CHECK(j["U"][row][col].get<double>() == doctest::Approx(alpha).epsilon(1e-9));
    }
  }
}

TEST_CASE("export round-trips through the parser") {
  const std::string problem_path = write_quadratic_problem(7, 3);
  const fs::path lp = work_dir() / "model.lp";
  const CliRun run = run_cli("export " + problem_path + " --criterion A --seed 1 --format lp" +
                             " --out " + lp.string());
  REQUIRE(run.exit_code == 0);
  std::ifstream in(lp);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str().find("Minimize") == 0);
  CHECK(buf.str().find("Binaries") != std::string::npos);
}

TEST_CASE("constraint files steer the solve") {
  const std::string problem_path = write_quadratic_problem(9, 3);
  json rows = json::array();
  rows.push_back({{"kind", "design_linear"},
                  {"points", {4, 5}},
                  {"coeffs", {1.0, 1.0}},
                  {"sense", ">="},
                  {"rhs", 1.0}});
  const fs::path cpath = work_dir() / "constraints.json";
  std::ofstream(cpath) << rows.dump();
  const CliRun run = run_cli("solve " + problem_path + " --criterion A --constraints " +
                             cpath.string() + " --seed 4");
  REQUIRE(run.exit_code == 0);
  const json j = json::parse(run.stdout_text);
  const auto design = j["design"].get<std::vector<int>>();
  CHECK(design[3] + design[4] >= 1);  // points are 1-based in the file
}

TEST_CASE("schema violations exit with code 1") {
  const fs::path bad = work_dir() / "bad.json";
  std::ofstream(bad) << "{\"regressors\": \"nope\"}";
  CHECK(run_cli("solve " + bad.string()).exit_code == 1);
  CHECK(run_cli("solve " + std::string("/nonexistent/x.json")).exit_code == 1);
}

TEST_CASE("interval rows on the 31-point grid are honored end to end") {
  const std::string problem_path = write_quadratic_problem(31, 5);
  json rows = json::array();
  rows.push_back({{"kind", "design_linear"},
                  {"points", {6, 7, 8, 9, 10, 11}},
                  {"coeffs", {1, 1, 1, 1, 1, 1}},
                  {"sense", ">="},
                  {"rhs", 1.0}});
  rows.push_back({{"kind", "design_linear"},
                  {"points", {21, 22, 23, 24, 25, 26}},
                  {"coeffs", {1, 1, 1, 1, 1, 1}},
                  {"sense", ">="},
                  {"rhs", 1.0}});
  const fs::path cpath = work_dir() / "intervals.json";
  std::ofstream(cpath) << rows.dump();
  // Reference design at x in {-1, -7/15, 0, 8/15, 1} satisfies both rows.
  const CliRun run = run_cli("solve " + problem_path + " --criterion A --constraints " +
                             cpath.string() + " --d0 1,9,16,24,31");
  REQUIRE(run.exit_code == 0);
  const json j = json::parse(run.stdout_text);
  const auto design = j["design"].get<std::vector<int>>();
  int left = 0, right = 0;
  for (int i = 5; i <= 10; ++i) left += design[i];
  for (int i = 20; i <= 25; ++i) right += design[i];
  CHECK(left >= 1);
  CHECK(right >= 1);
  CHECK(j["status"] == "certified");
}

TEST_CASE("nonlinear candidate-point workflow with a cost row") {
  // Two-factor exponential model localized at its nominal parameter; nine
  // candidate points; budget for six trials; factor costs 2 and 1 with a
  // total budget of 20.
  Vector beta0(5);
  beta0 << 1.0, 1.0, 2.0, 0.7, 0.2;
  auto mean = [](const Vector& x, const Vector& b) {
    return b(0) + b(1) * std::exp(-b(2) * x(0)) +
           b(3) / (b(3) - b(4)) * (std::exp(-b(4) * x(1)) - std::exp(-b(3) * x(1)));
  };
  const std::vector<std::pair<double, double>> candidates = {
      {0.0, 0.0}, {0.35, 0.0}, {2.0, 0.0}, {1.0, 1.2}, {0.0, 1.8},
      {2.0, 1.8}, {0.35, 6.5}, {0.6, 10.0}, {2.0, 10.0}};
  std::vector<Vector> points;
  for (const auto& [a, b] : candidates) {
    Vector x(2);
    x << a, b;
    points.push_back(x);
  }
  const DesignProblem problem = localize_nonlinear(mean, beta0, points, 6);

  // Problem JSON from the localized regressors.
  json pj;
  json regs = json::array();
  for (int i = 0; i < 9; ++i) {
    json row = json::array();
    for (int j = 0; j < 5; ++j) row.push_back(problem.regressor(i)(j));
    regs.push_back(row);
  }
  pj["regressors"] = regs;
  pj["N"] = 6;
  const fs::path ppath = work_dir() / "nonlinear9.json";
  std::ofstream(ppath) << pj.dump();

  // Cost row 2 sum d_i x_i1 + sum d_i x_i2 <= 20.
  json rows = json::array();
  json cost_points = json::array(), cost_coeffs = json::array();
  for (int i = 0; i < 9; ++i) {
    cost_points.push_back(i + 1);
    cost_coeffs.push_back(2.0 * candidates[i].first + candidates[i].second);
  }
  rows.push_back({{"kind", "design_linear"},
                  {"points", cost_points},
                  {"coeffs", cost_coeffs},
                  {"sense", "<="},
                  {"rhs", 20.0}});
  const fs::path cpath = work_dir() / "cost.json";
  std::ofstream(cpath) << rows.dump();

  // Reference design: the six candidates with x_2 < 2.
  const CliRun run = run_cli("solve " + ppath.string() + " --criterion G --constraints " +
                             cpath.string() + " --d0 1,2,3,4,5,6");
  REQUIRE(run.exit_code == 0);
  const json j = json::parse(run.stdout_text);
  const auto design = j["design"].get<std::vector<int>>();
  double cost = 0.0;
  for (int i = 0; i < 9; ++i) {
    cost += design[i] * (2.0 * candidates[i].first + candidates[i].second);
  }
  CHECK(cost <= 20.0 + 1e-9);

  // Matches the constrained enumeration optimum.
  std::vector<int> idx(9);
  std::vector<double> coeffs(9);
  for (int i = 0; i < 9; ++i) {
    idx[i] = i;
    coeffs[i] = 2.0 * candidates[i].first + candidates[i].second;
  }
  const auto cost_row = ExtraConstraint::design_linear(idx, coeffs, Sense::LE, 20.0);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::G, problem);
  const OracleResult oracle = enumerate_best(problem, spec, {cost_row});
  CHECK(j["criterion_value"].get<double>() ==
        doctest::Approx(oracle.best_value).epsilon(1e-7));
}

TEST_CASE("replication caps produce replicated designs") {
  const std::string problem_path = write_quadratic_problem(5, 4);
  const CliRun run =
      run_cli("solve " + problem_path + " --criterion A --caps 4 --seed 9");
  REQUIRE(run.exit_code == 0);
  const json j = json::parse(run.stdout_text);
  int total = 0, top = 0;
  for (int c : j["design"].get<std::vector<int>>()) {
    total += c;
    top = std::max(top, c);
  }
  CHECK(total == 4);

  const DesignProblem problem = quadratic_grid(5, 4);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  const OracleResult oracle = enumerate_best(problem, spec, {}, std::vector<int>(5, 4));
  CHECK(j["criterion_value"].get<double>() ==
        doctest::Approx(oracle.best_value).epsilon(1e-7));
}

TEST_SUITE_END();
