#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "plg/plg.hpp"

namespace fs = std::filesystem;
using namespace plg;

namespace {

const std::string kCli = PLG_CLI_PATH;
const std::string kProblems = PLG_PROBLEMS_DIR;

std::string problem(const std::string& name) { return kProblems + "/" + name + ".yaml"; }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("plg_cli_" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

// Runs the CLI with stdout/stderr captured in log; returns the exit code.
int run(const std::string& args, std::string* log = nullptr) {
  const auto out = scratch("logs") / "last.txt";
  const std::string cmd = "'" + kCli + "' " + args + " > '" + out.string() + "' 2>&1";
  const int st = std::system(cmd.c_str());
  if (log) {
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    *log = ss.str();
  }
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST(Cli, SolveZeroProblem) {
  const auto dir = scratch("zero");
  ASSERT_EQ(run("solve " + problem("zero") + " -o " + dir.string()), 0);
  for (const char* f : {"u.csv", "N.csv", "gap_history.csv", "certificate.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto j = read_json(dir / "certificate.json");
  EXPECT_TRUE(j["certified"].get<bool>());
  EXPECT_EQ(j["div_residual"].get<double>(), 0.0);
  EXPECT_EQ(j["trace_residual"].get<double>(), 0.0);
  EXPECT_EQ(j["gap"].get<double>(), 0.0);
}

TEST(Cli, SolveCalibrationAndRecertify) {
  const auto dir = scratch("ramp");
  ASSERT_EQ(run("solve " + problem("calibration_ramp") + " -o " + dir.string()), 0);
  const auto j = read_json(dir / "certificate.json");
  EXPECT_NEAR(j["primal"].get<double>(), 1.0, 1e-4);
  EXPECT_TRUE(fs::exists(dir / "N_faces.csv"));

  const std::string base = "certify " + problem("calibration_ramp") + " --u " + (dir / "u.csv").string() + " --N " +
                           (dir / "N.csv").string();
  EXPECT_EQ(run(base + " --faces " + (dir / "N_faces.csv").string() + " -o " + (dir / "again.json").string()), 0);
  const auto again = read_json(dir / "again.json");
  EXPECT_EQ(again["primal"], j["primal"]);
  EXPECT_EQ(again["dual"], j["dual"]);
}

TEST(Cli, CertifyCorruptedAndMismatched) {
  const auto dir = scratch("corrupt");
  const auto pf = load_problem(problem("calibration_ramp"));
  const auto& dom = pf.spec.dom;
  ScalarField u = dom.scalar();
  for (const auto& c : dom.cells()) u(c.i, c.j) = dom.center(c).x;
  VectorField N = dom.vector({1, 0});
  write_text((dir / "u.csv").string(), scalar_csv(u, dom.h()));
  write_text((dir / "N.csv").string(), vector_csv(N, dom.h()));
  const std::string base = "certify " + problem("calibration_ramp") + " --u " + (dir / "u.csv").string() + " --N ";
  EXPECT_EQ(run(base + (dir / "N.csv").string()), 0);
  N(3, 3) = {0, 1};
  write_text((dir / "bad.csv").string(), vector_csv(N, dom.h()));
  std::string log;
  EXPECT_EQ(run(base + (dir / "bad.csv").string(), &log), 2);
  EXPECT_NE(log.find("alignment_defect"), std::string::npos) << log;
  write_text((dir / "small.csv").string(), vector_csv(VectorField(3, 3), dom.h()));
  EXPECT_EQ(run(base + (dir / "small.csv").string(), &log), 1);
  EXPECT_NE(log.find("3x3"), std::string::npos) << log;
}

TEST(Cli, BadStepSizes) {
  std::string log;
  EXPECT_EQ(run("solve " + problem("bad_steps") + " -o " + scratch("bad").string(), &log), 1);
  EXPECT_NE(log.find("tau*sigma*L^2 <= 1"), std::string::npos) << log;
  EXPECT_NE(log.find("bad_steps.yaml:"), std::string::npos) << log;
}

TEST(Cli, DivergentProblemExitsTwo) {
  const auto dir = scratch("divergent");
  std::string log;
  ASSERT_EQ(run("solve " + problem("divergent") + " -o " + dir.string(), &log), 2) << log;
  const auto j = read_json(dir / "certificate.json");
  EXPECT_FALSE(j["certified"].get<bool>());
  EXPECT_TRUE(j["diverging"].get<bool>());
  EXPECT_FALSE(j["existence_satisfied"].get<bool>());
}

TEST(Cli, Levelsets) {
  const auto dir = scratch("levels");
  const auto pf = load_problem(problem("rectangle"));
  const auto& dom = pf.spec.dom;
  ScalarField u = dom.scalar();
  for (const auto& c : dom.cells()) u(c.i, c.j) = c.i < 3 ? 1.0 : 0.0;
  write_text((dir / "u.csv").string(), scalar_csv(u, dom.h()));
  std::string log;
  ASSERT_EQ(run("levelsets " + problem("rectangle") + " --u " + (dir / "u.csv").string() +
                    " --lambda 0.5 --lambda 2 -o " + (dir / "out").string(),
                &log),
            0)
      << log;
  const auto set0 = parse_scalar_csv(read_text((dir / "out" / "set_0.csv").string()));
  EXPECT_EQ(set0.field.values(), u.values());
  const auto set1 = parse_scalar_csv(read_text((dir / "out" / "set_1.csv").string()));
  for (double v : set1.field.values()) EXPECT_EQ(v, 0.0);
  const auto table = read_text((dir / "out" / "levelsets.csv").string());
  EXPECT_NE(table.find("2,0,0,true"), std::string::npos) << table;

  u(2, 2) = 0.0;  // dent
  write_text((dir / "dent.csv").string(), scalar_csv(u, dom.h()));
  EXPECT_EQ(run("levelsets " + problem("rectangle") + " --u " + (dir / "dent.csv").string() + " --lambda 0.5 -o " +
                (dir / "out2").string()),
            2);
}

TEST(Cli, Barrier) {
  std::string log;
  EXPECT_EQ(run("barrier " + problem("spike") + " --radius 2", &log), 2);
  EXPECT_NE(log.find("4,5,false"), std::string::npos) << log;
  EXPECT_EQ(run("barrier " + problem("spike") + " --radius 4", &log), 1);
  EXPECT_NE(log.find("16-cell cap"), std::string::npos) << log;
}

TEST(Cli, Oracle) {
  const auto dir = scratch("oracle");
  std::string log;
  EXPECT_EQ(run("oracle " + problem("tiny_dirichlet") + " -o " + (dir / "u.csv").string(), &log), 0) << log;
  EXPECT_NE(log.find("candidates=1953125"), std::string::npos) << log;
  EXPECT_EQ(run("oracle " + problem("calibration_ramp"), &log), 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("solve"), 1);
  EXPECT_EQ(run("solve /nonexistent.yaml -o " + scratch("none").string()), 1);
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST(Cli, SeedIsAccepted) {
  const auto dir = scratch("seed");
  EXPECT_EQ(run("--seed 11 solve " + problem("zero") + " -o " + dir.string()), 0);
}
