#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "support.hpp"
#include "wpd/cli.hpp"

namespace wpd {
namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kShell = testing::data_path("massshell.ctx");

TEST(Cli, DeriveExamples) {
  auto r = run({"derive", kShell, "--expr", "f", "--wrt", "p1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "(p1/E)*D[f,E] + D[f,p1]\n");
  r = run({"derive", kShell, "--expr", "E", "--wrt", "p1"});
  EXPECT_EQ(r.out, "p1/E\n");
  r = run({"derive", kShell, "--expr", "E^2", "--wrt", "E", "--plain"});
  EXPECT_EQ(r.out, "2*E\n");
}

TEST(Cli, UnknownVariableIsParseError) {
  auto r = run({"derive", kShell, "--expr", "f", "--wrt", "q"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("^"), std::string::npos);
  EXPECT_NE(r.err.find("bytes 0-1"), std::string::npos);
}

TEST(Cli, CommutatorExamples) {
  auto r = run({"commutator", kShell, "--a", "W[p1]", "--b", "D[E]", "--apply", "f"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "(p1/E^2)*D[f,E]\n");
  r = run({"commutator", kShell, "--a", "W[p1]", "--b", "W[p2]", "--apply", "f"});
  EXPECT_EQ(r.out, "0\n");
  r = run({"commutator", kShell, "--a", "W[p1]", "--b", "W[p2]", "--apply", "f", "--ordering", "paper", "--feynman"});
  EXPECT_EQ(r.out, "(i*B3/E^3)*D[f,E]\n");
  r = run({"commutator", kShell, "--a", "W[p1]", "--b", "D[E]"});
  EXPECT_EQ(r.out, "(p1/E^2)*D[E]\n");
}

TEST(Cli, ScenarioWritesFiles) {
  auto dir = std::filesystem::temp_directory_path() / "wpd_cli_scenario";
  std::filesystem::remove_all(dir);
  auto r = run({"scenario", "mass-shell", "--dim", "3", "--feynman", "--ordering", "paper", "--out", dir.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("[x0,x1] = -(p1/E^2)*D[E]"), std::string::npos);
  EXPECT_NE(r.out.find("[x1,x2] = -(i*B3/E^3)*D[E]"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "mass-shell.ctx"));
  EXPECT_TRUE(std::filesystem::exists(dir / "mass-shell-table.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "mass-shell-table.txt"));
  // The written context reads back.
  auto ctx = parse_context(testing::slurp((dir / "mass-shell.ctx").string()));
  EXPECT_EQ(ctx.ordering(), OrderingMode::paper);

  r = run({"scenario", "retarded", "--trajectory", "0.5*tp", "--out", dir.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("dtp/dt = 2"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "retarded.ctx"));
  std::filesystem::remove_all(dir);
}

TEST(Cli, VerifyExamples) {
  auto r = run({"verify", kShell, "--lhs", "W[p1] D[E] - D[E] W[p1] @ f", "--rhs", "(p1/E^2)*D[f,E]", "--samples",
                "100", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  r = run({"verify", kShell, "--lhs", "sqrt(m^2 + p1^2 + p2^2 + p3^2)*p2", "--fd-wrt", "p1", "--samples", "50"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  r = run({"verify", kShell, "--lhs", "p1", "--rhs", "p2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("sample 0"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"scenario", "unknown"}).code, 2);
  EXPECT_EQ(run({"derive", kShell, "--expr", "p1 +* 2", "--wrt", "p1"}).code, 2);
  EXPECT_EQ(run({"derive", "/nonexistent.ctx", "--expr", "f", "--wrt", "p1"}).code, 2);
  EXPECT_EQ(run({"derive", kShell, "--expr", "f", "--wrt", "p1", "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"derive", testing::data_path("invalid.ctx"), "--expr", "E", "--wrt", "p1"}).code, 3);
  EXPECT_EQ(run({"scenario", "retarded", "--trajectory", "2*tp"}).code, 3);
  EXPECT_EQ(run({"verify", testing::data_path("unsolvable.ctx"), "--lhs", "E", "--rhs", "E"}).code, 4);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, VerifyJsonIsByteStable) {
  std::vector<std::string> args = {"verify", kShell, "--lhs", "W[p1] D[E] - D[E] W[p1] @ f", "--rhs",
                                   "(p1/E^2)*D[f,E]", "--seed", "11", "--format", "json"};
  auto a = run(args), b = run(args);
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  auto j = nlohmann::json::parse(a.out);
  for (const char* key : {"command", "context", "result", "samples", "failures", "max_abs_err", "max_rel_err", "verdict"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["verdict"], "pass");
}

TEST(Cli, JsonAndLatexFormats) {
  auto r = run({"derive", kShell, "--expr", "f", "--wrt", "E", "--format", "latex"});
  EXPECT_EQ(r.out, "\\frac{\\partial f}{\\partial E}\n");
  r = run({"derive", kShell, "--expr", "f", "--wrt", "p1", "--format", "json"});
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["command"], "derive");
  EXPECT_EQ(j["result"]["text"], "(p1/E)*D[f,E] + D[f,p1]");
}

}  // namespace
}  // namespace wpd
