#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using namespace gpe;
using namespace gpe::testing;
using cli::read_file;
using cli::write_file;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult gpe_cli(std::vector<std::string> args, const std::string& input = "") {
  std::ostringstream out, err;
  std::istringstream in(input);
  CliResult r;
  r.code = cli::run_cli(args, out, err, in);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fx(const std::string& rel) { return fixture_path(rel).string(); }

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("gpe_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

}  // namespace

TEST(Cli, Check) {
  EXPECT_EQ(gpe_cli({"check", fx("calendar.gtd")}).code, 0);
  CliResult bad = gpe_cli({"check", fx("bad/undeclared_predicate.gtd")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("undeclared_predicate.gtd:5:9: UndeclaredPredicate"), std::string::npos) << bad.err;
  EXPECT_EQ(gpe_cli({"check", "/nonexistent/x.gtd"}).code, 3);
  EXPECT_EQ(gpe_cli({}).code, 3);
  EXPECT_EQ(gpe_cli({"frobnicate"}).code, 3);
}

TEST(Cli, RunPrintsFinalFacts) {
  CliResult r = gpe_cli({"run", fx("corpus/03_sync.gtp"), "--domain", fx("calendar.gtd"), "--init",
                          fx("corpus/03_sync.facts"), "--log"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "0 n3 create_event {t=\"sync\"} -> {e=event#1}\n"
            "1 n6 schedule {e=event#1, h=10} -> {}\n"
            "2 n7 invite {e=event#1, p=person#0} -> {}\n"
            "attending(person#0,event#1)\n"
            "free(person#0,10)\n"
            "scheduled(event#1,10)\n"
            "titled(event#1,\"sync\")\n");
}

TEST(Cli, RunEmptyAndDangling) {
  TempDir dir;
  write_file(dir / "empty.gtp", "");
  write_file(dir / "init.facts", "free(person#0,9)\n");
  CliResult empty = gpe_cli({"run", (dir / "empty.gtp").string(), "--domain", fx("calendar.gtd"), "--init",
                              (dir / "init.facts").string()});
  EXPECT_EQ(empty.code, 0);
  EXPECT_EQ(empty.out, "free(person#0,9)\n");

  write_file(dir / "dangling.gtp", "n0 = value \"x\"\nn1 = do create_event\narg n1 t n7\nadjoin n1\n");
  CliResult dangling = gpe_cli({"run", (dir / "dangling.gtp").string(), "--domain", fx("calendar.gtd")});
  EXPECT_EQ(dangling.code, 1);
  EXPECT_NE(dangling.err.find("dangling.gtp:3:"), std::string::npos) << dangling.err;
  EXPECT_NE(dangling.err.find("DanglingNodeId"), std::string::npos);
  EXPECT_TRUE(dangling.out.empty());
}

TEST(Cli, DotToFile) {
  TempDir dir;
  CliResult r = gpe_cli({"dot", fx("corpus/01_lunch.gtp"), "--domain", fx("calendar.gtd"), "--out",
                          (dir / "g.dot").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::string dot = read_file((dir / "g.dot").string());
  EXPECT_TRUE(dot.starts_with("digraph program {\n"));
  EXPECT_NE(dot.find("Do\\ncreate_event"), std::string::npos);
}

TEST(Cli, TranslateWritesOneProgramPerLine) {
  TempDir dir;
  write_file(dir / "in.lsp", "(Yield (now))\n\n; skipped\n(Yield (toDate 3))\n(broken\n");
  CliResult r = gpe_cli({"trans", (dir / "in.lsp").string(), (dir / "out").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("in.lsp:5:"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("UnbalancedParens"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "out/0001.gtp"));
  EXPECT_TRUE(fs::exists(dir / "out/0004.gtp"));
  EXPECT_FALSE(fs::exists(dir / "out/0005.gtp"));
  EXPECT_NE(r.out.find("translated 2 of 3 expressions"), std::string::npos) << r.out;
  // the emitted programs run against the emitted domain
  CliResult run = gpe_cli({"run", (dir / "out/0004.gtp").string(), "--domain", (dir / "out/domain.gtd").string()});
  EXPECT_EQ(run.code, 0) << run.err;
}

TEST(Cli, Synth) {
  CliResult r = gpe_cli({"synth", fx("tasks/lunch_at_noon.gte"), "--domain", fx("calendar.gtd")});
  ASSERT_EQ(r.code, 0) << r.err;
  ProgramParse p = parse_program(r.out);
  ASSERT_TRUE(p.ok());
  RunResult run = run_program(p.instructions, calendar_ptr(), {});
  ASSERT_TRUE(run.ok());
  EXPECT_EQ(run.graph.invocation_log().size(), 2u);

  CliResult none = gpe_cli({"synth", fx("tasks/contradiction.gte"), "--domain", fx("calendar.gtd"), "--max-ops", "1"});
  EXPECT_EQ(none.code, 2);
  EXPECT_TRUE(none.out.starts_with("SearchExhausted")) << none.out;

  EXPECT_EQ(gpe_cli({"synth", fx("tasks/make_lunch.gte"), "--domain", fx("calendar.gtd"), "--mode", "sometimes"}).code,
            3);
}

TEST(Cli, Compress) {
  TempDir dir;
  CliResult r = gpe_cli({"compress", fx("corpus"), "--domain", fx("calendar.gtd"), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("m_create_event_schedule"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("total gain 1\n"), std::string::npos) << r.out;
  CliResult check = gpe_cli({"check", (dir / "out/domain.gtd").string()});
  EXPECT_EQ(check.code, 0) << check.err;
  // rewritten programs still produce the original final states
  for (const auto& name : {"01_lunch", "03_sync"}) {
    std::vector<std::string> orig = {"run", fx(std::string("corpus/") + name + ".gtp"), "--domain", fx("calendar.gtd")};
    std::vector<std::string> redo = {"run", (dir / "out" / (std::string(name) + ".gtp")).string(), "--domain",
                                     (dir / "out/domain.gtd").string()};
    if (fs::exists(fixture_path(std::string("corpus/") + name + ".facts"))) {
      orig.insert(orig.end(), {"--init", fx(std::string("corpus/") + name + ".facts")});
      redo.insert(redo.end(), {"--init", fx(std::string("corpus/") + name + ".facts")});
    }
    CliResult a = gpe_cli(orig), b = gpe_cli(redo);
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(a.out, b.out) << name;
  }
}

TEST(Cli, ReplKeepsGoingAfterErrors) {
  CliResult r = gpe_cli({"repl", "--domain", fx("calendar.gtd")},
                         "n0 = value \"x\"\n"
                         "n1 = do create_event\n"
                         "arg n1 t n0\n"
                         "adjoin n1\n"
                         "bogus\n"
                         ":state\n"
                         "arg n9 t n0\n"
                         ":quit\n"
                         "n2 = value 1\n");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "n0: NotInvoked\n"
            "n1: NotInvoked\n"
            "NotInvoked\n"
            "Invoked e=event#0\n"
            "error: <repl>:5:1: SyntaxError: unknown instruction 'bogus'\n"
            "titled(event#0,\"x\")\n"
            "error: <repl>:7:1: DanglingNodeId: n9 is not declared\n");
}
