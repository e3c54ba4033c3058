#include <gtest/gtest.h>

#include "support.hpp"

using namespace gpe;
using namespace gpe::testing;

TEST(ProgramText, ParsesEveryInstructionForm) {
  ProgramParse p = parse_program(
      "n0 = value \"lunch\"\n"
      "n1 = do create_event\n"
      "arg n1 t n0\n"
      "  adjoin n1\n"
      "; comment\n"
      "n2 = refer create_event e\n"
      "n3 = value n1.e\n"
      "n4 = tree\n"
      "n5 = tree\n"
      "n6 = cond ((titled x \"lunch\") (not (scheduled x 9))) x n2\n"
      "branch n6 then n4\n"
      "branch n6 else n5\n"
      "link n4 n1 depends_on\n"
      "n7 = value -3\n"
      "n8 = value true\n"
      "n9 = value event#0\n");
  ASSERT_TRUE(p.ok()) << p.diagnostics.front().to_string();
  ASSERT_EQ(p.instructions.size(), 15u);
  EXPECT_EQ(p.positions[3].line, 4);
  EXPECT_EQ(p.positions[3].col, 3);
  EXPECT_EQ(p.positions[4].line, 6);
  EXPECT_EQ(std::get<instr::NewValue>(p.instructions[5]).value, ValueSpec(OutputRefSpec{1, "e"}));
  const auto& cond = std::get<instr::NewCond>(p.instructions[8]);
  EXPECT_EQ(cond.formula.conjuncts.size(), 2u);
  EXPECT_EQ(cond.args.size(), 1u);
  ProgramParse again = parse_program(print_program(p.instructions));
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(again.instructions, p.instructions);
}

TEST(ProgramText, Errors) {
  auto first = [](const char* text) { return parse_program(text).diagnostics.at(0); };
  EXPECT_EQ(first("n1 = value 1\n").code, ErrorCode::SyntaxError);
  EXPECT_EQ(first("n0 = value 1\nn0 = value 2\n").pos.line, 2);
  EXPECT_EQ(first("frob n0\n").code, ErrorCode::SyntaxError);
  EXPECT_EQ(first("n0 = value\n").code, ErrorCode::SyntaxError);
  EXPECT_EQ(first("branch n0 maybe n1\n").code, ErrorCode::SyntaxError);
  EXPECT_EQ(first("n0 = value \"abc\n").code, ErrorCode::UnterminatedString);
  EXPECT_EQ(parse_program("\n\n n0 = do\n").diagnostics.at(0).pos.line, 3);
}

TEST(RunProgram, EmptyProgram) {
  WorldState init = parse_state("free(person#0,9)\n");
  RunResult r = run_program({}, calendar_ptr(), init);
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.graph.nodes().empty());
  EXPECT_EQ(r.graph.state().canonical(), init.canonical());
}

TEST(RunProgram, CreateEvent) {
  RunResult r = run_program(program_of("n0 = value \"lunch\"\nn1 = do create_event\narg n1 t n0\nadjoin n1\n"),
                            calendar_ptr(), {});
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.graph.invocation_log().size(), 1u);
  EXPECT_EQ(r.graph.state().canonical(), "titled(event#0,\"lunch\")\n");
}

TEST(RunProgram, DanglingIdHaltsAtIndex) {
  std::vector<Instruction> prog = {instr::NewValue{0, Value(std::string("lunch"))}, instr::NewDo{1, "create_event"},
                                   instr::SetArg{1, "t", 99}, instr::Adjoin{1}};
  RunResult r = run_program(prog, calendar_ptr(), {});
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, ErrorCode::DanglingNodeId);
  EXPECT_EQ(r.diagnostics[0].instruction, 2u);
  EXPECT_EQ(r.graph.nodes().size(), 2u);
}

TEST(RunProgram, FailedInvocationHalts) {
  RunResult r = run_program(program_of("n0 = value person#0\nn1 = value 9\nn2 = do mark_busy\narg n2 p n0\n"
                                       "arg n2 h n1\nadjoin n2\nn3 = value 1\n"),
                            calendar_ptr(), parse_state("titled(person#0,\"x\")\n"));
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, ErrorCode::InvocationFailed);
  EXPECT_EQ(r.diagnostics[0].instruction, 5u);
  EXPECT_NE(r.diagnostics[0].message.find("PreconditionFailed"), std::string::npos);
  EXPECT_EQ(r.handles.size(), 3u);
}

TEST(RunProgram, CorpusFixturesRun) {
  DomainSchema cal = calendar();
  for (const auto& f : fixture_corpus()) {
    RunResult r = run_program(f.program, std::make_shared<const DomainSchema>(cal), f.initial);
    EXPECT_TRUE(r.ok()) << f.name;
    EXPECT_FALSE(r.graph.has_pending()) << f.name;
  }
}

TEST(RunProgram, ConditionalProgram) {
  RunResult r = run_program(program_of(
                                "n0 = value \"lunch\"\n"
                                "n1 = do create_event\n"
                                "arg n1 t n0\n"
                                "adjoin n1\n"
                                "n2 = value n1.e\n"
                                "n3 = value 12\n"
                                "n4 = do schedule\n"
                                "arg n4 e n2\n"
                                "arg n4 h n3\n"
                                "n5 = tree n4\n"
                                "n6 = value 9\n"
                                "n7 = do schedule\n"
                                "arg n7 e n2\n"
                                "arg n7 h n6\n"
                                "n8 = tree n7\n"
                                "n9 = cond ((titled x \"lunch\")) x n2\n"
                                "branch n9 then n5\n"
                                "branch n9 else n8\n"
                                "link n8 n1 about\n"
                                "adjoin n9\n"),
                            calendar_ptr(), {});
  ASSERT_TRUE(r.ok()) << r.diagnostics.front().to_string();
  EXPECT_EQ(r.graph.state().canonical(), "scheduled(event#0,12)\ntitled(event#0,\"lunch\")\n");
  EXPECT_EQ(r.graph.node(r.handles[7]).status, NodeStatus::Unexecutable);
}

// Dropping extra-syntactic links never changes the final state.
TEST(ProgramProperties, PlanningIsEffectFree) {
  ProgramGenerator gen(7);
  auto cal = calendar_ptr();
  for (int i = 0; i < 150; ++i) {
    GeneratedProgram p = gen.next();
    RunResult full = run_program(p.program, cal, p.initial);
    if (!full.ok()) continue;
    std::vector<Instruction> pruned;
    for (const auto& ins : p.program) {
      if (std::holds_alternative<instr::Link>(ins)) continue;
      pruned.push_back(ins);
    }
    RunResult without_links = run_program(pruned, cal, p.initial);
    ASSERT_TRUE(without_links.ok());
    EXPECT_EQ(without_links.graph.state().canonical(), full.graph.state().canonical());
    EXPECT_EQ(full.graph.state().canonical(), replay_log(full.graph).canonical());
  }
}

TEST(ProgramProperties, ExactlyOneBranch) {
  ProgramGenerator gen(13);
  auto cal = calendar_ptr();
  int checked = 0;
  for (int i = 0; i < 200 && checked < 50; ++i) {
    GeneratedProgram p = gen.next(true);
    RunResult r = run_program(p.program, cal, p.initial);
    if (!r.ok()) continue;
    ++checked;
    for (const auto& n : r.graph.nodes()) {
      if (n.kind != NodeKind::Cond || n.status != NodeStatus::Evaluated) continue;
      NodeId active = *n.branches[static_cast<std::size_t>(*n.taken)];
      NodeId inactive = *n.branches[1 - static_cast<std::size_t>(*n.taken)];
      for (NodeId m : r.graph.node(active).members) EXPECT_EQ(r.graph.node(m).status, NodeStatus::Invoked);
      for (NodeId m : r.graph.node(inactive).members) EXPECT_EQ(r.graph.node(m).status, NodeStatus::Unexecutable);
    }
  }
  EXPECT_GE(checked, 20);
}
