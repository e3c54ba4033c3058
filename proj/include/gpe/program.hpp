// Graph programs: instruction lists, the `.gtp` text format and the executor.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gpe/error.hpp"
#include "gpe/graph.hpp"
#include "gpe/sexpr.hpp"

namespace gpe {

// Program-level node name (`n<id>` in `.gtp` text). Handles are dense from 0 in
// declaration order; graph NodeIds diverge because invocations create nodes too.
using Handle = std::size_t;

struct OutputRefSpec {
  Handle do_node = 0;
  std::string param;
  friend bool operator==(const OutputRefSpec&, const OutputRefSpec&) = default;
};

using ValueSpec = std::variant<Value, OutputRefSpec>;

namespace instr {
struct NewValue { Handle id; ValueSpec value; friend bool operator==(const NewValue&, const NewValue&) = default; };
struct NewDo { Handle id; std::string op; friend bool operator==(const NewDo&, const NewDo&) = default; };
struct SetArg { Handle node; std::string role; Handle value; friend bool operator==(const SetArg&, const SetArg&) = default; };
struct Adjoin { Handle node; friend bool operator==(const Adjoin&, const Adjoin&) = default; };
struct NewCond {
  Handle id;
  Formula formula;
  std::vector<std::pair<std::string, Handle>> args;
  friend bool operator==(const NewCond&, const NewCond&) = default;
};
struct AttachBranch { Handle cond; Branch which; Handle tree; friend bool operator==(const AttachBranch&, const AttachBranch&) = default; };
struct NewTree { Handle id; std::vector<Handle> members; friend bool operator==(const NewTree&, const NewTree&) = default; };
struct Link { Handle src; Handle dst; std::string label; friend bool operator==(const Link&, const Link&) = default; };
struct Refer { Handle id; std::string op; std::string param; friend bool operator==(const Refer&, const Refer&) = default; };
}  // namespace instr

using Instruction = std::variant<instr::NewValue, instr::NewDo, instr::SetArg, instr::Adjoin, instr::NewCond,
                                 instr::AttachBranch, instr::NewTree, instr::Link, instr::Refer>;

// Handle introduced by a declaring instruction.
inline std::optional<Handle> declared_handle(const Instruction& ins) {
  return std::visit(
      [](const auto& i) -> std::optional<Handle> {
        if constexpr (requires { i.id; }) return i.id;
        else return std::nullopt;
      },
      ins);
}

inline std::string handle_name(Handle h) { return "n" + std::to_string(h); }

inline std::string format_value_spec(const ValueSpec& v) {
  if (auto r = std::get_if<OutputRefSpec>(&v)) return handle_name(r->do_node) + "." + r->param;
  return format_value(std::get<Value>(v));
}

inline std::string format_instruction(const Instruction& ins) {
  struct Printer {
    std::string operator()(const instr::NewValue& i) const { return handle_name(i.id) + " = value " + format_value_spec(i.value); }
    std::string operator()(const instr::NewDo& i) const { return handle_name(i.id) + " = do " + i.op; }
    std::string operator()(const instr::SetArg& i) const {
      return "arg " + handle_name(i.node) + " " + i.role + " " + handle_name(i.value);
    }
    std::string operator()(const instr::Adjoin& i) const { return "adjoin " + handle_name(i.node); }
    std::string operator()(const instr::NewCond& i) const {
      std::string out = handle_name(i.id) + " = cond " + format_formula(i.formula);
      for (const auto& [role, h] : i.args) out += " " + role + " " + handle_name(h);
      return out;
    }
    std::string operator()(const instr::AttachBranch& i) const {
      return "branch " + handle_name(i.cond) + " " + std::string(branch_name(i.which)) + " " + handle_name(i.tree);
    }
    std::string operator()(const instr::NewTree& i) const {
      std::string out = handle_name(i.id) + " = tree";
      for (Handle h : i.members) out += " " + handle_name(h);
      return out;
    }
    std::string operator()(const instr::Link& i) const {
      return "link " + handle_name(i.src) + " " + handle_name(i.dst) + " " + i.label;
    }
    std::string operator()(const instr::Refer& i) const { return handle_name(i.id) + " = refer " + i.op + " " + i.param; }
  };
  return std::visit(Printer{}, ins);
}

inline std::string print_program(const std::vector<Instruction>& program) {
  std::string out;
  for (const auto& ins : program) out += format_instruction(ins) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::optional<Handle> parse_handle_text(std::string_view s) {
  if (s.size() < 2 || s[0] != 'n' || s.size() > 12) return std::nullopt;
  Handle h = 0;
  for (char c : s.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    h = h * 10 + static_cast<Handle>(c - '0');
  }
  return h;
}

inline Handle parse_handle(const SExpr& e) {
  if (e.kind == SExpr::Kind::Sym)
    if (auto h = parse_handle_text(e.text)) return *h;
  throw Error(ErrorCode::SyntaxError, "expected a node name n<id>", e.pos);
}

inline ValueSpec parse_value_spec(const SExpr& e) {
  switch (e.kind) {
    case SExpr::Kind::Str: return Value(e.text);
    case SExpr::Kind::Num: return Value(*Integer::parse(e.text));
    case SExpr::Kind::Sym: {
      if (auto v = parse_bare_value(e.text)) return *v;
      auto dot = e.text.find('.');
      if (dot != std::string::npos && dot + 1 < e.text.size())
        if (auto h = parse_handle_text(std::string_view(e.text).substr(0, dot)))
          return OutputRefSpec{*h, e.text.substr(dot + 1)};
      break;
    }
    default: break;
  }
  throw Error(ErrorCode::SyntaxError, "expected a literal or n<id>.<output>", e.pos);
}

inline const std::string& expect_sym(const SExpr& e, std::string_view what) {
  if (e.kind != SExpr::Kind::Sym) throw Error(ErrorCode::SyntaxError, "expected " + std::string(what), e.pos);
  return e.text;
}

inline Instruction parse_instruction_tokens(const std::vector<SExpr>& t, SourcePos line_pos) {
  auto need = [&](std::size_t n, const char* shape) {
    if (t.size() != n) throw Error(ErrorCode::SyntaxError, std::string("expected: ") + shape, line_pos);
  };
  if (t.empty()) throw Error(ErrorCode::SyntaxError, "empty instruction", line_pos);
  if (t[0].kind == SExpr::Kind::Sym && !parse_handle_text(t[0].text)) {
    const auto& verb = t[0].text;
    if (verb == "arg") {
      need(4, "arg n<i> <role> n<j>");
      return instr::SetArg{parse_handle(t[1]), expect_sym(t[2], "a role"), parse_handle(t[3])};
    }
    if (verb == "adjoin") {
      need(2, "adjoin n<i>");
      return instr::Adjoin{parse_handle(t[1])};
    }
    if (verb == "branch") {
      need(4, "branch n<cond> then|else n<tree>");
      const auto& w = expect_sym(t[2], "then or else");
      if (w != "then" && w != "else") throw Error(ErrorCode::SyntaxError, "expected then or else", t[2].pos);
      return instr::AttachBranch{parse_handle(t[1]), w == "then" ? Branch::Then : Branch::Else, parse_handle(t[3])};
    }
    if (verb == "link") {
      need(4, "link n<i> n<j> <label>");
      return instr::Link{parse_handle(t[1]), parse_handle(t[2]), expect_sym(t[3], "a label")};
    }
    throw Error(ErrorCode::SyntaxError, "unknown instruction '" + verb + "'", t[0].pos);
  }
  Handle id = parse_handle(t[0]);
  if (t.size() < 3 || !t[1].is_sym("=")) throw Error(ErrorCode::SyntaxError, "expected n<id> = ...", line_pos);
  const auto& kind = expect_sym(t[2], "value, do, cond, tree or refer");
  if (kind == "value") {
    need(4, "n<id> = value <literal>");
    return instr::NewValue{id, parse_value_spec(t[3])};
  }
  if (kind == "do") {
    need(4, "n<id> = do <op-name>");
    return instr::NewDo{id, expect_sym(t[3], "an operation name")};
  }
  if (kind == "refer") {
    need(5, "n<id> = refer <op-name> <param>");
    return instr::Refer{id, expect_sym(t[3], "an operation name"), expect_sym(t[4], "an output name")};
  }
  if (kind == "tree") {
    instr::NewTree tree{id, {}};
    for (std::size_t i = 3; i < t.size(); ++i) tree.members.push_back(parse_handle(t[i]));
    return tree;
  }
  if (kind == "cond") {
    if (t.size() < 4 || (t.size() - 4) % 2 != 0)
      throw Error(ErrorCode::SyntaxError, "expected: n<id> = cond (<literals>) [<role> n<j>]*", line_pos);
    instr::NewCond cond{id, parse_formula_list(t[3]), {}};
    for (std::size_t i = 4; i < t.size(); i += 2)
      cond.args.emplace_back(expect_sym(t[i], "a role"), parse_handle(t[i + 1]));
    return cond;
  }
  throw Error(ErrorCode::SyntaxError, "unknown declaration '" + kind + "'", t[2].pos);
}

}  // namespace detail

// Parses a single `.gtp` line (no density check).
inline Instruction parse_instruction(std::string_view line, int line_no = 1) {
  ReadResult read = read_sexprs(line);
  if (!read.ok()) {
    Diagnostic d = read.diagnostics.front();
    throw Error(d.code, d.message, {line_no, d.pos.col});
  }
  try {
    return detail::parse_instruction_tokens(read.forms, {line_no, 1});
  } catch (const Error& e) {
    throw Error(e.code(), e.detail(), {line_no, e.pos().col ? e.pos().col : 1});
  }
}

struct ProgramParse {
  std::vector<Instruction> instructions;
  std::vector<SourcePos> positions;  // one per instruction
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
};

// Parses `.gtp` text: one instruction per line, `;` comments, declarations dense from n0.
inline ProgramParse parse_program(std::string_view text) {
  ProgramParse out;
  int line_no = 0;
  Handle next = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == ';') continue;
    try {
      Instruction ins = parse_instruction(line, line_no);
      if (auto h = declared_handle(ins)) {
        if (*h != next)
          throw Error(ErrorCode::SyntaxError,
                      "declared " + handle_name(*h) + " but the next free name is " + handle_name(next), {line_no, 1});
        ++next;
      }
      out.instructions.push_back(std::move(ins));
      out.positions.push_back({line_no, static_cast<int>(raw.find_first_not_of(" \t")) + 1});
    } catch (const Error& e) {
      out.diagnostics.push_back(e.diagnostic());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

struct StepResult {
  std::optional<Handle> declared;
  std::optional<InvocationOutcome> outcome;
};

// Executes instructions one at a time against a graph, mapping handles to nodes.
class ProgramRunner {
 public:
  ProgramRunner(SchemaPtr schema, WorldState initial) : graph_(std::move(schema), std::move(initial)) {}

  const ProgramGraph& graph() const { return graph_; }
  ProgramGraph& graph() { return graph_; }
  const std::vector<NodeId>& handles() const { return handles_; }
  Handle next_handle() const { return handles_.size(); }

  NodeId node_of(Handle h) const {
    if (h >= handles_.size()) throw Error(ErrorCode::DanglingNodeId, handle_name(h) + " is not declared");
    return handles_[h];
  }

  // Throws Error on instruction errors; invocation failures come back in the outcome.
  StepResult execute(const Instruction& ins) {
    if (auto h = declared_handle(ins); h && *h != handles_.size())
      throw Error(ErrorCode::DanglingNodeId,
                  "declared " + handle_name(*h) + " but the next free name is " + handle_name(handles_.size()));
    StepResult r;
    std::visit([&](const auto& i) { run(i, r); }, ins);
    return r;
  }

 private:
  void declare(NodeId id, StepResult& r) {
    r.declared = handles_.size();
    handles_.push_back(id);
  }

  void run(const instr::NewValue& i, StepResult& r) {
    if (auto ref = std::get_if<OutputRefSpec>(&i.value))
      declare(graph_.new_output_ref(node_of(ref->do_node), ref->param), r);
    else
      declare(graph_.new_value(std::get<Value>(i.value)), r);
  }
  void run(const instr::NewDo& i, StepResult& r) { declare(graph_.new_do(i.op), r); }
  void run(const instr::SetArg& i, StepResult& r) {
    r.outcome = graph_.set_arg(node_of(i.node), i.role, node_of(i.value));
  }
  void run(const instr::Adjoin& i, StepResult& r) { r.outcome = graph_.adjoin(node_of(i.node)); }
  void run(const instr::NewCond& i, StepResult& r) {
    std::vector<std::pair<std::string, NodeId>> args;
    for (const auto& [role, h] : i.args) args.emplace_back(role, node_of(h));
    declare(graph_.new_cond(i.formula, args), r);
  }
  void run(const instr::AttachBranch& i, StepResult&) { graph_.attach_branch(node_of(i.cond), i.which, node_of(i.tree)); }
  void run(const instr::NewTree& i, StepResult& r) {
    std::vector<NodeId> members;
    for (Handle h : i.members) members.push_back(node_of(h));
    declare(graph_.new_tree(members), r);
  }
  void run(const instr::Link& i, StepResult&) { graph_.link(node_of(i.src), node_of(i.dst), i.label); }
  void run(const instr::Refer& i, StepResult& r) { declare(graph_.refer(i.op, i.param), r); }

  ProgramGraph graph_;
  std::vector<NodeId> handles_;
};

struct RunResult {
  ProgramGraph graph;
  std::vector<NodeId> handles;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
};

// Runs instructions in order; the first error or failed invocation halts
// execution and the partial graph is returned with one diagnostic.
inline RunResult run_program(const std::vector<Instruction>& program, SchemaPtr schema, const WorldState& initial) {
  ProgramRunner runner(std::move(schema), initial);
  std::vector<Diagnostic> diags;
  for (std::size_t i = 0; i < program.size(); ++i) {
    try {
      StepResult r = runner.execute(program[i]);
      if (r.outcome && r.outcome->failed()) {
        diags.push_back({ErrorCode::InvocationFailed,
                         std::string(code_name(r.outcome->failure)) + ": " + r.outcome->reason, {}, i});
        break;
      }
    } catch (const Error& e) {
      diags.push_back({e.code(), e.detail(), {}, i});
      break;
    }
  }
  return RunResult{runner.graph(), runner.handles(), std::move(diags)};
}

}  // namespace gpe
