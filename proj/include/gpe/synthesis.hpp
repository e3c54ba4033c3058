// Enumerative programming-by-example over straight-line graph programs.
//
// Candidates are enumerated by iterative deepening on the number of domain
// operations; within one length the order is lexicographic by (operation in
// schema order, binding in value-universe order), so the first consistent
// candidate is both minimal and canonical.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "gpe/error.hpp"
#include "gpe/program.hpp"
#include "gpe/schema.hpp"
#include "gpe/world.hpp"

namespace gpe {

enum class ExampleMode { ExactFinal, GoalSubset };

struct Example {
  std::string name;
  WorldState initial;
  std::vector<PatternFact> goal;
  ExampleMode mode = ExampleMode::GoalSubset;
};

// `.gte` text:
//   example <name> exact|subset
//   init:
//   <facts>
//   goal:
//   <facts, entities may be ?type or ?type#tag>
//   end
inline std::vector<Example> parse_examples(std::string_view text) {
  std::vector<Example> out;
  enum class Section { None, Header, Init, Goal } section = Section::None;
  int line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == ';') continue;
    if (line.starts_with("example ")) {
      if (section != Section::None) throw Error(ErrorCode::SyntaxError, "missing 'end'", {line_no, 1});
      auto rest = trim(line.substr(8));
      auto space = rest.find(' ');
      if (space == std::string_view::npos) throw Error(ErrorCode::SyntaxError, "expected: example <name> exact|subset", {line_no, 1});
      auto mode = trim(rest.substr(space + 1));
      Example ex;
      ex.name = std::string(rest.substr(0, space));
      if (mode == "exact") ex.mode = ExampleMode::ExactFinal;
      else if (mode == "subset") ex.mode = ExampleMode::GoalSubset;
      else throw Error(ErrorCode::SyntaxError, "mode must be exact or subset", {line_no, 1});
      out.push_back(std::move(ex));
      section = Section::Header;
      continue;
    }
    if (section == Section::None) throw Error(ErrorCode::SyntaxError, "expected 'example'", {line_no, 1});
    if (line == "end") {
      section = Section::None;
      continue;
    }
    if (line.starts_with("init:")) {
      section = Section::Init;
      line = trim(line.substr(5));
      if (line.empty()) continue;
    } else if (line.starts_with("goal:")) {
      section = Section::Goal;
      line = trim(line.substr(5));
      if (line.empty()) continue;
    }
    switch (section) {
      case Section::Init: out.back().initial.add_fact(parse_fact(line, line_no)); break;
      case Section::Goal: out.back().goal.push_back(parse_pattern_fact(line, line_no)); break;
      default: throw Error(ErrorCode::SyntaxError, "expected 'init:' or 'goal:'", {line_no, 1});
    }
  }
  if (section != Section::None) throw Error(ErrorCode::SyntaxError, "missing 'end'", {line_no, 1});
  return out;
}

inline std::string format_pattern_fact(const PatternFact& f) {
  std::string out = f.predicate + "(";
  for (std::size_t i = 0; i < f.args.size(); ++i) {
    if (i) out += ',';
    out += f.args[i].var ? *f.args[i].var : format_value(f.args[i].value);
  }
  return out + ")";
}

// Placeholders bind injectively to entities not named elsewhere in the goal.
inline bool goal_satisfied(const Example& ex, const FactSet& final_facts) {
  std::vector<PatternFact> goal;
  std::set<std::string> seen;
  std::set<EntityId> named;
  for (const auto& f : ex.goal) {
    if (!seen.insert(format_pattern_fact(f)).second) continue;
    goal.push_back(f);
    for (const auto& a : f.args)
      if (auto e = std::get_if<EntityId>(&a.value); e && !a.var) named.insert(*e);
  }
  if (ex.mode == ExampleMode::ExactFinal && goal.size() != final_facts.size()) return false;
  return match_pattern(goal, final_facts, [&](const EntityId& e) { return !named.count(e); });
}

// ---------------------------------------------------------------------------

struct StepRef {
  std::size_t step = 0;
  std::string param;
  friend auto operator<=>(const StepRef&, const StepRef&) = default;
};

using StepArg = std::variant<Value, StepRef>;

inline std::string format_step_arg(const StepArg& a) {
  if (auto r = std::get_if<StepRef>(&a)) return "step" + std::to_string(r->step) + "." + r->param;
  return format_value(std::get<Value>(a));
}

struct CandidateStep {
  std::string op;
  // In the operation's input order.
  std::vector<std::pair<std::string, StepArg>> args;
  friend bool operator==(const CandidateStep&, const CandidateStep&) = default;
};

struct Candidate {
  std::vector<CandidateStep> steps;
  std::size_t size() const { return steps.size(); }
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

inline std::string format_candidate(const Candidate& c) {
  std::string out;
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    out += std::to_string(i) + ": " + c.steps[i].op + "(";
    for (std::size_t j = 0; j < c.steps[i].args.size(); ++j) {
      if (j) out += ", ";
      out += c.steps[i].args[j].first + "=" + format_step_arg(c.steps[i].args[j].second);
    }
    out += ")\n";
  }
  return out;
}

struct SynthesisConfig {
  std::size_t max_ops = 4;
  std::vector<Value> extra_constants;
  std::uint64_t node_budget = 1'000'000;
  std::chrono::milliseconds deadline{std::chrono::minutes(5)};
  // Speculative workers; the result does not depend on this.
  std::size_t workers = 1;
};

using UniverseEntry = std::variant<Value, StepRef>;

// Constants from the examples (sorted), then extra constants, then the outputs
// of the prefix steps in (step, param) order. Duplicates keep their first slot.
inline std::vector<UniverseEntry> value_universe(const std::vector<Example>& examples, const DomainSchema& schema,
                                                 const SynthesisConfig& config, const Candidate& prefix = {}) {
  std::set<Value> constants;
  for (const auto& ex : examples) {
    for (const auto& f : ex.initial.facts())
      for (const auto& v : f.args) constants.insert(v);
    for (const auto& f : ex.goal)
      for (const auto& a : f.args)
        if (!a.var) constants.insert(a.value);
  }
  std::vector<UniverseEntry> out(constants.begin(), constants.end());
  for (const auto& v : config.extra_constants)
    if (!constants.count(v)) {
      constants.insert(v);
      out.push_back(v);
    }
  for (std::size_t i = 0; i < prefix.steps.size(); ++i) {
    const auto* op = schema.find_operation(prefix.steps[i].op);
    if (!op) continue;
    for (const auto& p : op->outputs) out.push_back(StepRef{i, p.name});
  }
  return out;
}

// Canonical lowering: constant values first, then per step NewDo, output
// references for that step, SetArgs in input order, Adjoin.
inline std::vector<Instruction> lower_candidate(const Candidate& c) {
  std::vector<Instruction> program;
  Handle next = 0;
  std::vector<std::vector<Handle>> const_handles(c.steps.size());
  for (std::size_t i = 0; i < c.steps.size(); ++i)
    for (const auto& [role, arg] : c.steps[i].args)
      if (auto v = std::get_if<Value>(&arg)) {
        const_handles[i].push_back(next);
        program.push_back(instr::NewValue{next++, *v});
      }
  std::vector<Handle> do_handles;
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    Handle d = next++;
    do_handles.push_back(d);
    program.push_back(instr::NewDo{d, c.steps[i].op});
    std::vector<Handle> arg_handles;
    std::size_t k = 0;
    for (const auto& [role, arg] : c.steps[i].args) {
      if (auto r = std::get_if<StepRef>(&arg)) {
        arg_handles.push_back(next);
        program.push_back(instr::NewValue{next++, OutputRefSpec{do_handles.at(r->step), r->param}});
      } else {
        arg_handles.push_back(const_handles[i][k++]);
      }
    }
    for (std::size_t j = 0; j < c.steps[i].args.size(); ++j)
      program.push_back(instr::SetArg{d, c.steps[i].args[j].first, arg_handles[j]});
    program.push_back(instr::Adjoin{d});
  }
  return program;
}

// Runs the lowered candidate as a graph program and applies the example's mode rule.
inline bool consistent(const Candidate& candidate, const Example& example, const DomainSchema& schema) {
  try {
    auto result = run_program(lower_candidate(candidate), std::make_shared<const DomainSchema>(schema), example.initial);
    if (!result.ok() || result.graph.has_pending()) return false;
    return goal_satisfied(example, result.graph.state().facts());
  } catch (const Error&) {
    return false;
  }
}

enum class SynthesisStatus { Found, SearchExhausted, DeadlineExceeded };

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::SearchExhausted;
  Candidate candidate;
  std::vector<Instruction> program;
  // Candidate steps tried, summed in canonical order up to the answer.
  std::uint64_t explored = 0;

  bool found() const { return status == SynthesisStatus::Found; }
};

namespace detail {

class Synthesizer {
 public:
  Synthesizer(const DomainSchema& schema, const std::vector<Example>& examples, const SynthesisConfig& config)
      : schema_(schema),
        examples_(examples),
        config_(config),
        constants_(value_universe(examples, schema, config)),
        deadline_(std::chrono::steady_clock::now() + config.deadline) {}

  SynthesisResult run() {
    SynthesisResult result;
    Frame root;
    for (const auto& ex : examples_) root.states.push_back(ex.initial);
    root.outputs.resize(examples_.size());

    ++result.explored;
    if (goals_hold(root)) return found(result, {});

    for (std::size_t length = 1; length <= config_.max_ops; ++length) {
      std::vector<Option> options = expand(root, {}, 0);
      std::vector<SubResult> subs(options.size());
      std::atomic<std::size_t> best{options.size()};
      std::atomic<bool> timed_out{false};
      auto solve = [&](std::size_t i) {
        if (i > best.load()) return;
        SubResult& s = subs[i];
        s.ran = true;
        s.count = 1;
        Candidate c;
        c.steps.push_back(options[i].step);
        try {
          if (std::chrono::steady_clock::now() > deadline_) throw Deadline{};
          s.found = options[i].frame && dfs(*options[i].frame, c, length, s.count, s.candidate);
        } catch (const Deadline&) {
          timed_out = true;
          s.timed_out = true;
        }
        if (s.found) {
          std::size_t cur = best.load();
          while (i < cur && !best.compare_exchange_weak(cur, i)) {
          }
        }
      };
      run_blocks(options.size(), solve, [&](std::size_t i, std::uint64_t& total) {
        total += subs[i].count;
        return subs[i].found || subs[i].timed_out || result.explored + total > config_.node_budget;
      });

      for (std::size_t i = 0; i < options.size(); ++i) {
        const SubResult& s = subs[i];
        if (!s.ran || s.timed_out) {
          result.status = SynthesisStatus::DeadlineExceeded;
          return result;
        }
        result.explored += s.count;
        if (result.explored > config_.node_budget) {
          result.explored = config_.node_budget;
          result.status = SynthesisStatus::SearchExhausted;
          return result;
        }
        if (s.found) return found(result, s.candidate);
      }
      if (timed_out) {
        result.status = SynthesisStatus::DeadlineExceeded;
        return result;
      }
    }
    result.status = SynthesisStatus::SearchExhausted;
    return result;
  }

 private:
  struct Deadline {};

  struct Frame {
    std::vector<WorldState> states;
    // outputs[example][step]
    std::vector<std::vector<Binding>> outputs;
  };

  struct Option {
    CandidateStep step;
    std::optional<Frame> frame;  // empty when some example rejects the step
  };

  struct SubResult {
    bool ran = false;
    bool found = false;
    bool timed_out = false;
    std::uint64_t count = 0;
    Candidate candidate;
  };

  SynthesisResult found(SynthesisResult& r, Candidate c) {
    r.status = SynthesisStatus::Found;
    r.program = lower_candidate(c);
    r.candidate = std::move(c);
    return r;
  }

  // With one worker subtrees run in order and stop as soon as the merge would.
  template <typename F, typename Stop>
  void run_blocks(std::size_t n, F&& solve, Stop&& stop) {
    std::size_t workers = std::max<std::size_t>(1, std::min(config_.workers, n));
    if (workers == 1) {
      std::uint64_t total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        solve(i);
        if (stop(i, total)) return;
      }
      return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) solve(i);
      });
    for (auto& t : pool) t.join();
  }

  bool goals_hold(const Frame& f) const {
    for (std::size_t e = 0; e < examples_.size(); ++e)
      if (!goal_satisfied(examples_[e], f.states[e].facts())) return false;
    return true;
  }

  // All (operation, binding) extensions of a frame, in canonical order.
  std::vector<Option> expand(const Frame& frame, const Candidate& prefix, std::size_t depth) const {
    std::vector<Option> out;
    for_each_step(prefix, depth, [&](CandidateStep step) {
      out.push_back(Option{step, apply(frame, step)});
      return true;
    });
    return out;
  }

  template <typename F>
  bool for_each_step(const Candidate& prefix, std::size_t depth, F&& visit) const {
    for (const auto& op : schema_.operations) {
      std::vector<std::vector<StepArg>> choices;
      for (const auto& p : op.inputs) {
        std::vector<StepArg> opts;
        for (const auto& u : constants_)
          if (types_compatible(p.type, type_of(std::get<Value>(u)))) opts.push_back(std::get<Value>(u));
        for (std::size_t s = 0; s < depth; ++s) {
          const auto* prev = schema_.find_operation(prefix.steps[s].op);
          for (const auto& out : prev->outputs)
            if (types_compatible(p.type, out.type)) opts.push_back(StepRef{s, out.name});
        }
        if (opts.empty()) break;
        choices.push_back(std::move(opts));
      }
      if (choices.size() != op.inputs.size()) continue;
      std::vector<std::size_t> idx(choices.size(), 0);
      while (true) {
        CandidateStep step{op.name, {}};
        for (std::size_t k = 0; k < idx.size(); ++k) step.args.emplace_back(op.inputs[k].name, choices[k][idx[k]]);
        if (!visit(std::move(step))) return false;
        // Odometer with the first input most significant.
        std::size_t k = idx.size();
        while (k > 0 && ++idx[k - 1] == choices[k - 1].size()) idx[--k] = 0;
        if (k == 0) break;
      }
    }
    return true;
  }

  std::optional<Frame> apply(const Frame& frame, const CandidateStep& step) const {
    const auto* op = schema_.find_operation(step.op);
    Frame next;
    next.states.reserve(frame.states.size());
    next.outputs = frame.outputs;
    for (std::size_t e = 0; e < frame.states.size(); ++e) {
      Binding inputs;
      for (const auto& [role, arg] : step.args) {
        if (auto r = std::get_if<StepRef>(&arg))
          inputs.emplace(role, frame.outputs[e][r->step].at(r->param));
        else
          inputs.emplace(role, std::get<Value>(arg));
      }
      try {
        auto [state, outputs] = apply_operation(frame.states[e], *op, inputs);
        next.states.push_back(std::move(state));
        next.outputs[e].push_back(std::move(outputs));
      } catch (const Error&) {
        return std::nullopt;
      }
    }
    return next;
  }

  bool dfs(const Frame& frame, Candidate& prefix, std::size_t length, std::uint64_t& count, Candidate& answer) const {
    if (prefix.size() == length) {
      if (goals_hold(frame)) {
        answer = prefix;
        return true;
      }
      return false;
    }
    bool hit = false;
    for_each_step(prefix, prefix.size(), [&](CandidateStep step) {
      if (++count > config_.node_budget) return false;
      if ((count & 1023) == 0 && std::chrono::steady_clock::now() > deadline_) throw Deadline{};
      auto next = apply(frame, step);
      if (!next) return true;
      prefix.steps.push_back(std::move(step));
      hit = dfs(*next, prefix, length, count, answer);
      prefix.steps.pop_back();
      return !hit && count <= config_.node_budget;
    });
    return hit;
  }

  const DomainSchema& schema_;
  const std::vector<Example>& examples_;
  const SynthesisConfig& config_;
  std::vector<UniverseEntry> constants_;
  std::chrono::steady_clock::time_point deadline_;
};

}  // namespace detail

inline SynthesisResult synthesize(const DomainSchema& schema, const std::vector<Example>& examples,
                                  const SynthesisConfig& config) {
  if (examples.empty()) throw Error(ErrorCode::SyntaxError, "synthesis needs at least one example");
  return detail::Synthesizer(schema, examples, config).run();
}

}  // namespace gpe
