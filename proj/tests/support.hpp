// Shared test helpers: fixture access, a random program generator over the
// calendar domain, and small brute-force oracles that do not reuse the
// library's own search or matching code.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gpe.hpp"

namespace gpe::testing {

namespace fs = std::filesystem;

inline fs::path fixture_path(const std::string& rel) { return fs::path(GPE_FIXTURE_DIR) / rel; }

inline std::string read_fixture(const std::string& rel) {
  std::ifstream in(fixture_path(rel), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + rel);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DomainSchema calendar() {
  DomainParse p = parse_domain(read_fixture("calendar.gtd"));
  if (!p.ok()) throw std::runtime_error("calendar.gtd does not parse");
  return p.schema;
}

inline SchemaPtr calendar_ptr() { return std::make_shared<const DomainSchema>(calendar()); }

inline std::vector<Instruction> program_of(std::string_view text) {
  ProgramParse p = parse_program(text);
  if (!p.ok()) throw std::runtime_error(p.diagnostics.front().to_string());
  return p.instructions;
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  for (auto l : split_lines(text)) {
    auto t = trim(l);
    if (!t.empty() && t[0] != ';') out.emplace_back(t);
  }
  return out;
}

struct CorpusFile {
  std::string name;
  WorldState initial;
  std::vector<Instruction> program;
};

inline std::vector<CorpusFile> fixture_corpus() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fixture_path("corpus")))
    if (e.path().extension() == ".gtp") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<CorpusFile> out;
  for (const auto& f : files) {
    CorpusFile c{f.stem().string(), {}, program_of(read_fixture("corpus/" + f.filename().string()))};
    fs::path facts = f;
    facts.replace_extension(".facts");
    if (fs::exists(facts)) c.initial = parse_state(read_fixture("corpus/" + facts.filename().string()));
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<CorpusEntry> traces_of(const std::vector<CorpusFile>& files, const DomainSchema& schema) {
  auto shared = std::make_shared<const DomainSchema>(schema);
  std::vector<CorpusEntry> out;
  for (const auto& f : files) {
    RunResult r = run_program(f.program, shared, f.initial);
    if (!r.ok()) throw std::runtime_error(f.name + ": " + r.diagnostics.front().to_string());
    out.push_back({f.name, f.initial, extract_trace(r.graph)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random programs over the calendar domain: straight-line operations (some
// completed after adjoining), conditionals with two branch trees, spliced
// trees, never-executed trees, links and refers.

struct GeneratedProgram {
  WorldState initial;
  std::vector<Instruction> program;
  std::size_t conditionals = 0;
};

class ProgramGenerator {
 public:
  explicit ProgramGenerator(std::uint64_t seed) : rng_(seed) {}

  // exactly_one_cond: one two-branch conditional, the rest straight-line.
  GeneratedProgram next(bool exactly_one_cond = false) {
    out_ = {};
    handle_ = 0;
    ops_ = 0;
    events_.clear();
    invoked_creates_.clear();
    all_nodes_.clear();
    links_.clear();
    out_.initial = random_state();
    std::size_t max_ops = 1 + pick(8);
    std::size_t cond_at = exactly_one_cond ? pick(3) : 99;
    for (std::size_t step = 0; ops_ < max_ops; ++step) {
      if (step == cond_at) {
        conditional(max_ops);
        continue;
      }
      if (exactly_one_cond && step > cond_at + 3) break;
      switch (exactly_one_cond ? pick(2) : pick(10)) {
        case 0:
        case 1:
        case 2:
        case 3: straight(); break;
        case 4: pending_straight(); break;
        case 5: conditional(max_ops); break;
        case 6: spliced_tree(max_ops); break;
        case 7: planned_tree(max_ops); break;
        case 8: link(); break;
        case 9: refer(); break;
      }
    }
    if (exactly_one_cond && out_.conditionals == 0) conditional(max_ops + 4);
    return std::move(out_);
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  WorldState random_state() {
    WorldState s;
    s.register_entity({"person", 0});
    s.register_entity({"person", 1});
    s.register_entity({"event", 2});
    s.register_entity({"event", 3});
    for (int h : {9, 10, 12})
      for (std::uint64_t p : {0, 1})
        if (coin(0.4)) s.add_fact({"free", {EntityId{"person", p}, Integer(h)}});
    for (std::uint64_t e : {2, 3}) {
      if (coin(0.6)) s.add_fact({"titled", {EntityId{"event", e}, std::string(coin() ? "lunch" : "sync")}});
      if (coin(0.3)) s.add_fact({"scheduled", {EntityId{"event", e}, Integer(coin() ? 9 : 12)}});
      if (coin(0.3)) s.add_fact({"attending", {EntityId{"person", pick(2)}, EntityId{"event", e}}});
    }
    return s;
  }

  Handle emit_value(ValueSpec v) {
    Handle h = handle_++;
    out_.program.push_back(instr::NewValue{h, std::move(v)});
    all_nodes_.push_back(h);
    return h;
  }

  ValueSpec random_of_type(const TypeName& t) {
    if (t == "string") return Value(std::string(coin() ? "lunch" : (coin() ? "sync" : "review")));
    if (t == "int") return Value(Integer(std::vector<int>{9, 10, 12}[pick(3)]));
    if (t == "person") return Value(EntityId{"person", pick(2)});
    // event: an initial event or the output of an invoked create_event
    if (!invoked_creates_.empty() && coin(0.6)) return OutputRefSpec{invoked_creates_[pick(invoked_creates_.size())], "e"};
    return Value(EntityId{"event", 2 + pick(2)});
  }

  // NewDo plus fully bound arguments, not adjoined.
  Handle bound_do(const OperationSchema& op) {
    std::vector<Handle> vals;
    for (const auto& p : op.inputs) vals.push_back(emit_value(random_of_type(p.type)));
    Handle d = handle_++;
    out_.program.push_back(instr::NewDo{d, op.name});
    all_nodes_.push_back(d);
    for (std::size_t i = 0; i < op.inputs.size(); ++i) out_.program.push_back(instr::SetArg{d, op.inputs[i].name, vals[i]});
    return d;
  }

  const OperationSchema& random_op() { return schema_.operations[pick(schema_.operations.size())]; }

  void straight() {
    const OperationSchema& op = random_op();
    Handle d = bound_do(op);
    out_.program.push_back(instr::Adjoin{d});
    after_invoke(op, d);
  }

  void pending_straight() {
    const OperationSchema& op = random_op();
    Handle d = handle_++;
    out_.program.push_back(instr::NewDo{d, op.name});
    all_nodes_.push_back(d);
    out_.program.push_back(instr::Adjoin{d});
    for (const auto& p : op.inputs) {
      Handle v = emit_value(random_of_type(p.type));
      out_.program.push_back(instr::SetArg{d, p.name, v});
    }
    after_invoke(op, d);
  }

  void after_invoke(const OperationSchema& op, Handle d) {
    ++ops_;
    if (op.name == "create_event") invoked_creates_.push_back(d);
  }

  Handle tree_of(std::size_t n) {
    std::vector<Handle> members;
    for (std::size_t i = 0; i < n; ++i) members.push_back(bound_do(random_op()));
    Handle t = handle_++;
    out_.program.push_back(instr::NewTree{t, members});
    all_nodes_.push_back(t);
    return t;
  }

  void conditional(std::size_t max_ops) {
    std::size_t left = max_ops > ops_ ? max_ops - ops_ : 1;
    Handle then_tree = tree_of(1 + pick(std::min<std::size_t>(2, left)));
    Handle else_tree = tree_of(1 + pick(std::min<std::size_t>(2, left)));
    Formula f;
    std::vector<std::pair<std::string, Handle>> args;
    switch (pick(4)) {
      case 0: break;  // always then
      case 1:
      case 2: {
        Handle x = emit_value(random_of_type("event"));
        Handle y = emit_value(random_of_type("string"));
        Atom a{"titled", {ParamRef{"x"}, ParamRef{"y"}}, {}};
        f.conjuncts.push_back(pick(2) ? Condition::pos_of(a) : Condition::neg_of(a));
        args = {{"x", x}, {"y", y}};
        break;
      }
      case 3: {
        Handle p = emit_value(random_of_type("person"));
        Atom a{"free", {ParamRef{"p"}, Value(Integer(9))}, {}};
        f.conjuncts.push_back(Condition::pos_of(a));
        args = {{"p", p}};
        break;
      }
    }
    Handle c = handle_++;
    out_.program.push_back(instr::NewCond{c, f, args});
    all_nodes_.push_back(c);
    if (coin()) {
      out_.program.push_back(instr::AttachBranch{c, Branch::Then, then_tree});
      out_.program.push_back(instr::AttachBranch{c, Branch::Else, else_tree});
    } else {
      out_.program.push_back(instr::AttachBranch{c, Branch::Else, else_tree});
      out_.program.push_back(instr::AttachBranch{c, Branch::Then, then_tree});
    }
    if (coin(0.3)) link();
    out_.program.push_back(instr::Adjoin{c});
    ++out_.conditionals;
    ops_ += 2;
  }

  void spliced_tree(std::size_t max_ops) {
    Handle t = tree_of(1 + pick(std::min<std::size_t>(2, max_ops - ops_)));
    out_.program.push_back(instr::Adjoin{t});
    ++ops_;
  }

  void planned_tree(std::size_t max_ops) {
    tree_of(1 + pick(std::min<std::size_t>(2, max_ops - ops_)));
    ++ops_;
  }

  void link() {
    if (all_nodes_.size() < 2) return;
    Handle a = all_nodes_[pick(all_nodes_.size())], b = all_nodes_[pick(all_nodes_.size())];
    std::string label = coin() ? "depends_on" : "about";
    if (!links_.insert({a, b, label}).second) return;
    out_.program.push_back(instr::Link{a, b, label});
  }

  void refer() {
    if (invoked_creates_.empty()) return;
    Handle h = handle_++;
    out_.program.push_back(instr::Refer{h, "create_event", "e"});
    all_nodes_.push_back(h);
  }

  std::mt19937_64 rng_;
  DomainSchema schema_ = calendar();
  GeneratedProgram out_;
  Handle handle_ = 0;
  std::size_t ops_ = 0;
  std::vector<Handle> events_;
  std::vector<Handle> invoked_creates_;
  std::vector<Handle> all_nodes_;
  std::set<std::tuple<Handle, Handle, std::string>> links_;
};

inline bool is_planning(const Instruction& ins) {
  return std::holds_alternative<instr::NewTree>(ins) || std::holds_alternative<instr::Link>(ins) ||
         std::holds_alternative<instr::NewDo>(ins) || std::holds_alternative<instr::NewValue>(ins) ||
         std::holds_alternative<instr::NewCond>(ins) || std::holds_alternative<instr::AttachBranch>(ins);
}

// ---------------------------------------------------------------------------
// Naive STRIPS application: rebuilds the fact list from scratch with linear
// scans. Returns nullopt when the precondition does not hold.

struct OracleResult {
  std::vector<Fact> facts;  // sorted
  Binding outputs;
};

inline Value oracle_term(const Term& t, const Binding& b) {
  if (auto p = std::get_if<ParamRef>(&t)) return b.at(p->name);
  return std::get<Value>(t);
}

inline Fact oracle_ground(const Atom& a, const Binding& b) {
  Fact f{a.predicate, {}};
  for (const auto& t : a.args) f.args.push_back(oracle_term(t, b));
  return f;
}

inline bool oracle_member(const std::vector<Fact>& facts, const Fact& f) {
  for (const auto& g : facts)
    if (g.predicate == f.predicate && g.args == f.args) return true;
  return false;
}

inline std::optional<OracleResult> oracle_apply(const std::vector<Fact>& facts, std::uint64_t next_serial,
                                                const OperationSchema& op, const Binding& inputs) {
  for (const auto& c : op.precondition.conjuncts) {
    bool ok = true;
    switch (c.kind) {
      case CondKind::Pos: ok = oracle_member(facts, oracle_ground(c.atom, inputs)); break;
      case CondKind::Neg: ok = !oracle_member(facts, oracle_ground(c.atom, inputs)); break;
      case CondKind::Eq: ok = oracle_term(c.lhs, inputs) == oracle_term(c.rhs, inputs); break;
      case CondKind::Neq: ok = !(oracle_term(c.lhs, inputs) == oracle_term(c.rhs, inputs)); break;
    }
    if (!ok) return std::nullopt;
  }
  OracleResult r;
  Binding all = inputs;
  for (const auto& p : op.outputs) {
    r.outputs[p.name] = EntityId{p.type, next_serial};
    all[p.name] = EntityId{p.type, next_serial++};
  }
  std::vector<Fact> dels, adds;
  for (const auto& a : op.deletes) dels.push_back(oracle_ground(a, all));
  for (const auto& a : op.adds) adds.push_back(oracle_ground(a, all));
  for (const auto& f : facts)
    if (!oracle_member(dels, f) && !oracle_member(r.facts, f)) r.facts.push_back(f);
  for (const auto& f : adds)
    if (!oracle_member(r.facts, f)) r.facts.push_back(f);
  std::sort(r.facts.begin(), r.facts.end());
  return r;
}

// ---------------------------------------------------------------------------
// Goal check by trying every assignment of placeholder tokens to entities.

inline bool oracle_goal(const Example& ex, const FactSet& facts) {
  std::vector<std::string> vars;
  std::map<std::string, TypeName> var_type;
  std::set<EntityId> named;
  std::set<std::string> goal_text;
  for (const auto& f : ex.goal) {
    goal_text.insert(format_pattern_fact(f));
    for (const auto& a : f.args) {
      if (a.var) {
        if (!var_type.count(*a.var)) vars.push_back(*a.var);
        var_type[*a.var] = std::get<EntityId>(a.value).type;
      } else if (auto e = std::get_if<EntityId>(&a.value)) {
        named.insert(*e);
      }
    }
  }
  if (ex.mode == ExampleMode::ExactFinal && goal_text.size() != facts.size()) return false;
  std::set<EntityId> pool;
  for (const auto& f : facts)
    for (const auto& v : f.args)
      if (auto e = std::get_if<EntityId>(&v); e && !named.count(*e)) pool.insert(*e);
  std::vector<EntityId> candidates(pool.begin(), pool.end());
  std::map<std::string, EntityId> assign;
  std::function<bool(std::size_t)> go = [&](std::size_t i) -> bool {
    if (i == vars.size()) {
      for (const auto& f : ex.goal) {
        Fact g{f.predicate, {}};
        for (const auto& a : f.args) g.args.push_back(a.var ? Value(assign.at(*a.var)) : a.value);
        if (!facts.count(g)) return false;
      }
      return true;
    }
    for (const auto& e : candidates) {
      if (e.type != var_type[vars[i]]) continue;
      bool used = false;
      for (const auto& [k, v] : assign) used = used || v == e;
      if (used) continue;
      assign[vars[i]] = e;
      if (go(i + 1)) return true;
      assign.erase(vars[i]);
    }
    return false;
  };
  return go(0);
}

// Every candidate of exactly `length` steps over the calendar-style value
// universe, by plain recursion with no pruning.
inline void enumerate_candidates(const DomainSchema& schema, const std::vector<Value>& constants, std::size_t length,
                                 const std::function<void(const Candidate&)>& visit) {
  Candidate c;
  std::function<void()> go = [&]() {
    if (c.size() == length) {
      visit(c);
      return;
    }
    for (const auto& op : schema.operations) {
      std::vector<std::vector<StepArg>> choices;
      for (const auto& p : op.inputs) {
        std::vector<StepArg> opts;
        for (const auto& v : constants)
          if (types_compatible(p.type, type_of(v))) opts.push_back(v);
        for (std::size_t s = 0; s < c.size(); ++s)
          for (const auto& o : schema.find_operation(c.steps[s].op)->outputs)
            if (types_compatible(p.type, o.type)) opts.push_back(StepRef{s, o.name});
        choices.push_back(std::move(opts));
      }
      std::function<void(std::size_t, CandidateStep&)> bind = [&](std::size_t k, CandidateStep& step) {
        if (k == choices.size()) {
          c.steps.push_back(step);
          go();
          c.steps.pop_back();
          return;
        }
        for (const auto& a : choices[k]) {
          step.args.emplace_back(op.inputs[k].name, a);
          bind(k + 1, step);
          step.args.pop_back();
        }
      };
      CandidateStep step{op.name, {}};
      bind(0, step);
    }
  };
  go();
}

inline std::vector<Value> example_constants(const std::vector<Example>& examples) {
  std::set<Value> s;
  for (const auto& ex : examples) {
    for (const auto& f : ex.initial.facts()) s.insert(f.args.begin(), f.args.end());
    for (const auto& f : ex.goal)
      for (const auto& a : f.args)
        if (!a.var) s.insert(a.value);
  }
  return {s.begin(), s.end()};
}

inline bool oracle_consistent(const Candidate& c, const Example& ex, const SchemaPtr& schema) {
  RunResult r = run_program(lower_candidate(c), schema, ex.initial);
  return r.ok() && oracle_goal(ex, r.graph.state().facts());
}

// Non-overlapping leftmost-first count of `needle` in `hay` by direct scan.
inline std::size_t oracle_count(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + needle.size() <= hay.size();) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
      ++n;
      i += needle.size();
    } else {
      ++i;
    }
  }
  return n;
}

// First candidate in enumeration order, up to max_ops, consistent with every example.
inline std::optional<Candidate> oracle_first(const DomainSchema& schema, const std::vector<Example>& examples, std::size_t max_ops,
                                             std::size_t* consistent_count = nullptr) {
  auto shared = std::make_shared<const DomainSchema>(schema);
  auto constants = example_constants(examples);
  for (std::size_t len = 0; len <= max_ops; ++len) {
    std::optional<Candidate> first;
    enumerate_candidates(schema, constants, len, [&](const Candidate& c) {
      bool ok = true;
      for (const auto& ex : examples) ok = ok && oracle_consistent(c, ex, shared);
      if (!ok) return;
      if (consistent_count) ++*consistent_count;
      if (!first) first = c;
    });
    if (first) return first;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Macro soundness helpers: random calendar-like states and a step-by-step
// fold of a template's constituent operations.

class StateSampler {
 public:
  explicit StateSampler(std::uint64_t seed) : rng_(seed) {}

  WorldState state(const DomainSchema& schema) {
    WorldState s;
    for (std::uint64_t p : {0, 1}) s.register_entity({"person", p});
    for (std::uint64_t e : {2, 3, 4}) s.register_entity({"event", e});
    for (const auto& pred : schema.predicates) {
      int n = static_cast<int>(rng_() % 4);
      for (int i = 0; i < n; ++i) {
        Fact f{pred.name, {}};
        for (const auto& t : pred.param_types) f.args.push_back(value(t));
        s.add_fact(std::move(f));
      }
    }
    return s;
  }

  Value value(const TypeName& type) {
    if (type == "any") return value(std::vector<std::string>{"string", "int", "person", "event"}[rng_() % 4]);
    if (type == "string") return std::string(rng_() % 2 ? "lunch" : "sync");
    if (type == "int") return Integer(std::vector<int>{9, 10, 12}[rng_() % 3]);
    if (type == "bool") return rng_() % 2 == 0;
    if (type == "person") return EntityId{"person", rng_() % 2};
    return EntityId{"event", 2 + rng_() % 3};
  }

 private:
  std::mt19937_64 rng_;
};

// Applies the template's steps in order with slot values `slots`; nullopt as
// soon as one step's precondition fails.
inline std::optional<WorldState> fold_template(const Template& t, const DomainSchema& schema, const WorldState& s,
                                               const std::vector<Value>& slots) {
  WorldState state = s;
  std::vector<Binding> outs;
  for (const auto& step : t.steps) {
    Binding in;
    for (const auto& [role, arg] : step.args) {
      if (auto x = std::get_if<SlotArg>(&arg))
        in[role] = slots.at(x->slot);
      else
        in[role] = outs.at(std::get<LocalRef>(arg).step).at(std::get<LocalRef>(arg).param);
    }
    try {
      auto [next, o] = apply_operation(state, *schema.find_operation(step.op), in);
      state = std::move(next);
      outs.push_back(std::move(o));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PreconditionFailed) throw;
      return std::nullopt;
    }
  }
  return state;
}

struct MacroCheck {
  std::size_t agreed = 0;
  std::size_t pre_held = 0;
  std::vector<std::string> mismatches;
};

// Compares the macro against the fold of its template on `samples` random states.
inline MacroCheck check_macro(const Template& t, const OperationSchema& macro, const DomainSchema& schema,
                              std::size_t samples, std::uint64_t seed) {
  StateSampler sampler(seed);
  MacroCheck out;
  for (std::size_t i = 0; i < samples; ++i) {
    WorldState s = sampler.state(schema);
    std::vector<Value> slots;
    Binding in;
    for (const auto& p : macro.inputs) {
      slots.push_back(sampler.value(p.type));
      in[p.name] = slots.back();
    }
    std::optional<WorldState> via_macro;
    try {
      via_macro = apply_operation(s, macro, in).first;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PreconditionFailed) throw;
    }
    auto via_steps = fold_template(t, schema, s, slots);
    bool ok = via_macro.has_value() == via_steps.has_value() &&
              (!via_macro || equivalent_up_to_renaming(via_macro->facts(), via_steps->facts(),
                                                       [&](const EntityId& e) { return s.knows(e); }));
    if (ok)
      ++out.agreed;
    else if (out.mismatches.size() < 3)
      out.mismatches.push_back(macro.name + " on " + s.canonical() + " with " + format_binding(in));
    out.pre_held += via_macro.has_value();
  }
  return out;
}

}  // namespace gpe::testing
