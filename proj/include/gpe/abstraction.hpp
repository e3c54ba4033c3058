// Macro induction: traces of executed programs, contiguous template mining,
// STRIPS composition of templates into new operations, and corpus rewriting.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "gpe/error.hpp"
#include "gpe/graph.hpp"
#include "gpe/program.hpp"
#include "gpe/schema.hpp"
#include "gpe/synthesis.hpp"
#include "gpe/world.hpp"

namespace gpe {

struct ExternalSlot {
  std::size_t slot = 0;
  Value value;
  friend bool operator==(const ExternalSlot&, const ExternalSlot&) = default;
};

struct InternalRef {
  std::size_t step = 0;
  std::string param;
  friend bool operator==(const InternalRef&, const InternalRef&) = default;
};

using TraceArg = std::variant<ExternalSlot, InternalRef>;

struct TraceStep {
  std::string op;
  std::vector<std::pair<std::string, TraceArg>> args;  // operation input order
  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct Trace {
  std::vector<TraceStep> steps;
  std::size_t size() const { return steps.size(); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

struct CorpusEntry {
  std::string name;
  WorldState initial;
  Trace trace;
};

inline std::string format_trace(const Trace& t) {
  std::string out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    out += std::to_string(i) + ": " + t.steps[i].op + "(";
    for (std::size_t j = 0; j < t.steps[i].args.size(); ++j) {
      if (j) out += ", ";
      const auto& [role, arg] = t.steps[i].args[j];
      out += role + "=";
      if (auto x = std::get_if<ExternalSlot>(&arg))
        out += "$" + std::to_string(x->slot) + ":" + format_value(x->value);
      else
        out += "@" + std::to_string(std::get<InternalRef>(arg).step) + "." + std::get<InternalRef>(arg).param;
    }
    out += ")\n";
  }
  return out;
}

// Slots are numbered by occurrence. An argument is internal when its value was
// minted by an earlier invocation of the same graph.
inline Trace extract_trace(const ProgramGraph& g) {
  if (g.has_pending()) throw Error(ErrorCode::IncompleteGraph, "the graph has Do nodes still pending on the path");
  Trace t;
  std::map<EntityId, InternalRef> minted;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < g.invocation_log().size(); ++i) {
    const Invocation& inv = g.invocation_log()[i];
    const OperationSchema* op = g.schema().find_operation(g.node(inv.node).op);
    TraceStep step{op->name, {}};
    for (const auto& p : op->inputs) {
      const Value& v = inv.inputs.at(p.name);
      auto e = std::get_if<EntityId>(&v);
      auto it = e ? minted.find(*e) : minted.end();
      if (it != minted.end())
        step.args.emplace_back(p.name, it->second);
      else
        step.args.emplace_back(p.name, ExternalSlot{slot++, v});
    }
    for (const auto& p : op->outputs)
      if (auto e = std::get_if<EntityId>(&inv.outputs.at(p.name))) minted.emplace(*e, InternalRef{i, p.name});
    t.steps.push_back(std::move(step));
  }
  return t;
}

inline Candidate trace_candidate(const Trace& t) {
  Candidate c;
  for (const auto& s : t.steps) {
    CandidateStep cs{s.op, {}};
    for (const auto& [role, arg] : s.args) {
      if (auto x = std::get_if<ExternalSlot>(&arg))
        cs.args.emplace_back(role, x->value);
      else
        cs.args.emplace_back(role, StepRef{std::get<InternalRef>(arg).step, std::get<InternalRef>(arg).param});
    }
    c.steps.push_back(std::move(cs));
  }
  return c;
}

inline std::vector<Instruction> lower_trace(const Trace& t) { return lower_candidate(trace_candidate(t)); }

// Folds apply_operation over the trace.
inline WorldState replay_trace(const Trace& t, const DomainSchema& schema, const WorldState& initial) {
  WorldState state = initial;
  std::vector<Binding> outputs;
  for (const auto& s : t.steps) {
    const auto* op = schema.find_operation(s.op);
    if (!op) throw Error(ErrorCode::UnknownOperation, "'" + s.op + "'");
    Binding inputs;
    for (const auto& [role, arg] : s.args) {
      if (auto x = std::get_if<ExternalSlot>(&arg))
        inputs.emplace(role, x->value);
      else
        inputs.emplace(role, outputs.at(std::get<InternalRef>(arg).step).at(std::get<InternalRef>(arg).param));
    }
    auto [next, out] = apply_operation(state, *op, inputs);
    state = std::move(next);
    outputs.push_back(std::move(out));
  }
  return state;
}

// Same final facts up to a bijection on entities minted after `initial`.
inline bool same_outcome(const WorldState& initial, const WorldState& a, const WorldState& b) {
  return equivalent_up_to_renaming(a.facts(), b.facts(), [&](const EntityId& e) { return initial.knows(e); });
}

// ---------------------------------------------------------------------------
// Templates

struct SlotArg {
  std::size_t slot = 0;
  friend bool operator==(const SlotArg&, const SlotArg&) = default;
};

// Output of an earlier step of the same template.
struct LocalRef {
  std::size_t step = 0;
  std::string param;
  friend bool operator==(const LocalRef&, const LocalRef&) = default;
};

using TemplateArg = std::variant<SlotArg, LocalRef>;

struct TemplateStep {
  std::string op;
  std::vector<std::pair<std::string, TemplateArg>> args;
  friend bool operator==(const TemplateStep&, const TemplateStep&) = default;
};

struct Template {
  std::vector<TemplateStep> steps;
  std::size_t slots = 0;

  std::size_t size() const { return steps.size(); }
  std::vector<std::string> ops() const {
    std::vector<std::string> out;
    for (const auto& s : steps) out.push_back(s.op);
    return out;
  }
  std::string key() const {
    std::string out;
    for (const auto& s : steps) {
      out += s.op + "(";
      for (const auto& [role, arg] : s.args) {
        out += role + "=";
        if (auto x = std::get_if<SlotArg>(&arg))
          out += "$" + std::to_string(x->slot);
        else
          out += "@" + std::to_string(std::get<LocalRef>(arg).step) + "." + std::get<LocalRef>(arg).param;
        out += ",";
      }
      out += ")";
    }
    return out;
  }
  friend bool operator==(const Template&, const Template&) = default;
};

// Template of trace steps [start, start + len).
inline Template window_template(const Trace& t, std::size_t start, std::size_t len) {
  Template out;
  for (std::size_t i = start; i < start + len; ++i) {
    TemplateStep step{t.steps[i].op, {}};
    for (const auto& [role, arg] : t.steps[i].args) {
      auto r = std::get_if<InternalRef>(&arg);
      if (r && r->step >= start)
        step.args.emplace_back(role, LocalRef{r->step - start, r->param});
      else
        step.args.emplace_back(role, SlotArg{out.slots++});
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

// Outputs of window steps (relative index, param) consumed after the window.
inline std::set<std::pair<std::size_t, std::string>> window_escapes(const Trace& t, std::size_t start, std::size_t len) {
  std::set<std::pair<std::size_t, std::string>> out;
  for (std::size_t i = start + len; i < t.steps.size(); ++i)
    for (const auto& [role, arg] : t.steps[i].args)
      if (auto r = std::get_if<InternalRef>(&arg); r && r->step >= start && r->step < start + len)
        out.emplace(r->step - start, r->param);
  return out;
}

struct Occurrence {
  std::size_t trace = 0;
  std::size_t start = 0;
  friend auto operator<=>(const Occurrence&, const Occurrence&) = default;
};

struct MinedTemplate {
  Template tmpl;
  std::vector<Occurrence> occurrences;  // non-overlapping, leftmost-first
  std::int64_t gain = 0;
};

inline std::int64_t gain(std::size_t k, std::size_t occurrences) {
  return static_cast<std::int64_t>(occurrences) * (static_cast<std::int64_t>(k) - 1) - (static_cast<std::int64_t>(k) + 1);
}

namespace detail {

template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

// All contiguous windows of length >= min_len occurring at least min_count
// times (non-overlapping) across the corpus, sorted by gain descending, then
// operation sequence, then key.
inline std::vector<MinedTemplate> mine_templates(const std::vector<Trace>& corpus, std::size_t min_count,
                                                 std::size_t min_len, std::size_t workers = 1) {
  min_count = std::max<std::size_t>(min_count, 2);
  min_len = std::max<std::size_t>(min_len, 2);
  std::vector<std::map<std::string, std::pair<Template, std::vector<std::size_t>>>> per_trace(corpus.size());
  detail::parallel_for(corpus.size(), workers, [&](std::size_t ti) {
    const Trace& t = corpus[ti];
    auto& found = per_trace[ti];
    for (std::size_t start = 0; start < t.size(); ++start)
      for (std::size_t len = min_len; start + len <= t.size(); ++len) {
        Template tmpl = window_template(t, start, len);
        std::string key = tmpl.key();
        auto [it, fresh] = found.try_emplace(key, std::move(tmpl), std::vector<std::size_t>{});
        it->second.second.push_back(start);
      }
  });

  std::map<std::string, MinedTemplate> merged;
  for (std::size_t ti = 0; ti < corpus.size(); ++ti)
    for (auto& [key, entry] : per_trace[ti]) {
      auto& m = merged.try_emplace(key, MinedTemplate{entry.first, {}, 0}).first->second;
      std::size_t k = entry.first.size();
      std::size_t end = 0;
      bool any = false;
      for (std::size_t start : entry.second) {  // ascending
        if (any && start < end) continue;
        m.occurrences.push_back({ti, start});
        end = start + k;
        any = true;
      }
    }

  std::vector<MinedTemplate> out;
  for (auto& [key, m] : merged) {
    if (m.occurrences.size() < min_count) continue;
    m.gain = gain(m.tmpl.size(), m.occurrences.size());
    out.push_back(std::move(m));
  }
  std::stable_sort(out.begin(), out.end(), [](const MinedTemplate& a, const MinedTemplate& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    auto ao = a.tmpl.ops(), bo = b.tmpl.ops();
    if (ao != bo) return ao < bo;
    return a.tmpl.key() < b.tmpl.key();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Composition

struct NonComposable {
  std::string reason;
};

struct ComposedMacro {
  OperationSchema op;
  // Which template step output each macro output carries.
  std::vector<std::pair<std::size_t, std::string>> output_sources;
};

namespace detail {

class Composer {
 public:
  Composer(const Template& t, const DomainSchema& schema) : t_(t), schema_(schema) {}

  std::variant<ComposedMacro, NonComposable> run(const std::string& name) {
    try {
      return compose(name);
    } catch (const NonComposable& n) {
      return n;
    }
  }

 private:
  static std::string slot_name(std::size_t s) { return "in" + std::to_string(s); }
  static std::string internal_name(std::size_t step, const std::string& param) {
    return "@" + std::to_string(step) + "." + param;
  }
  static bool is_internal(const Term& t) {
    auto p = std::get_if<ParamRef>(&t);
    return p && p->name[0] == '@';
  }

  [[noreturn]] static void fail(std::string reason) { throw NonComposable{std::move(reason)}; }

  ComposedMacro compose(const std::string& name) {
    std::vector<TypeName> slot_types(t_.slots);
    std::vector<std::vector<Param>> step_outputs;
    std::vector<std::map<std::string, Term>> subst(t_.size());
    for (std::size_t j = 0; j < t_.size(); ++j) {
      const OperationSchema* op = schema_.find_operation(t_.steps[j].op);
      if (!op) throw Error(ErrorCode::UnknownOperation, "'" + t_.steps[j].op + "'");
      for (const auto& [role, arg] : t_.steps[j].args) {
        const Param* p = op->find_input(role);
        if (!p) throw Error(ErrorCode::UnknownRole, "'" + role + "' on " + op->name);
        if (auto s = std::get_if<SlotArg>(&arg)) {
          slot_types[s->slot] = p->type;
          subst[j][role] = ParamRef{slot_name(s->slot)};
          types_[slot_name(s->slot)] = p->type;
        } else {
          const auto& r = std::get<LocalRef>(arg);
          subst[j][role] = ParamRef{internal_name(r.step, r.param)};
        }
      }
      for (const auto& p : op->outputs) {
        subst[j][p.name] = ParamRef{internal_name(j, p.name)};
        types_[internal_name(j, p.name)] = p.type;
      }
      step_outputs.push_back(op->outputs);
    }

    std::vector<Atom> adds, dels;
    std::vector<Condition> pre;
    // Effects of earlier steps, for the aliasing check.
    std::vector<Atom> prior_adds, prior_dels;
    for (std::size_t j = 0; j < t_.size(); ++j) {
      const OperationSchema& op = *schema_.find_operation(t_.steps[j].op);
      auto sub = [&](const Atom& a) { return substitute(a, subst[j]); };

      for (const auto& c : op.precondition.conjuncts) {
        switch (c.kind) {
          case CondKind::Pos:
          case CondKind::Neg: {
            Atom f = sub(c.atom);
            for (const auto& a : prior_adds)
              if (aliases(a, f)) fail("precondition " + format_atom(f) + " may alias an earlier add");
            for (const auto& a : prior_dels)
              if (aliases(a, f)) fail("precondition " + format_atom(f) + " may alias an earlier delete");
            bool in_a = contains(adds, f), in_d = contains(dels, f);
            bool internal = mentions_internal(f);
            if (c.kind == CondKind::Pos) {
              if (in_a) break;
              if (in_d) fail("precondition " + format_atom(f) + " was deleted by an earlier step");
              if (internal) fail("precondition " + format_atom(f) + " needs a fact about a fresh entity");
              add_unique(pre, Condition::pos_of(f));
            } else {
              if (in_a) fail("negative precondition " + format_atom(f) + " was added by an earlier step");
              if (in_d || internal) break;
              add_unique(pre, Condition::neg_of(f));
            }
            break;
          }
          case CondKind::Eq:
          case CondKind::Neq: {
            Term l = substitute(c.lhs, subst[j]), r = substitute(c.rhs, subst[j]);
            if (is_internal(l) || is_internal(r)) fail("(in)equality over a fresh entity");
            Condition h = c;
            h.lhs = l;
            h.rhs = r;
            add_unique(pre, h);
            break;
          }
        }
      }

      std::vector<Atom> step_adds, step_dels;
      for (const auto& a : op.adds) step_adds.push_back(sub(a));
      for (const auto& a : op.deletes) step_dels.push_back(sub(a));
      for (const auto& d : step_dels)
        for (const auto& a : prior_adds)
          if (aliases(a, d)) fail("delete " + format_atom(d) + " may alias an earlier add");

      for (const auto& a : step_adds) erase(dels, a);
      for (const auto& d : step_dels) add_unique(dels, d);
      for (const auto& d : step_dels) erase(adds, d);
      for (const auto& a : step_adds) add_unique(adds, a);
      for (const auto& a : step_adds) add_unique(prior_adds, a);
      for (const auto& d : step_dels) add_unique(prior_dels, d);
    }

    // Net deletes on fresh entities are no-ops.
    std::erase_if(dels, [](const Atom& a) { return mentions_internal(a); });

    std::set<std::string> needed;
    for (const auto& a : adds)
      for (const auto& x : a.args)
        if (is_internal(x)) needed.insert(std::get<ParamRef>(x).name);
    std::size_t last = t_.size() - 1;
    for (const auto& p : step_outputs[last]) needed.insert(internal_name(last, p.name));

    ComposedMacro out;
    std::map<std::string, Term> rename;
    for (std::size_t s = 0; s < t_.slots; ++s) {
      out.op.inputs.push_back(Param{slot_name(s), slot_types[s], {}});
      rename[slot_name(s)] = ParamRef{slot_name(s)};
    }
    for (std::size_t j = 0; j < t_.size(); ++j)
      for (const auto& p : step_outputs[j]) {
        std::string iname = internal_name(j, p.name);
        if (!needed.count(iname)) continue;
        std::string oname = "out" + std::to_string(out.op.outputs.size());
        out.op.outputs.push_back(Param{oname, p.type, {}});
        out.output_sources.emplace_back(j, p.name);
        rename[iname] = ParamRef{oname};
      }
    out.op.name = name;
    out.op.origin = Origin::Macro;
    for (const auto& c : pre) {
      Condition h = c;
      if (c.kind == CondKind::Pos || c.kind == CondKind::Neg)
        h.atom = substitute(c.atom, rename);
      else {
        h.lhs = substitute(c.lhs, rename);
        h.rhs = substitute(c.rhs, rename);
      }
      out.op.precondition.conjuncts.push_back(std::move(h));
    }
    for (const auto& a : adds) out.op.adds.push_back(substitute(a, rename));
    for (const auto& a : dels) out.op.deletes.push_back(substitute(a, rename));
    return out;
  }

  static Term substitute(const Term& t, const std::map<std::string, Term>& s) {
    if (auto p = std::get_if<ParamRef>(&t)) {
      auto it = s.find(p->name);
      if (it != s.end()) return it->second;
    }
    return t;
  }
  static Atom substitute(const Atom& a, const std::map<std::string, Term>& s) {
    Atom out{a.predicate, {}, {}};
    for (const auto& x : a.args) out.args.push_back(substitute(x, s));
    return out;
  }

  static bool mentions_internal(const Atom& a) {
    return std::any_of(a.args.begin(), a.args.end(), [](const Term& t) { return is_internal(t); });
  }

  template <typename T>
  static bool contains(const std::vector<T>& v, const T& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  }
  template <typename T>
  static void add_unique(std::vector<T>& v, const T& x) {
    if (!contains(v, x)) v.push_back(x);
  }
  static void erase(std::vector<Atom>& v, const Atom& x) { std::erase(v, x); }

  TypeName term_type(const Term& t) const {
    if (auto p = std::get_if<ParamRef>(&t)) return types_.at(p->name);
    return type_of(std::get<Value>(t));
  }

  // Distinct atoms that become the same fact under some binding of the inputs.
  // Fresh entities never coincide with anything but themselves.
  bool aliases(const Atom& a, const Atom& b) const {
    if (a == b || a.predicate != b.predicate || a.args.size() != b.args.size()) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      const Term &x = a.args[i], &y = b.args[i];
      if (x == y) continue;
      if (is_internal(x) || is_internal(y)) return false;
      if (!types_compatible(term_type(x), term_type(y))) return false;
      if (std::holds_alternative<Value>(x) && std::holds_alternative<Value>(y)) return false;
    }
    return true;
  }

  const Template& t_;
  const DomainSchema& schema_;
  std::map<std::string, TypeName> types_;
};

}  // namespace detail

inline std::string macro_name(const Template& t, const DomainSchema& schema) {
  std::string base = "m";
  for (const auto& s : t.steps) base += "_" + s.op;
  std::string name = base;
  for (int n = 2; schema.find_operation(name); ++n) name = base + "_" + std::to_string(n);
  return name;
}

inline std::variant<ComposedMacro, NonComposable> compose_schema(const Template& t, const DomainSchema& schema) {
  return detail::Composer(t, schema).run(macro_name(t, schema));
}

// ---------------------------------------------------------------------------
// Compression

// Replaces the given windows of `t` by single macro steps.
inline Trace rewrite_trace(const Trace& t, const Template& tmpl, const ComposedMacro& macro,
                           const std::vector<std::size_t>& starts) {
  std::size_t k = tmpl.size();
  // Window outputs move to the macro step; other steps keep their params.
  std::map<std::pair<std::size_t, std::string>, InternalRef> moved;
  std::vector<std::size_t> new_index(t.size(), 0);
  std::vector<TraceStep> steps;
  std::size_t next_start = 0;
  auto remap = [&](const TraceArg& arg) -> TraceArg {
    auto r = std::get_if<InternalRef>(&arg);
    if (!r) return arg;
    if (auto it = moved.find({r->step, r->param}); it != moved.end()) return it->second;
    return InternalRef{new_index[r->step], r->param};
  };
  for (std::size_t i = 0; i < t.size();) {
    if (next_start < starts.size() && starts[next_start] == i) {
      ++next_start;
      TraceStep m{macro.op.name, {}};
      std::vector<TraceArg> slot_args(tmpl.slots);
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t a = 0; a < tmpl.steps[j].args.size(); ++a)
          if (auto s = std::get_if<SlotArg>(&tmpl.steps[j].args[a].second))
            slot_args[s->slot] = remap(t.steps[i + j].args[a].second);
      for (std::size_t s = 0; s < tmpl.slots; ++s) m.args.emplace_back(macro.op.inputs[s].name, slot_args[s]);
      for (std::size_t o = 0; o < macro.output_sources.size(); ++o) {
        const auto& [j, param] = macro.output_sources[o];
        moved[{i + j, param}] = InternalRef{steps.size(), macro.op.outputs[o].name};
      }
      steps.push_back(std::move(m));
      i += k;
      continue;
    }
    TraceStep s{t.steps[i].op, {}};
    for (const auto& [role, arg] : t.steps[i].args) s.args.emplace_back(role, remap(arg));
    new_index[i] = steps.size();
    steps.push_back(std::move(s));
    ++i;
  }
  Trace out;
  out.steps = std::move(steps);
  std::size_t slot = 0;
  for (auto& s : out.steps)
    for (auto& [role, arg] : s.args)
      if (auto x = std::get_if<ExternalSlot>(&arg)) x->slot = slot++;
  return out;
}

struct RoundReport {
  std::size_t round = 0;
  std::string macro;
  std::size_t length = 0;
  std::size_t occurrences = 0;
  std::int64_t gain = 0;
  Template tmpl;
  ComposedMacro composed;
};

struct CompressionResult {
  DomainSchema schema;
  std::vector<CorpusEntry> corpus;
  std::int64_t total_gain = 0;
  std::vector<RoundReport> rounds;
};

// Leftmost-first, non-overlapping windows matching `tmpl` whose escaping
// outputs are all exported by the macro.
inline std::vector<Occurrence> find_occurrences(const std::vector<Trace>& corpus, const Template& tmpl,
                                                const ComposedMacro& macro) {
  std::set<std::pair<std::size_t, std::string>> exported(macro.output_sources.begin(), macro.output_sources.end());
  std::string key = tmpl.key();
  std::size_t k = tmpl.size();
  std::vector<Occurrence> out;
  for (std::size_t ti = 0; ti < corpus.size(); ++ti)
    for (std::size_t start = 0; start + k <= corpus[ti].size();) {
      if (window_template(corpus[ti], start, k).key() == key &&
          std::ranges::includes(exported, window_escapes(corpus[ti], start, k))) {
        out.push_back({ti, start});
        start += k;
      } else {
        ++start;
      }
    }
  return out;
}

namespace detail {

struct CompressionCandidate {
  Template tmpl;
  ComposedMacro macro;
  std::vector<Occurrence> occurrences;
  std::int64_t gain = 0;
};

}  // namespace detail

inline CompressionResult compress(const std::vector<CorpusEntry>& corpus, const DomainSchema& schema,
                                  std::size_t max_rounds, std::size_t workers = 1) {
  CompressionResult result{schema, corpus, 0, {}};
  std::vector<WorldState> expected;
  for (const auto& e : corpus) expected.push_back(replay_trace(e.trace, schema, e.initial));

  for (std::size_t round = 1; round <= max_rounds; ++round) {
    std::vector<Trace> traces;
    for (const auto& e : result.corpus) traces.push_back(e.trace);

    std::vector<detail::CompressionCandidate> candidates;
    for (const MinedTemplate& m : mine_templates(traces, 2, 2, workers)) {
      if (m.gain < 1) break;
      auto composed = compose_schema(m.tmpl, result.schema);
      if (std::holds_alternative<NonComposable>(composed)) continue;
      detail::CompressionCandidate c{m.tmpl, std::get<ComposedMacro>(std::move(composed)), {}, 0};
      c.occurrences = find_occurrences(traces, c.tmpl, c.macro);
      c.gain = gain(c.tmpl.size(), c.occurrences.size());
      if (c.gain >= 1) candidates.push_back(std::move(c));
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      if (a.gain != b.gain) return a.gain > b.gain;
      auto ao = a.tmpl.ops(), bo = b.tmpl.ops();
      if (ao != bo) return ao < bo;
      return a.tmpl.key() < b.tmpl.key();
    });

    bool accepted = false;
    for (const auto& c : candidates) {
      DomainSchema next_schema = result.schema;
      next_schema.operations.push_back(c.macro.op);
      std::vector<CorpusEntry> next_corpus = result.corpus;
      std::vector<std::vector<std::size_t>> starts(traces.size());
      for (const auto& occ : c.occurrences) starts[occ.trace].push_back(occ.start);
      bool preserved = true;
      for (std::size_t i = 0; i < traces.size() && preserved; ++i) {
        if (starts[i].empty()) continue;
        next_corpus[i].trace = rewrite_trace(traces[i], c.tmpl, c.macro, starts[i]);
        try {
          preserved = same_outcome(corpus[i].initial, expected[i],
                                   replay_trace(next_corpus[i].trace, next_schema, corpus[i].initial));
        } catch (const Error&) {
          preserved = false;
        }
      }
      if (!preserved) continue;
      result.schema = std::move(next_schema);
      result.corpus = std::move(next_corpus);
      result.total_gain += c.gain;
      result.rounds.push_back({round, c.macro.op.name, c.tmpl.size(), c.occurrences.size(), c.gain, c.tmpl, c.macro});
      accepted = true;
      break;
    }
    if (!accepted) break;
  }
  return result;
}

}  // namespace gpe
