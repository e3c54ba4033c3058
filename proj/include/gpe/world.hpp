// Closed-world fact store and operation application.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gpe/error.hpp"
#include "gpe/schema.hpp"
#include "gpe/value.hpp"

namespace gpe {

struct Fact {
  std::string predicate;
  std::vector<Value> args;

  friend auto operator<=>(const Fact&, const Fact&) = default;
};

inline std::string format_fact(const Fact& f) {
  std::string out = f.predicate + "(";
  for (std::size_t i = 0; i < f.args.size(); ++i) {
    if (i) out += ',';
    out += format_value(f.args[i]);
  }
  return out + ")";
}

using FactSet = std::set<Fact>;
using Binding = std::map<std::string, Value>;

inline std::string format_binding(const Binding& b) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : b) {
    if (!first) out += ", ";
    first = false;
    out += k + "=" + format_value(v);
  }
  return out + "}";
}

// A situation, represented by its facts and the entities minted so far.
class WorldState {
 public:
  const FactSet& facts() const { return facts_; }
  const std::map<std::uint64_t, TypeName>& entities() const { return entities_; }
  std::uint64_t next_serial() const { return next_serial_; }

  bool knows(const EntityId& e) const {
    auto it = entities_.find(e.serial);
    return it != entities_.end() && it->second == e.type;
  }
  bool contains(const Fact& f) const { return facts_.count(f) > 0; }

  // Registers an existing entity (used when loading states from text).
  void register_entity(const EntityId& e) {
    auto [it, inserted] = entities_.emplace(e.serial, e.type);
    if (!inserted && it->second != e.type)
      throw Error(ErrorCode::TypeMismatch, "serial " + std::to_string(e.serial) + " already names a " + it->second);
    next_serial_ = std::max(next_serial_, e.serial + 1);
  }

  EntityId mint(const TypeName& type) {
    EntityId e{type, next_serial_++};
    entities_.emplace(e.serial, type);
    return e;
  }

  // Inserts a fact, registering any entities it mentions.
  void add_fact(Fact f) {
    for (const auto& v : f.args)
      if (auto e = std::get_if<EntityId>(&v)) register_entity(*e);
    facts_.insert(std::move(f));
  }
  void insert(Fact f) { facts_.insert(std::move(f)); }
  void erase(const Fact& f) { facts_.erase(f); }

  // One fact per line, sorted lexicographically by text.
  std::string canonical() const {
    std::vector<std::string> lines;
    lines.reserve(facts_.size());
    for (const auto& f : facts_) lines.push_back(format_fact(f));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
  }

  // FNV-1a over the canonical facts and the minting counter.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::string_view s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
      }
    };
    mix(canonical());
    mix("#" + std::to_string(next_serial_));
    return h;
  }

  friend bool operator==(const WorldState&, const WorldState&) = default;

 private:
  FactSet facts_;
  std::map<std::uint64_t, TypeName> entities_;
  std::uint64_t next_serial_ = 0;
};

// ---------------------------------------------------------------------------

inline Value resolve_term(const Term& t, const Binding& binding) {
  if (auto v = std::get_if<Value>(&t)) return *v;
  const auto& name = std::get<ParamRef>(t).name;
  auto it = binding.find(name);
  if (it == binding.end()) throw Error(ErrorCode::UnboundVariable, "'" + name + "' is not bound");
  return it->second;
}

inline Fact ground(const Atom& atom, const Binding& binding) {
  Fact f{atom.predicate, {}};
  f.args.reserve(atom.args.size());
  for (const auto& t : atom.args) f.args.push_back(resolve_term(t, binding));
  return f;
}

// Returns the text of the first conjunct that does not hold, or nothing.
inline std::optional<std::string> first_failing(const WorldState& state, const Formula& formula,
                                                const Binding& binding) {
  for (const auto& c : formula.conjuncts) {
    switch (c.kind) {
      case CondKind::Pos: {
        Fact f = ground(c.atom, binding);
        if (!state.contains(f)) return format_fact(f);
        break;
      }
      case CondKind::Neg: {
        Fact f = ground(c.atom, binding);
        if (state.contains(f)) return "not " + format_fact(f);
        break;
      }
      case CondKind::Eq:
      case CondKind::Neq: {
        Value l = resolve_term(c.lhs, binding), r = resolve_term(c.rhs, binding);
        auto lt = type_of(l), rt = type_of(r);
        if (!types_compatible(lt, rt)) throw Error(ErrorCode::TypeMismatch, "cannot compare " + lt + " with " + rt);
        bool equal = l == r;
        if (equal != (c.kind == CondKind::Eq))
          return format_value(l) + (c.kind == CondKind::Eq ? " = " : " != ") + format_value(r);
        break;
      }
    }
  }
  return std::nullopt;
}

inline bool eval_formula(const WorldState& state, const Formula& formula, const Binding& binding) {
  return !first_failing(state, formula, binding);
}

inline void check_value(const WorldState& state, const Param& p, const Value& v) {
  auto t = type_of(v);
  if (!types_compatible(p.type, t))
    throw Error(ErrorCode::TypeMismatch, "'" + p.name + "' expects " + p.type + ", got " + t);
  if (auto e = std::get_if<EntityId>(&v); e && !state.knows(*e))
    throw Error(ErrorCode::UnknownEntity, format_entity(*e) + " has not been minted");
}

// Invokes `op` on `state`: checks the inputs and the precondition, mints
// outputs in declaration order, then applies deletes before adds.
inline std::pair<WorldState, Binding> apply_operation(const WorldState& state, const OperationSchema& op,
                                                      const Binding& inputs) {
  for (const auto& [name, _] : inputs)
    if (!op.find_input(name)) throw Error(ErrorCode::UnknownRole, "'" + op.name + "' has no input '" + name + "'");
  for (const auto& p : op.inputs) {
    auto it = inputs.find(p.name);
    if (it == inputs.end()) throw Error(ErrorCode::UnboundVariable, "input '" + p.name + "' of '" + op.name + "' is not bound");
    check_value(state, p, it->second);
  }
  if (auto failing = first_failing(state, op.precondition, inputs))
    throw Error(ErrorCode::PreconditionFailed, *failing);

  WorldState next = state;
  Binding outputs;
  Binding all = inputs;
  for (const auto& p : op.outputs) {
    Value v = next.mint(p.type);
    outputs.emplace(p.name, v);
    all.emplace(p.name, v);
  }
  for (const auto& a : op.deletes) next.erase(ground(a, all));
  for (const auto& a : op.adds) next.insert(ground(a, all));
  return {std::move(next), std::move(outputs)};
}

// ---------------------------------------------------------------------------
// Matching fact sets modulo entity renaming.

// A fact whose entity arguments may be variables (goal placeholders or fresh entities).
struct PatternArg {
  Value value;
  // Variables match any allowed entity of `value`'s type; equal ids denote the same variable.
  std::optional<std::string> var;
};

struct PatternFact {
  std::string predicate;
  std::vector<PatternArg> args;
};

namespace detail {

class PatternMatcher {
 public:
  PatternMatcher(const std::vector<PatternFact>& pattern, const FactSet& target,
                 std::function<bool(const EntityId&)> allowed)
      : pattern_(pattern), target_(target), allowed_(std::move(allowed)) {
    for (const auto& f : target_) by_pred_[f.predicate].push_back(&f);
    for (std::size_t i = 0; i < pattern_.size(); ++i) order_.push_back(i);
    // Ground facts first; they prune without binding anything.
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return vars(a) < vars(b); });
  }

  bool solve() { return step(0); }

 private:
  std::size_t vars(std::size_t i) const {
    std::size_t n = 0;
    for (const auto& a : pattern_[i].args) n += a.var.has_value();
    return n;
  }

  bool step(std::size_t k) {
    if (k == order_.size()) return true;
    const PatternFact& pf = pattern_[order_[k]];
    auto it = by_pred_.find(pf.predicate);
    if (it == by_pred_.end()) return false;
    for (const Fact* f : it->second) {
      if (f->args.size() != pf.args.size()) continue;
      std::vector<std::string> bound_here;
      bool ok = true;
      for (std::size_t i = 0; i < pf.args.size() && ok; ++i) {
        const auto& pa = pf.args[i];
        if (!pa.var) {
          ok = pa.value == f->args[i];
          continue;
        }
        auto ent = std::get_if<EntityId>(&f->args[i]);
        if (!ent) {
          ok = false;
          continue;
        }
        auto b = binding_.find(*pa.var);
        if (b != binding_.end()) {
          ok = b->second == *ent;
          continue;
        }
        const auto& want = std::get<EntityId>(pa.value).type;
        if (!types_compatible(want, ent->type) || used_.count(*ent) || !allowed_(*ent)) {
          ok = false;
          continue;
        }
        binding_.emplace(*pa.var, *ent);
        used_.insert(*ent);
        bound_here.push_back(*pa.var);
      }
      if (ok && step(k + 1)) return true;
      for (const auto& v : bound_here) {
        used_.erase(binding_.at(v));
        binding_.erase(v);
      }
    }
    return false;
  }

  const std::vector<PatternFact>& pattern_;
  const FactSet& target_;
  std::function<bool(const EntityId&)> allowed_;
  std::map<std::string, std::vector<const Fact*>> by_pred_;
  std::vector<std::size_t> order_;
  std::map<std::string, EntityId> binding_;
  std::set<EntityId> used_;
};

}  // namespace detail

// True iff some injective, type-respecting assignment of the pattern's variables
// maps every pattern fact into `target`.
inline bool match_pattern(const std::vector<PatternFact>& pattern, const FactSet& target,
                          std::function<bool(const EntityId&)> allowed) {
  return detail::PatternMatcher(pattern, target, std::move(allowed)).solve();
}

// Fact-set equality up to a type-respecting bijection on the entities for which
// `fixed` is false. Entities with `fixed` true must match themselves.
inline bool equivalent_up_to_renaming(const FactSet& a, const FactSet& b,
                                      const std::function<bool(const EntityId&)>& fixed) {
  if (a.size() != b.size()) return false;
  std::vector<PatternFact> pattern;
  pattern.reserve(a.size());
  for (const auto& f : a) {
    PatternFact pf{f.predicate, {}};
    for (const auto& v : f.args) {
      auto e = std::get_if<EntityId>(&v);
      if (e && !fixed(*e))
        pf.args.push_back({v, format_entity(*e)});
      else
        pf.args.push_back({v, std::nullopt});
    }
    pattern.push_back(std::move(pf));
  }
  auto allowed = [&](const EntityId& e) { return !fixed(e); };
  return match_pattern(pattern, b, allowed);
}

// ---------------------------------------------------------------------------
// Fact-set text format: one `pred(arg,...)` per line.

namespace detail {

class FactLexer {
 public:
  explicit FactLexer(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r')) ++i_;
  }
  bool done() {
    skip_ws();
    return i_ >= s_.size();
  }
  bool eat(char c) {
    skip_ws();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  std::string_view bare() {
    skip_ws();
    std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != '(' && s_[i_] != ')' && s_[i_] != ',' && s_[i_] != ' ' && s_[i_] != '\t' &&
           s_[i_] != '"')
      ++i_;
    return s_.substr(start, i_ - start);
  }
  std::optional<std::string> quoted() {
    skip_ws();
    if (i_ >= s_.size() || s_[i_] != '"') return std::nullopt;
    ++i_;
    std::string out;
    while (i_ < s_.size()) {
      char c = s_[i_++];
      if (c == '"') return out;
      if (c == '\\' && i_ < s_.size()) {
        char e = s_[i_++];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += c;
      }
    }
    throw Error(ErrorCode::UnterminatedString, "string not closed");
  }
  int col() const { return static_cast<int>(i_) + 1; }

 private:
  std::string_view s_;
  std::size_t i_ = 0;
};

}  // namespace detail

// Parses one fact line; `?type` and `?type#tag` arguments become pattern variables.
inline PatternFact parse_pattern_fact(std::string_view line, int line_no = 0) {
  detail::FactLexer lx(line);
  PatternFact pf;
  auto fail = [&](const std::string& msg) { throw Error(ErrorCode::SyntaxError, msg, {line_no, lx.col()}); };
  pf.predicate = std::string(lx.bare());
  if (!is_type_name(pf.predicate)) fail("expected a predicate name");
  if (!lx.eat('(')) fail("expected '('");
  if (!lx.eat(')')) {
    do {
      if (auto s = lx.quoted()) {
        pf.args.push_back({Value(*s), std::nullopt});
        continue;
      }
      std::string_view tok = lx.bare();
      if (!tok.empty() && tok[0] == '?') {
        // ?type or ?type#tag; identical tokens are the same placeholder.
        auto body = tok.substr(1);
        auto type = body.substr(0, body.find('#'));
        if (!is_type_name(type)) fail("bad placeholder '" + std::string(tok) + "'");
        pf.args.push_back({Value(EntityId{TypeName(type), 0}), std::string(tok)});
        continue;
      }
      auto v = parse_bare_value(tok);
      if (!v) fail("bad value '" + std::string(tok) + "'");
      pf.args.push_back({*v, std::nullopt});
    } while (lx.eat(','));
    if (!lx.eat(')')) fail("expected ')'");
  }
  if (!lx.done()) fail("trailing text after fact");
  return pf;
}

inline Fact parse_fact(std::string_view line, int line_no = 0) {
  PatternFact pf = parse_pattern_fact(line, line_no);
  Fact f{pf.predicate, {}};
  for (auto& a : pf.args) {
    if (a.var) throw Error(ErrorCode::SyntaxError, "placeholders are not allowed here", {line_no, 1});
    f.args.push_back(std::move(a.value));
  }
  return f;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// Reads the fact-set text format. Blank lines and `;` comments are skipped.
inline WorldState parse_state(std::string_view text) {
  WorldState s;
  int line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == ';') continue;
    s.add_fact(parse_fact(line, line_no));
  }
  return s;
}

// Checks every fact against the schema's predicate declarations.
inline std::vector<Diagnostic> check_facts(const WorldState& state, const DomainSchema& schema) {
  std::vector<Diagnostic> out;
  for (const auto& f : state.facts()) {
    const PredicateDecl* p = schema.find_predicate(f.predicate);
    if (!p) {
      out.push_back({ErrorCode::UndeclaredPredicate, format_fact(f), {}, {}});
    } else if (p->param_types.size() != f.args.size()) {
      out.push_back({ErrorCode::ArityMismatch, format_fact(f), {}, {}});
    } else {
      for (std::size_t i = 0; i < f.args.size(); ++i)
        if (!types_compatible(p->param_types[i], type_of(f.args[i])))
          out.push_back({ErrorCode::TypeMismatch, format_fact(f), {}, {}});
    }
  }
  return out;
}

}  // namespace gpe
