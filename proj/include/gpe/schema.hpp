// Domain schemas: typed operations with preconditions and add/delete effects,
// the `.gtd` parser, the validator and the canonical printer.

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gpe/error.hpp"
#include "gpe/sexpr.hpp"
#include "gpe/value.hpp"

namespace gpe {

struct ParamRef {
  std::string name;
  friend auto operator<=>(const ParamRef&, const ParamRef&) = default;
};

using Term = std::variant<ParamRef, Value>;

inline std::string format_term(const Term& t) {
  if (auto p = std::get_if<ParamRef>(&t)) return p->name;
  return format_value(std::get<Value>(t));
}

struct Atom {
  std::string predicate;
  std::vector<Term> args;
  SourcePos pos;

  friend bool operator==(const Atom& a, const Atom& b) { return a.predicate == b.predicate && a.args == b.args; }
  friend auto operator<=>(const Atom& a, const Atom& b) {
    if (auto c = a.predicate <=> b.predicate; c != 0) return c;
    return a.args <=> b.args;
  }
};

inline std::string format_atom(const Atom& a) {
  std::string out = "(" + a.predicate;
  for (const auto& t : a.args) out += " " + format_term(t);
  return out + ")";
}

enum class CondKind { Pos, Neg, Eq, Neq };

// One conjunct of a formula: an atom, its negation, or an (in)equality of terms.
struct Condition {
  CondKind kind = CondKind::Pos;
  Atom atom;
  Term lhs;
  Term rhs;
  SourcePos pos;

  static Condition pos_of(Atom a) { return Condition{CondKind::Pos, std::move(a), {}, {}, {}}; }
  static Condition neg_of(Atom a) { return Condition{CondKind::Neg, std::move(a), {}, {}, {}}; }
  static Condition eq(Term l, Term r) { return Condition{CondKind::Eq, {}, std::move(l), std::move(r), {}}; }
  static Condition neq(Term l, Term r) { return Condition{CondKind::Neq, {}, std::move(l), std::move(r), {}}; }

  bool is_atomic() const { return kind == CondKind::Pos || kind == CondKind::Neg; }

  friend bool operator==(const Condition& a, const Condition& b) {
    if (a.kind != b.kind) return false;
    if (a.is_atomic()) return a.atom == b.atom;
    return a.lhs == b.lhs && a.rhs == b.rhs;
  }
};

inline std::string format_condition(const Condition& c) {
  switch (c.kind) {
    case CondKind::Pos: return format_atom(c.atom);
    case CondKind::Neg: return "(not " + format_atom(c.atom) + ")";
    case CondKind::Eq: return "(= " + format_term(c.lhs) + " " + format_term(c.rhs) + ")";
    case CondKind::Neq: return "(!= " + format_term(c.lhs) + " " + format_term(c.rhs) + ")";
  }
  return {};
}

// Conjunction of conditions; empty means true.
struct Formula {
  std::vector<Condition> conjuncts;
  friend bool operator==(const Formula&, const Formula&) = default;
};

inline std::string format_formula(const Formula& f) {
  std::string out = "(";
  for (std::size_t i = 0; i < f.conjuncts.size(); ++i) {
    if (i) out += ' ';
    out += format_condition(f.conjuncts[i]);
  }
  return out + ")";
}

struct Param {
  std::string name;
  TypeName type;
  SourcePos pos;
  friend bool operator==(const Param& a, const Param& b) { return a.name == b.name && a.type == b.type; }
};

enum class Origin { Declared, Opaque, Macro };

struct OperationSchema {
  std::string name;
  std::vector<Param> inputs;
  std::vector<Param> outputs;
  Formula precondition;
  std::vector<Atom> adds;
  std::vector<Atom> deletes;
  Origin origin = Origin::Declared;
  SourcePos pos;

  const Param* find_input(std::string_view n) const {
    for (const auto& p : inputs)
      if (p.name == n) return &p;
    return nullptr;
  }
  const Param* find_output(std::string_view n) const {
    for (const auto& p : outputs)
      if (p.name == n) return &p;
    return nullptr;
  }

  friend bool operator==(const OperationSchema& a, const OperationSchema& b) {
    return a.name == b.name && a.inputs == b.inputs && a.outputs == b.outputs && a.precondition == b.precondition &&
           a.adds == b.adds && a.deletes == b.deletes && a.origin == b.origin;
  }
};

struct TypeDecl {
  TypeName name;
  SourcePos pos;
  friend bool operator==(const TypeDecl& a, const TypeDecl& b) { return a.name == b.name; }
};

struct PredicateDecl {
  std::string name;
  std::vector<TypeName> param_types;
  SourcePos pos;
  friend bool operator==(const PredicateDecl& a, const PredicateDecl& b) {
    return a.name == b.name && a.param_types == b.param_types;
  }
};

struct DomainSchema {
  // User-declared types; the built-ins are implicit.
  std::vector<TypeDecl> types;
  std::vector<PredicateDecl> predicates;
  std::vector<OperationSchema> operations;

  bool has_type(std::string_view name) const {
    if (is_builtin_type(name)) return true;
    return std::any_of(types.begin(), types.end(), [&](const TypeDecl& t) { return t.name == name; });
  }
  const PredicateDecl* find_predicate(std::string_view name) const {
    for (const auto& p : predicates)
      if (p.name == name) return &p;
    return nullptr;
  }
  const OperationSchema* find_operation(std::string_view name) const {
    for (const auto& op : operations)
      if (op.name == name) return &op;
    return nullptr;
  }

  friend bool operator==(const DomainSchema&, const DomainSchema&) = default;
};

inline const OperationSchema* lookup_operation(const DomainSchema& schema, std::string_view name) {
  return schema.find_operation(name);
}

using SchemaPtr = std::shared_ptr<const DomainSchema>;

// ---------------------------------------------------------------------------
// Validation

namespace detail {

class SchemaValidator {
 public:
  explicit SchemaValidator(const DomainSchema& schema) : schema_(schema) {}

  std::vector<Diagnostic> run() {
    std::set<std::string> seen;
    for (const auto& t : schema_.types) {
      if (!is_type_name(t.name))
        report(ErrorCode::SyntaxError, "type name '" + t.name + "' must match [a-z][a-z0-9_]*", t.pos);
      if (is_builtin_type(t.name))
        report(ErrorCode::DuplicateName, "type '" + t.name + "' is built in", t.pos);
      else if (!seen.insert(t.name).second)
        report(ErrorCode::DuplicateName, "type '" + t.name + "' declared twice", t.pos);
    }
    seen.clear();
    for (const auto& p : schema_.predicates) {
      if (!seen.insert(p.name).second) report(ErrorCode::DuplicateName, "predicate '" + p.name + "' declared twice", p.pos);
      for (const auto& t : p.param_types)
        if (!schema_.has_type(t)) report(ErrorCode::UndeclaredType, "type '" + t + "' is not declared", p.pos);
    }
    seen.clear();
    for (const auto& op : schema_.operations) {
      if (!seen.insert(op.name).second)
        report(ErrorCode::DuplicateName, "operation '" + op.name + "' declared twice", op.pos);
      check_operation(op);
    }
    sort_by_position(diags_);
    return std::move(diags_);
  }

 private:
  void report(ErrorCode code, std::string msg, SourcePos pos) { diags_.push_back({code, std::move(msg), pos, {}}); }

  void check_operation(const OperationSchema& op) {
    std::map<std::string, TypeName> inputs, all;
    for (const auto* list : {&op.inputs, &op.outputs}) {
      for (const auto& p : *list) {
        if (!schema_.has_type(p.type)) report(ErrorCode::UndeclaredType, "type '" + p.type + "' is not declared", p.pos);
        if (!all.emplace(p.name, p.type).second)
          report(ErrorCode::DuplicateName, "parameter '" + p.name + "' declared twice in '" + op.name + "'", p.pos);
        else if (list == &op.inputs)
          inputs.emplace(p.name, p.type);
      }
    }
    for (const auto& c : op.precondition.conjuncts) {
      if (c.is_atomic()) {
        check_atom(c.atom, inputs, all, "precondition");
      } else {
        auto lt = term_type(c.lhs, inputs, all, "precondition", c.pos);
        auto rt = term_type(c.rhs, inputs, all, "precondition", c.pos);
        if (lt && rt && !types_compatible(*lt, *rt))
          report(ErrorCode::TypeMismatch, "cannot compare " + *lt + " with " + *rt, c.pos);
      }
    }
    for (const auto& a : op.adds) check_atom(a, all, all, "effect");
    for (const auto& a : op.deletes) check_atom(a, all, all, "effect");
    for (const auto& a : op.adds)
      if (std::find(op.deletes.begin(), op.deletes.end(), a) != op.deletes.end())
        report(ErrorCode::AddDeleteConflict, format_atom(a) + " is both added and deleted by '" + op.name + "'", a.pos);
  }

  std::optional<TypeName> term_type(const Term& t, const std::map<std::string, TypeName>& bound,
                                    const std::map<std::string, TypeName>& all, std::string_view where, SourcePos pos) {
    if (auto v = std::get_if<Value>(&t)) return type_of(*v);
    const auto& name = std::get<ParamRef>(t).name;
    if (auto it = bound.find(name); it != bound.end()) return it->second;
    if (all.count(name))
      report(ErrorCode::UnboundVariable, "output parameter '" + name + "' cannot appear in a " + std::string(where), pos);
    else
      report(ErrorCode::UnboundVariable, "'" + name + "' is not a parameter", pos);
    return std::nullopt;
  }

  void check_atom(const Atom& a, const std::map<std::string, TypeName>& bound,
                  const std::map<std::string, TypeName>& all, std::string_view where) {
    const PredicateDecl* decl = schema_.find_predicate(a.predicate);
    if (!decl) {
      report(ErrorCode::UndeclaredPredicate, "predicate '" + a.predicate + "' is not declared", a.pos);
      for (const auto& t : a.args) term_type(t, bound, all, where, a.pos);
      return;
    }
    if (decl->param_types.size() != a.args.size()) {
      report(ErrorCode::ArityMismatch,
             "'" + a.predicate + "' takes " + std::to_string(decl->param_types.size()) + " arguments, got " +
                 std::to_string(a.args.size()),
             a.pos);
      return;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      auto t = term_type(a.args[i], bound, all, where, a.pos);
      if (t && !types_compatible(decl->param_types[i], *t))
        report(ErrorCode::TypeMismatch,
               "argument " + std::to_string(i) + " of '" + a.predicate + "' expects " + decl->param_types[i] +
                   ", got " + *t,
               a.pos);
    }
  }

  const DomainSchema& schema_;
  std::vector<Diagnostic> diags_;
};

}  // namespace detail

inline std::vector<Diagnostic> validate_schema(const DomainSchema& schema) {
  return detail::SchemaValidator(schema).run();
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline Term parse_term(const SExpr& e) {
  switch (e.kind) {
    case SExpr::Kind::Str: return Value(e.text);
    case SExpr::Kind::Num: return Value(*Integer::parse(e.text));
    case SExpr::Kind::Sym:
      if (e.text == "true") return Value(true);
      if (e.text == "false") return Value(false);
      if (auto ent = parse_entity(e.text)) return Value(*ent);
      return ParamRef{e.text};
    default: throw Error(ErrorCode::SyntaxError, "expected a term", e.pos);
  }
}

inline Atom parse_atom(const SExpr& e) {
  if (!e.is_list() || e.items.empty() || e.items[0].kind != SExpr::Kind::Sym)
    throw Error(ErrorCode::SyntaxError, "expected an atom (pred term*)", e.pos);
  Atom a;
  a.predicate = e.items[0].text;
  a.pos = e.pos;
  for (std::size_t i = 1; i < e.items.size(); ++i) a.args.push_back(parse_term(e.items[i]));
  return a;
}

inline Condition parse_condition(const SExpr& e) {
  if (e.is_list() && !e.items.empty() && e.items[0].kind == SExpr::Kind::Sym) {
    const auto& head = e.items[0].text;
    if (head == "not") {
      if (e.items.size() != 2) throw Error(ErrorCode::SyntaxError, "(not atom) takes one atom", e.pos);
      Condition c = Condition::neg_of(parse_atom(e.items[1]));
      c.pos = e.pos;
      return c;
    }
    if (head == "=" || head == "!=") {
      if (e.items.size() != 3) throw Error(ErrorCode::SyntaxError, "(" + head + " a b) takes two terms", e.pos);
      Condition c = head == "=" ? Condition::eq(parse_term(e.items[1]), parse_term(e.items[2]))
                                : Condition::neq(parse_term(e.items[1]), parse_term(e.items[2]));
      c.pos = e.pos;
      return c;
    }
  }
  Condition c = Condition::pos_of(parse_atom(e));
  c.pos = e.pos;
  return c;
}

inline Formula parse_formula_list(const SExpr& e) {
  if (!e.is_list()) throw Error(ErrorCode::SyntaxError, "expected a list of literals", e.pos);
  Formula f;
  for (const auto& item : e.items) f.conjuncts.push_back(parse_condition(item));
  return f;
}

inline const std::string& expect_name(const SExpr& e, std::string_view what) {
  if (e.kind != SExpr::Kind::Sym) throw Error(ErrorCode::SyntaxError, "expected " + std::string(what), e.pos);
  return e.text;
}

inline std::vector<Param> parse_params(const SExpr& e) {
  if (!e.is_list()) throw Error(ErrorCode::SyntaxError, "expected a parameter list", e.pos);
  std::vector<Param> out;
  for (const auto& p : e.items) {
    if (!p.is_list() || p.items.size() != 2)
      throw Error(ErrorCode::SyntaxError, "expected (param-name type-name)", p.pos);
    out.push_back(Param{expect_name(p.items[0], "a parameter name"), expect_name(p.items[1], "a type name"), p.pos});
  }
  return out;
}

inline void expect_keyword(const SExpr& e, std::string_view kw) {
  if (e.kind != SExpr::Kind::Keyword || e.text != kw)
    throw Error(ErrorCode::SyntaxError, "expected :" + std::string(kw), e.pos);
}

inline void parse_form(const SExpr& form, DomainSchema& schema) {
  if (!form.is_list() || form.items.empty() || form.items[0].kind != SExpr::Kind::Sym)
    throw Error(ErrorCode::SyntaxError, "expected (deftype ...), (defpred ...) or (defop ...)", form.pos);
  const auto& head = form.items[0].text;
  const auto& xs = form.items;
  if (head == "deftype") {
    if (xs.size() != 2) throw Error(ErrorCode::SyntaxError, "(deftype NAME)", form.pos);
    schema.types.push_back(TypeDecl{expect_name(xs[1], "a type name"), form.pos});
  } else if (head == "defpred") {
    if (xs.size() != 3 || !xs[2].is_list()) throw Error(ErrorCode::SyntaxError, "(defpred NAME (TYPE*))", form.pos);
    PredicateDecl p{expect_name(xs[1], "a predicate name"), {}, form.pos};
    for (const auto& t : xs[2].items) p.param_types.push_back(expect_name(t, "a type name"));
    schema.predicates.push_back(std::move(p));
  } else if (head == "defop") {
    if (xs.size() != 12) throw Error(ErrorCode::SyntaxError, "(defop NAME :in .. :out .. :pre .. :add .. :del ..)", form.pos);
    OperationSchema op;
    op.name = expect_name(xs[1], "an operation name");
    op.pos = form.pos;
    expect_keyword(xs[2], "in");
    op.inputs = parse_params(xs[3]);
    expect_keyword(xs[4], "out");
    op.outputs = parse_params(xs[5]);
    expect_keyword(xs[6], "pre");
    op.precondition = parse_formula_list(xs[7]);
    expect_keyword(xs[8], "add");
    expect_keyword(xs[10], "del");
    for (const auto* list : {&xs[9], &xs[11]}) {
      if (!list->is_list()) throw Error(ErrorCode::SyntaxError, "expected a list of atoms", list->pos);
      auto& target = list == &xs[9] ? op.adds : op.deletes;
      for (const auto& a : list->items) target.push_back(parse_atom(a));
    }
    if (!form.leading_comments.empty()) {
      const auto& marker = form.leading_comments.back();
      if (marker == "macro") op.origin = Origin::Macro;
      if (marker == "opaque") op.origin = Origin::Opaque;
    }
    schema.operations.push_back(std::move(op));
  } else {
    throw Error(ErrorCode::SyntaxError, "unknown form '" + head + "'", form.pos);
  }
}

}  // namespace detail

struct DomainParse {
  DomainSchema schema;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
};

// Parses and validates `.gtd` text. Never throws; problems come back as diagnostics.
inline DomainParse parse_domain(std::string_view text) {
  DomainParse out;
  ReadResult read = read_sexprs(text);
  out.diagnostics = std::move(read.diagnostics);
  for (const auto& form : read.forms) {
    try {
      detail::parse_form(form, out.schema);
    } catch (const Error& e) {
      out.diagnostics.push_back(e.diagnostic());
    }
  }
  if (out.diagnostics.empty()) out.diagnostics = validate_schema(out.schema);
  sort_by_position(out.diagnostics);
  return out;
}

inline std::string print_params(const std::vector<Param>& ps) {
  std::string out = "(";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ' ';
    out += "(" + ps[i].name + " " + ps[i].type + ")";
  }
  return out + ")";
}

inline std::string print_operation(const OperationSchema& op) {
  auto atoms = [](const std::vector<Atom>& as) {
    std::string out = "(";
    for (std::size_t i = 0; i < as.size(); ++i) {
      if (i) out += ' ';
      out += format_atom(as[i]);
    }
    return out + ")";
  };
  return "(defop " + op.name + " :in " + print_params(op.inputs) + " :out " + print_params(op.outputs) +
         " :pre " + format_formula(op.precondition) + " :add " + atoms(op.adds) + " :del " + atoms(op.deletes) + ")";
}

// Canonical `.gtd` text: types, then predicates, then operations, one form per line.
inline std::string print_domain(const DomainSchema& schema) {
  std::string out;
  for (const auto& t : schema.types) out += "(deftype " + t.name + ")\n";
  for (const auto& p : schema.predicates) {
    out += "(defpred " + p.name + " (";
    for (std::size_t i = 0; i < p.param_types.size(); ++i) out += (i ? " " : "") + p.param_types[i];
    out += "))\n";
  }
  for (const auto& op : schema.operations) {
    if (op.origin == Origin::Macro) out += "; macro\n";
    if (op.origin == Origin::Opaque) out += "; opaque\n";
    out += print_operation(op) + "\n";
  }
  return out;
}

}  // namespace gpe
