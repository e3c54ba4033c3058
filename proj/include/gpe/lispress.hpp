// Lispress reader/printer and the translation of Lispress calls into graph programs.

#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gpe/error.hpp"
#include "gpe/program.hpp"
#include "gpe/schema.hpp"
#include "gpe/sexpr.hpp"

namespace gpe {

namespace detail {

inline void check_lispress_subset(const SExpr& e) {
  if (e.kind == SExpr::Kind::Sym) {
    char c = e.text[0];
    if (c == '#' || c == '^')
      throw Error(ErrorCode::UnsupportedForm, "typed-literal and type-annotation sugar ('" + e.text + "')", e.pos);
    if ((c >= '0' && c <= '9') || (c == '-' && e.text.size() > 1 && e.text[1] >= '0' && e.text[1] <= '9'))
      throw Error(ErrorCode::UnsupportedForm, "only integer literals are supported ('" + e.text + "')", e.pos);
  }
  if (!e.is_list()) return;
  if (!e.items.empty()) {
    const SExpr& head = e.items[0];
    if (head.kind == SExpr::Kind::Keyword) throw Error(ErrorCode::KeywordAsHead, ":" + head.text, head.pos);
    if (head.is_sym("let") || head.is_sym("lambda") || head.is_sym("fn"))
      throw Error(ErrorCode::UnsupportedForm, "'" + head.text + "' forms", head.pos);
  }
  for (const auto& x : e.items) check_lispress_subset(x);
}

}  // namespace detail

// Reads exactly one Lispress expression.
inline SExpr parse_lispress(std::string_view text) {
  ReadResult read = read_sexprs(text);
  if (!read.ok()) {
    const Diagnostic& d = read.diagnostics.front();
    throw Error(d.code, d.message, d.pos);
  }
  if (read.forms.empty()) throw Error(ErrorCode::SyntaxError, "no expression", {1, 1});
  if (read.forms.size() > 1) throw Error(ErrorCode::TrailingInput, "more than one expression", read.forms[1].pos);
  SExpr e = std::move(read.forms.front());
  e.leading_comments.clear();
  detail::check_lispress_subset(e);
  return e;
}

inline std::string print_lispress(const SExpr& e) { return print_sexpr(e); }

inline std::size_t count_calls(const SExpr& e) {
  if (!e.is_list()) return 0;
  std::size_t n = 1;
  for (std::size_t i = 1; i < e.items.size(); ++i) n += count_calls(e.items[i]);
  return n;
}

struct TranslationOutput {
  std::vector<Instruction> instructions;
  std::vector<OperationSchema> auto_declared;
};

// Translates calls in post-order: NewDo for the head, the children, one SetArg
// per argument, then Adjoin. A nested call contributes a Refer to its output.
// Heads missing from the domain are declared as opaque operations; the
// translator remembers them so a batch shares one signature per head.
class LispressTranslator {
 public:
  explicit LispressTranslator(DomainSchema base) : schema_(std::move(base)) {}

  const DomainSchema& schema() const { return schema_; }
  const std::vector<OperationSchema>& auto_declared() const { return auto_declared_; }

  TranslationOutput translate(const SExpr& expr) {
    Emitter em{schema_, {}, {}, 0};
    if (expr.is_list())
      em.call(expr, false);
    else
      em.literal(expr);
    for (const auto& op : em.declared) auto_declared_.push_back(op);
    TranslationOutput out{std::move(em.program), std::move(em.declared)};
    schema_ = std::move(em.schema);
    return out;
  }

 private:
  struct Emitter {
    DomainSchema schema;
    std::vector<Instruction> program;
    std::vector<OperationSchema> declared;
    Handle next;

    Handle fresh() { return next++; }

    Handle literal(const SExpr& e) {
      Handle h = fresh();
      Value v;
      switch (e.kind) {
        case SExpr::Kind::Str: v = e.text; break;
        case SExpr::Kind::Num: v = *Integer::parse(e.text); break;
        case SExpr::Kind::Sym:
          if (e.text == "true" || e.text == "false")
            v = e.text == "true";
          else
            v = e.text;
          break;
        default: throw Error(ErrorCode::SyntaxError, "keyword :" + e.text + " outside an argument list", e.pos);
      }
      program.push_back(instr::NewValue{h, v});
      return h;
    }

    Handle value(const SExpr& e) { return e.is_list() ? call(e, true) : literal(e); }

    const OperationSchema& resolve(const SExpr& head, std::vector<std::string>& roles, std::size_t positional) {
      const std::string& name = head.text;
      if (const auto* op = schema.find_operation(name); op && op->origin != Origin::Opaque) {
        for (std::size_t i = 0; i < positional; ++i) {
          if (i >= op->inputs.size())
            throw Error(ErrorCode::ArityConflict, "'" + name + "' takes " + std::to_string(op->inputs.size()) + " inputs", head.pos);
          roles[i] = op->inputs[i].name;
        }
        return *op;
      }
      std::vector<Param> inputs;
      for (const auto& r : roles) inputs.push_back(Param{r, TypeName(kAnyType), {}});
      if (const auto* op = schema.find_operation(name)) {
        if (!(op->inputs == inputs))
          throw Error(ErrorCode::ArityConflict, "'" + name + "' was already used with a different argument list", head.pos);
        return *op;
      }
      OperationSchema op;
      op.name = name;
      op.inputs = std::move(inputs);
      op.outputs = {Param{"out", TypeName(kAnyType), {}}};
      op.origin = Origin::Opaque;
      schema.operations.push_back(op);
      declared.push_back(std::move(op));
      return schema.operations.back();
    }

    Handle call(const SExpr& e, bool as_value) {
      if (e.items.empty()) throw Error(ErrorCode::UnsupportedForm, "empty call", e.pos);
      const SExpr& head = e.items[0];
      if (head.kind == SExpr::Kind::Keyword) throw Error(ErrorCode::KeywordAsHead, ":" + head.text, head.pos);
      if (head.kind != SExpr::Kind::Sym) throw Error(ErrorCode::UnsupportedForm, "call heads must be symbols", head.pos);
      if (head.text == "let" || head.text == "lambda" || head.text == "fn")
        throw Error(ErrorCode::UnsupportedForm, "'" + head.text + "' forms", head.pos);

      std::vector<std::string> roles;
      std::vector<const SExpr*> children;
      std::size_t positional = 0;
      bool keywords = false;
      for (std::size_t i = 1; i < e.items.size(); ++i) {
        const SExpr& x = e.items[i];
        if (x.kind == SExpr::Kind::Keyword) {
          if (i + 1 >= e.items.size())
            throw Error(ErrorCode::SyntaxError, "keyword :" + x.text + " has no value", x.pos);
          if (std::find(roles.begin(), roles.end(), x.text) != roles.end())
            throw Error(ErrorCode::DuplicateRole, ":" + x.text + " given twice", x.pos);
          keywords = true;
          roles.push_back(x.text);
          children.push_back(&e.items[++i]);
        } else {
          if (keywords) throw Error(ErrorCode::MixedPositionalAfterKeyword, "positional argument after a keyword", x.pos);
          roles.push_back("arg" + std::to_string(positional++));
          children.push_back(&x);
        }
      }

      Handle do_h = fresh();
      program.push_back(instr::NewDo{do_h, head.text});
      const OperationSchema& op = resolve(head, roles, positional);
      std::string op_name = op.name;
      std::string out_param;
      if (as_value) {
        if (op.outputs.size() != 1)
          throw Error(ErrorCode::NotAnExpression, "'" + op_name + "' does not have exactly one output", head.pos);
        out_param = op.outputs.front().name;
      }
      std::vector<Handle> values;
      for (const SExpr* c : children) values.push_back(value(*c));
      for (std::size_t i = 0; i < roles.size(); ++i) program.push_back(instr::SetArg{do_h, roles[i], values[i]});
      program.push_back(instr::Adjoin{do_h});
      if (!as_value) return do_h;
      Handle ref = fresh();
      program.push_back(instr::Refer{ref, op_name, out_param});
      return ref;
    }
  };

  DomainSchema schema_;
  std::vector<OperationSchema> auto_declared_;
};

inline TranslationOutput translate(const SExpr& expr, const DomainSchema& schema) {
  LispressTranslator t(schema);
  return t.translate(expr);
}

}  // namespace gpe
