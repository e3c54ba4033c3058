// Positioned S-expression reader shared by the domain, program and Lispress parsers.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gpe/error.hpp"
#include "gpe/value.hpp"

namespace gpe {

struct SExpr {
  enum class Kind { Sym, Str, Num, Keyword, List };

  Kind kind = Kind::List;
  // Sym: name; Str: decoded contents; Num: canonical digits; Keyword: name without ':'.
  std::string text;
  std::vector<SExpr> items;
  SourcePos pos;
  // Text of the `;` comment lines directly preceding this form (top-level forms only).
  std::vector<std::string> leading_comments;

  static SExpr sym(std::string s) { return SExpr{Kind::Sym, std::move(s), {}, {}, {}}; }
  static SExpr str(std::string s) { return SExpr{Kind::Str, std::move(s), {}, {}, {}}; }
  static SExpr num(const Integer& i) { return SExpr{Kind::Num, i.str(), {}, {}, {}}; }
  static SExpr keyword(std::string s) { return SExpr{Kind::Keyword, std::move(s), {}, {}, {}}; }
  static SExpr list(std::vector<SExpr> xs) { return SExpr{Kind::List, {}, std::move(xs), {}, {}}; }

  bool is_list() const { return kind == Kind::List; }
  bool is_sym(std::string_view s) const { return kind == Kind::Sym && text == s; }

  // Structural equality; positions and comments are ignored.
  friend bool operator==(const SExpr& a, const SExpr& b) {
    return a.kind == b.kind && a.text == b.text && a.items == b.items;
  }
};

inline std::string print_sexpr(const SExpr& e) {
  switch (e.kind) {
    case SExpr::Kind::Sym:
    case SExpr::Kind::Num: return e.text;
    case SExpr::Kind::Str: return quote_string(e.text);
    case SExpr::Kind::Keyword: return ":" + e.text;
    case SExpr::Kind::List: {
      std::string out = "(";
      for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        out += print_sexpr(e.items[i]);
      }
      return out + ")";
    }
  }
  return {};
}

struct ReadResult {
  std::vector<SExpr> forms;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
};

namespace detail {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  ReadResult read_all() {
    ReadResult result;
    try {
      while (true) {
        skip_space();
        if (at_end()) break;
        std::vector<std::string> comments = std::move(pending_comments_);
        pending_comments_.clear();
        if (peek() == ')') throw Error(ErrorCode::UnbalancedParens, "unexpected ')'", here());
        SExpr form = read_form();
        form.leading_comments = std::move(comments);
        result.forms.push_back(std::move(form));
      }
    } catch (const Error& e) {
      result.diagnostics.push_back(e.diagnostic());
    }
    return result;
  }

 private:
  bool at_end() const { return i_ >= text_.size(); }
  char peek() const { return text_[i_]; }
  SourcePos here() const { return {line_, col_}; }

  void advance() {
    if (text_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_space() {
    while (!at_end()) {
      char c = peek();
      if (c == ';') {
        std::size_t start = i_ + 1;
        while (!at_end() && peek() != '\n') advance();
        std::string_view body = text_.substr(start, i_ - start);
        while (!body.empty() && (body.front() == ' ' || body.front() == ';')) body.remove_prefix(1);
        while (!body.empty() && (body.back() == ' ' || body.back() == '\r')) body.remove_suffix(1);
        pending_comments_.emplace_back(body);
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  static bool is_delimiter(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '(' || c == ')' || c == '"' || c == ';';
  }

  SExpr read_form() {
    SourcePos pos = here();
    char c = peek();
    if (c == '(') {
      advance();
      SExpr list = SExpr::list({});
      list.pos = pos;
      while (true) {
        skip_space();
        if (at_end()) throw Error(ErrorCode::UnbalancedParens, "missing ')'", pos);
        if (peek() == ')') {
          advance();
          break;
        }
        list.items.push_back(read_form());
      }
      pending_comments_.clear();
      return list;
    }
    if (c == '"') return read_string(pos);
    std::size_t start = i_;
    while (!at_end() && !is_delimiter(peek())) advance();
    std::string_view token = text_.substr(start, i_ - start);
    SExpr atom;
    if (auto n = Integer::parse(token)) {
      atom = SExpr::num(*n);
    } else if (token.size() > 1 && token[0] == ':') {
      atom = SExpr::keyword(std::string(token.substr(1)));
    } else {
      atom = SExpr::sym(std::string(token));
    }
    atom.pos = pos;
    return atom;
  }

  SExpr read_string(SourcePos pos) {
    advance();
    std::string out;
    while (true) {
      if (at_end()) throw Error(ErrorCode::UnterminatedString, "string not closed", pos);
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) throw Error(ErrorCode::UnterminatedString, "string not closed", pos);
        char e = peek();
        advance();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: out += e;
        }
      } else {
        out += c;
      }
    }
    SExpr s = SExpr::str(std::move(out));
    s.pos = pos;
    return s;
  }

  std::string_view text_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::vector<std::string> pending_comments_;
};

}  // namespace detail

inline ReadResult read_sexprs(std::string_view text) { return detail::Reader(text).read_all(); }

}  // namespace gpe
