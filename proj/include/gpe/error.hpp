// Diagnostics and the error type shared by every module.

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpe {

enum class ErrorCode {
  SyntaxError,
  UndeclaredType,
  UndeclaredPredicate,
  ArityMismatch,
  DuplicateName,
  UnboundVariable,
  AddDeleteConflict,
  TypeMismatch,
  PreconditionFailed,
  UnknownEntity,
  UnknownOperation,
  UnknownRole,
  DuplicateRole,
  WrongNodeKind,
  NodeStatusViolation,
  DanglingBranch,
  DuplicateBranch,
  DuplicateMember,
  DuplicateExtraEdge,
  DanglingNodeId,
  NoReferent,
  UnresolvedReference,
  InvocationFailed,
  UnbalancedParens,
  UnterminatedString,
  TrailingInput,
  UnsupportedForm,
  KeywordAsHead,
  MixedPositionalAfterKeyword,
  ArityConflict,
  NotAnExpression,
  IncompleteGraph,
  SearchExhausted,
  DeadlineExceeded,
  InternalError,
};

inline std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UndeclaredType: return "UndeclaredType";
    case ErrorCode::UndeclaredPredicate: return "UndeclaredPredicate";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::AddDeleteConflict: return "AddDeleteConflict";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::UnknownOperation: return "UnknownOperation";
    case ErrorCode::UnknownRole: return "UnknownRole";
    case ErrorCode::DuplicateRole: return "DuplicateRole";
    case ErrorCode::WrongNodeKind: return "WrongNodeKind";
    case ErrorCode::NodeStatusViolation: return "NodeStatusViolation";
    case ErrorCode::DanglingBranch: return "DanglingBranch";
    case ErrorCode::DuplicateBranch: return "DuplicateBranch";
    case ErrorCode::DuplicateMember: return "DuplicateMember";
    case ErrorCode::DuplicateExtraEdge: return "DuplicateExtraEdge";
    case ErrorCode::DanglingNodeId: return "DanglingNodeId";
    case ErrorCode::NoReferent: return "NoReferent";
    case ErrorCode::UnresolvedReference: return "UnresolvedReference";
    case ErrorCode::InvocationFailed: return "InvocationFailed";
    case ErrorCode::UnbalancedParens: return "UnbalancedParens";
    case ErrorCode::UnterminatedString: return "UnterminatedString";
    case ErrorCode::TrailingInput: return "TrailingInput";
    case ErrorCode::UnsupportedForm: return "UnsupportedForm";
    case ErrorCode::KeywordAsHead: return "KeywordAsHead";
    case ErrorCode::MixedPositionalAfterKeyword: return "MixedPositionalAfterKeyword";
    case ErrorCode::ArityConflict: return "ArityConflict";
    case ErrorCode::NotAnExpression: return "NotAnExpression";
    case ErrorCode::IncompleteGraph: return "IncompleteGraph";
    case ErrorCode::SearchExhausted: return "SearchExhausted";
    case ErrorCode::DeadlineExceeded: return "DeadlineExceeded";
    case ErrorCode::InternalError: return "InternalError";
  }
  return "Unknown";
}

// 1-based line/column; {0, 0} means "no source position".
struct SourcePos {
  int line = 0;
  int col = 0;

  bool known() const { return line > 0; }
  friend auto operator<=>(const SourcePos&, const SourcePos&) = default;
};

struct Diagnostic {
  ErrorCode code = ErrorCode::InternalError;
  std::string message;
  SourcePos pos;
  // Set for diagnostics raised while executing an instruction list.
  std::optional<std::size_t> instruction;

  std::string to_string() const {
    std::string out;
    if (pos.known()) out += std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": ";
    if (instruction) out += "instruction " + std::to_string(*instruction) + ": ";
    out += code_name(code);
    if (!message.empty()) out += ": " + message;
    return out;
  }
};

inline void sort_by_position(std::vector<Diagnostic>& diags) {
  std::stable_sort(diags.begin(), diags.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.pos < b.pos; });
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, SourcePos pos = {})
      : std::runtime_error(std::string(code_name(code)) + ": " + message),
        code_(code),
        detail_(std::move(message)),
        pos_(pos) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }
  SourcePos pos() const { return pos_; }

  Diagnostic diagnostic() const { return Diagnostic{code_, detail_, pos_, std::nullopt}; }

 private:
  ErrorCode code_;
  std::string detail_;
  SourcePos pos_;
};

}  // namespace gpe
