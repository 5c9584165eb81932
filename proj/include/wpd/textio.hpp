#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wpd/context.hpp"
#include "wpd/diffop.hpp"
#include "wpd/expr.hpp"

namespace wpd {

/// Byte offsets [start, end) into the parsed input.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& message, SourceSpan s) : std::runtime_error(message), span(s) {}
  SourceSpan span;
};

struct ParseOptions {
  /// Unknown identifiers become symbols of `lenient_kind` instead of errors.
  bool lenient = false;
  SymbolKind lenient_kind = SymbolKind::parameter;
};

/// Grammar, loosest to tightest:
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?          right-associative
///   primary := number | 'i' | identifier | f '(' args ')' | 'sqrt' '(' sum ')'
///            | 'D' '[' f (',' var)+ ']' | '(' sum ')'
/// Numbers are exact decimals; exponents must be rational constants.
Expr parse_expr(std::string_view text, const SymbolTable& symbols, const ParseOptions& opts = {});

/// `W[v]` whole and `D[v]` plain generators, parenthesized or numeric
/// coefficients, juxtaposition (or '*') for composition with the leftmost
/// factor outermost, '+'/'-' for sums.
DifferentialOperator parse_operator(std::string_view text, const ContextPtr& ctx);

/// Line-oriented `.ctx` format; '#' starts a comment; LF or CRLF.
DependencyContext parse_context(std::string_view text);

/// Single identifier resolved against the symbol table.
Symbol parse_identifier(std::string_view text, const SymbolTable& symbols);

enum class Format { text, json, latex };
Format format_from_string(const std::string& s);

std::string print_expr(const Expr& e, Format format = Format::text);
nlohmann::json expr_json(const Expr& e);
std::string print_operator(const DifferentialOperator& op, Format format = Format::text);
nlohmann::json operator_json(const DifferentialOperator& op);
/// Serializes a context in the `.ctx` format (declared representations only).
std::string print_context(const DependencyContext& ctx);

/// Message followed by the offending line and a caret marker.
std::string annotate(std::string_view text, const ParseError& err);

}  // namespace wpd
