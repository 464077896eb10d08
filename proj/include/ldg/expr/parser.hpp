#pragma once

#include <string_view>

#include "ldg/expr/graph.hpp"

namespace ldg::expr {

/// Parse one scalar expression. Grammar (loosest to tightest binding):
///   sum    := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := ('-'|'+') unary | power
///   power  := primary ('^' unary)?        right-associative
///   primary:= number | name | name '(' args ')' | '(' sum ')'
/// `pi` is always the constant. Throws ParseError with the character offset.
ExpressionGraph parse_expression(std::string_view text, const SymbolTable& symbols);

/// Parse `text` and append its root to `graph` (symbols interned per graph).
int parse_into(ExpressionGraph& graph, std::string_view text);

/// Parse a program of `name = expr;` statements as produced by emit_source.
/// Names assigned earlier may be referenced later. Every assignment whose
/// target starts with `output_prefix` followed by an index k becomes root k.
ExpressionGraph parse_program(std::string_view text, const SymbolTable& symbols,
                              std::string_view output_prefix = "out");

} // namespace ldg::expr
