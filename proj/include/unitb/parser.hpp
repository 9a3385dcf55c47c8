#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "unitb/ast.hpp"

namespace unitb {

struct ParseError : std::runtime_error {
  std::vector<Diagnostic> diags;
  explicit ParseError(std::vector<Diagnostic> ds)
      : std::runtime_error(ds.empty() ? "parse error" : ds.front().message), diags(std::move(ds)) {}
};

// Parse one machine from source text. The result is normalized, sort-checked
// and well-formed; lexical/syntax/scope/sort problems raise ParseError with
// spans into the input.
Machine parse_machine(const std::string& text, const std::string& filename = "<input>");

// Parse a predicate in the scope of a machine (variables, sorts, defs).
// `extra` introduces additional bound variables (e.g. property free vars).
ExprPtr parse_predicate(const std::string& text, const Machine& context,
                        const std::vector<std::pair<std::string, SortId>>& extra = {},
                        bool allow_primed = false);

// Same, for terms of any sort (e.g. falsifies index expressions).
ExprPtr parse_expression(const std::string& text, const Machine& context,
                         const std::vector<std::pair<std::string, SortId>>& extra = {});

// Canonical text; parse_machine(pretty(m)) is structurally equal to m.
std::string pretty(const Machine& m);
std::string pretty(const ExprPtr& e);
std::string pretty_in(const Machine& m, const ExprPtr& e);

}  // namespace unitb
