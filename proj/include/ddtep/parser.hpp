#pragma once

#include <string_view>

#include "ddtep/ast.hpp"

namespace ddtep {

/// Parses DDTEP source text. Throws Error(Lex/Parse/Semantic) with a source
/// location on malformed input, head-role conflicts, arity clashes, and
/// annotated-disjunction probability-sum violations.
Program parse_program(std::string_view text);

/// Parses a single ground atom such as "give(carol,area51)". Used by the CLI.
Atom parse_ground_atom(std::string_view text);

} // namespace ddtep
