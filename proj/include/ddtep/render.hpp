#pragma once

#include <string>

#include "ddtep/ast.hpp"

namespace ddtep {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_number(double value);

/// Canonical one-line text of a term/atom: no spaces, e.g. "give(carol,area51)".
std::string to_string(const Term& term);
std::string to_string(const Atom& atom);
std::string to_string(const Literal& lit);

std::string render(const Statement& statement);

/// Source text whose parse is structurally equal to `program`.
std::string render(const Program& program);

} // namespace ddtep
