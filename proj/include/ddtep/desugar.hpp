#pragma once

#include <map>

#include "ddtep/ast.hpp"

namespace ddtep {

// One learnable clause parameter. All ground instances of the clause share it.
struct LearnableParam {
    int index = 0;
    std::string label;          // e.g. "authority/1#3" (head predicate + statement index)
    std::optional<double> init; // declared t(P0) value, if any
    Loc loc;
};

// Normalized program: no body disjunctions, probabilistic rules replaced by
// auxiliary facts plus deterministic rules, decision rules rewritten to an
// indicator decision plus a guard rule.
struct CoreProgram {
    Program program;
    std::vector<LearnableParam> params;
    std::vector<int> origins; // core statement index -> source statement index

    const LearnableParam& param(int index) const { return params.at(index); }
};

CoreProgram desugar(const Program& program);

/// Returns a copy of a *source* program with every learnable marker replaced
/// by the given constant, in parameter discovery order (the order desugar
/// assigns). Used to emit fitted programs.
Program apply_params(const Program& program, const std::vector<double>& values);

} // namespace ddtep
