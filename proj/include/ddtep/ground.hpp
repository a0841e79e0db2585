#pragma once

#include <map>
#include <set>
#include <unordered_map>

#include "ddtep/desugar.hpp"

namespace ddtep {

using Binding = std::map<std::string, Term>;

struct ChoiceOutcome {
    int atom = -1; // interned atom id, -1 for the NONE residual outcome
    double prob = 0.0;
    int param = -1; // learnable parameter index, -1 if frozen
};

// One independent probabilistic choice: a ground annotated disjunction or a
// ground instance of an auxiliary fact introduced for a probabilistic rule.
struct ChoiceVariable {
    int id = 0;
    std::vector<ChoiceOutcome> outcomes;
    int origin = -1; // source statement index
    std::string label;
};

struct DecisionVariable {
    int id = 0;
    int atom = -1;      // source-level atom, the name used in strategies
    int indicator = -1; // atom made true in the least model when picked
    int group = -1;     // exactly-one group index, -1 for free guarded decisions
    int origin = -1;
};

struct GroundLiteral {
    int atom = -1;
    bool negated = false;
    bool operator==(const GroundLiteral& o) const {
        return atom == o.atom && negated == o.negated;
    }
};

struct GroundRule {
    int head = -1;
    std::vector<GroundLiteral> body;
    int stratum = 0;
};

struct GroundUtility {
    int atom = -1;
    double reward = 0.0;
};

// Admissibility filter: a strategy violating any ground constraint body is
// inadmissible. Bodies reference only decision-determined and static atoms.
struct GroundConstraint {
    std::vector<GroundLiteral> body;
    std::string text;
};

struct GroundProgram {
    std::vector<std::string> atom_text;
    std::vector<Atom> atoms;
    std::unordered_map<std::string, int> atom_ids;

    std::vector<ChoiceVariable> choices;
    std::vector<DecisionVariable> decisions;
    std::vector<std::vector<int>> groups; // decision ids per exactly-one group
    std::vector<int> free_decisions;      // decision ids without a group

    std::vector<GroundRule> rules; // sorted by stratum, then canonically
    int strata_count = 0;
    std::vector<int> ds_rules; // indices of rules over decision-static predicates

    std::vector<GroundUtility> utilities; // canonical order, one entry per atom
    std::vector<GroundConstraint> constraints;
    std::vector<std::pair<int, bool>> evidence;

    std::vector<char> static_true;                       // per atom id
    std::unordered_map<int, std::vector<std::pair<int, int>>> choice_outcomes_of;
    std::unordered_map<int, int> decision_by_indicator;  // indicator atom -> decision id
    std::unordered_map<int, int> decision_by_atom;       // source atom -> decision id
    std::map<std::string, int> pred_stratum;             // derived predicate -> stratum
    std::vector<std::string> warnings;
    int param_count = 0;

    int atom_id(const std::string& text) const {
        auto it = atom_ids.find(text);
        return it == atom_ids.end() ? -1 : it->second;
    }
    const std::string& atom_name(int id) const { return atom_text.at(id); }

    long double world_count() const {
        long double n = 1.0L;
        for (const ChoiceVariable& c : choices) n *= static_cast<long double>(c.outcomes.size());
        return n;
    }

    /// Instances of each learnable parameter as (choice id, outcome index).
    std::vector<std::vector<std::pair<int, int>>> param_instances() const;

    /// Copy with learnable outcome probabilities replaced and residual NONE
    /// masses recomputed. Throws if some disjunction mass exceeds 1.
    GroundProgram with_params(const std::vector<double>& values) const;
};

/// All constants (and numbers) occurring in the program plus `extra`;
/// list terms contribute their elements.
std::set<Term> herbrand_universe(const CoreProgram& core, const std::set<Term>& extra = {});

/// Evaluates member/2 or \=/2 under a partial binding, returning the extended
/// bindings. Throws an instantiation error when required arguments are unbound.
std::vector<Binding> eval_builtin(const Literal& lit, const Binding& binding);

bool is_builtin(const std::string& pred);

/// Grounds a desugared program. `params` supplies values for learnable
/// parameters; when absent, declared t(P0) initial values are used.
GroundProgram ground(const CoreProgram& core, const std::set<Term>& extra = {},
                     const std::vector<double>* params = nullptr);

/// Stratum per derived predicate; throws on unstratified negation.
std::map<std::string, int> check_stratified(const CoreProgram& core);

/// One ground clause per line, canonical order. Used by golden tests.
std::string dump(const GroundProgram& gp);

} // namespace ddtep
