#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ddtep/error.hpp"

namespace ddtep {

// ---------------------------------------------------------------------------
// Terms and atoms
// ---------------------------------------------------------------------------

struct Term {
    enum class Kind { Variable, Constant, Number, List, Compound };

    Kind kind = Kind::Constant;
    std::string name;        // Variable / Constant name, Compound functor
    double number = 0.0;     // Kind::Number
    std::vector<Term> args;  // List elements or Compound arguments

    static Term variable(std::string n) { return {Kind::Variable, std::move(n), 0.0, {}}; }
    static Term constant(std::string n) { return {Kind::Constant, std::move(n), 0.0, {}}; }
    static Term num(double v) { return {Kind::Number, {}, v, {}}; }
    static Term list(std::vector<Term> elems) { return {Kind::List, {}, 0.0, std::move(elems)}; }
    static Term compound(std::string f, std::vector<Term> a) {
        return {Kind::Compound, std::move(f), 0.0, std::move(a)};
    }

    bool is_ground() const {
        if (kind == Kind::Variable) return false;
        for (const Term& t : args)
            if (!t.is_ground()) return false;
        return true;
    }

    bool operator==(const Term& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
        case Kind::Variable:
        case Kind::Constant: return name == o.name;
        case Kind::Number: return number == o.number;
        case Kind::List: return args == o.args;
        case Kind::Compound: return name == o.name && args == o.args;
        }
        return false;
    }
    bool operator!=(const Term& o) const { return !(*this == o); }
    bool operator<(const Term& o) const {
        if (kind != o.kind) return kind < o.kind;
        if (name != o.name) return name < o.name;
        if (number != o.number) return number < o.number;
        return args < o.args;
    }
};

struct Atom {
    std::string pred;
    std::vector<Term> args;
    Loc loc;

    size_t arity() const { return args.size(); }
    bool is_ground() const {
        for (const Term& t : args)
            if (!t.is_ground()) return false;
        return true;
    }

    bool operator==(const Atom& o) const { return pred == o.pred && args == o.args; }
    bool operator!=(const Atom& o) const { return !(*this == o); }
};

struct Literal {
    Atom atom;
    bool negated = false;

    bool operator==(const Literal& o) const { return negated == o.negated && atom == o.atom; }
};

// A body element is either a literal or a parenthesized disjunction of
// conjunctions, e.g. the "(bake_cake;informed_bake)" in a rule body.
// Desugaring removes all disjunctions.
struct BodyElem {
    Literal lit;
    std::vector<std::vector<BodyElem>> alts; // non-empty => disjunction

    bool is_disjunction() const { return !alts.empty(); }

    static BodyElem literal(Literal l) { return {std::move(l), {}}; }
    static BodyElem disjunction(std::vector<std::vector<BodyElem>> a) {
        return {{}, std::move(a)};
    }

    bool operator==(const BodyElem& o) const { return lit == o.lit && alts == o.alts; }
};

using Body = std::vector<BodyElem>;

// ---------------------------------------------------------------------------
// Statements
// ---------------------------------------------------------------------------

// Probability annotation on an annotated-disjunction head: either a constant
// in [0,1] or a learnable parameter `t(P0)` / `t` with optional initial value.
struct ProbExpr {
    bool learnable = false;
    std::optional<double> value; // constant, or initial value of a learnable
    int param = -1;              // parameter index, assigned by desugar
    Loc loc;

    bool operator==(const ProbExpr& o) const {
        return learnable == o.learnable && value == o.value;
    }
};

struct ADHead {
    ProbExpr prob;
    Atom atom;
    bool operator==(const ADHead& o) const { return prob == o.prob && atom == o.atom; }
};

// p1::a1; ...; pn::an :- body.   Single probabilistic facts are the one-head,
// empty-body case.
struct AnnotatedDisjunction {
    std::vector<ADHead> heads;
    Body body;
    // Desugar bookkeeping: statement index of the source clause this auxiliary
    // fact was split from, or -1 for user-written disjunctions.
    int aux_of = -1;
    bool operator==(const AnnotatedDisjunction& o) const {
        return heads == o.heads && body == o.body;
    }
};

// ?::a1;?::a2;...;?::an.  Exactly-one decision group.
struct DecisionGroup {
    std::vector<Atom> alternatives;
    bool operator==(const DecisionGroup& o) const { return alternatives == o.alternatives; }
};

// ?::head :- body.  Free guarded decision. Desugar fills `indicator` with the
// fresh decision predicate and emits the companion rule head :- indicator, body.
struct DecisionRule {
    Atom head;
    Body body;
    std::string indicator;
    bool operator==(const DecisionRule& o) const { return head == o.head && body == o.body; }
};

struct Rule {
    Atom head;
    Body body;
    bool operator==(const Rule& o) const { return head == o.head && body == o.body; }
};

struct UtilityDecl {
    Atom target;
    double reward = 0.0;
    Body guard;
    bool operator==(const UtilityDecl& o) const {
        return target == o.target && reward == o.reward && guard == o.guard;
    }
};

struct Constraint {
    Body body;
    bool operator==(const Constraint& o) const { return body == o.body; }
};

struct EvidenceDecl {
    Atom atom;
    bool truth = true;
    bool operator==(const EvidenceDecl& o) const { return atom == o.atom && truth == o.truth; }
};

using StatementNode = std::variant<AnnotatedDisjunction, DecisionGroup, DecisionRule, Rule,
                                   UtilityDecl, Constraint, EvidenceDecl>;

struct Statement {
    StatementNode node;
    Loc loc;
    int end_line = 0; // line of the terminating '.'

    bool operator==(const Statement& o) const { return node == o.node; }
};

struct Program {
    std::vector<Statement> statements;
    bool operator==(const Program& o) const { return statements == o.statements; }
};

template <class T>
const T* stmt_as(const Statement& s) {
    return std::get_if<T>(&s.node);
}

} // namespace ddtep
