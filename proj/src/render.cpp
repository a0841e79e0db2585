#include "ddtep/render.hpp"

#include <charconv>

namespace ddtep {

std::string format_number(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

std::string to_string(const Term& term) {
    switch (term.kind) {
    case Term::Kind::Variable:
    case Term::Kind::Constant: return term.name;
    case Term::Kind::Number: return format_number(term.number);
    case Term::Kind::List: {
        std::string out = "[";
        for (size_t i = 0; i < term.args.size(); ++i) {
            if (i) out += ",";
            out += to_string(term.args[i]);
        }
        return out + "]";
    }
    case Term::Kind::Compound: {
        std::string out = term.name + "(";
        for (size_t i = 0; i < term.args.size(); ++i) {
            if (i) out += ",";
            out += to_string(term.args[i]);
        }
        return out + ")";
    }
    }
    return {};
}

std::string to_string(const Atom& atom) {
    if (atom.args.empty()) return atom.pred;
    if (atom.pred == "\\=" && atom.args.size() == 2)
        return to_string(atom.args[0]) + " \\= " + to_string(atom.args[1]);
    std::string out = atom.pred + "(";
    for (size_t i = 0; i < atom.args.size(); ++i) {
        if (i) out += ",";
        out += to_string(atom.args[i]);
    }
    return out + ")";
}

std::string to_string(const Literal& lit) {
    return lit.negated ? "\\+" + to_string(lit.atom) : to_string(lit.atom);
}

namespace {

std::string render_body(const Body& body);

std::string render_elem(const BodyElem& elem) {
    if (!elem.is_disjunction()) return to_string(elem.lit);
    std::string out = "(";
    for (size_t i = 0; i < elem.alts.size(); ++i) {
        if (i) out += ";";
        out += render_body(elem.alts[i]);
    }
    return out + ")";
}

std::string render_body(const Body& body) {
    std::string out;
    for (size_t i = 0; i < body.size(); ++i) {
        if (i) out += ", ";
        out += render_elem(body[i]);
    }
    return out;
}

std::string render_prob(const ProbExpr& prob) {
    if (!prob.learnable) return format_number(prob.value.value_or(0.0));
    if (prob.value) return "t(" + format_number(*prob.value) + ")";
    return "t";
}

struct StatementRenderer {
    std::string operator()(const AnnotatedDisjunction& ad) const {
        std::string out;
        for (size_t i = 0; i < ad.heads.size(); ++i) {
            if (i) out += "; ";
            out += render_prob(ad.heads[i].prob) + "::" + to_string(ad.heads[i].atom);
        }
        if (!ad.body.empty()) out += " :- " + render_body(ad.body);
        return out + ".";
    }
    std::string operator()(const DecisionGroup& group) const {
        std::string out;
        for (size_t i = 0; i < group.alternatives.size(); ++i) {
            if (i) out += ";";
            out += "?::" + to_string(group.alternatives[i]);
        }
        return out + ".";
    }
    std::string operator()(const DecisionRule& rule) const {
        return "?::" + to_string(rule.head) + " :- " + render_body(rule.body) + ".";
    }
    std::string operator()(const Rule& rule) const {
        if (rule.body.empty()) return to_string(rule.head) + ".";
        return to_string(rule.head) + " :- " + render_body(rule.body) + ".";
    }
    std::string operator()(const UtilityDecl& decl) const {
        std::string out =
            "utility(" + to_string(decl.target) + ", " + format_number(decl.reward) + ")";
        if (!decl.guard.empty()) out += " :- " + render_body(decl.guard);
        return out + ".";
    }
    std::string operator()(const Constraint& constraint) const {
        return ":- " + render_body(constraint.body) + ".";
    }
    std::string operator()(const EvidenceDecl& ev) const {
        return "evidence(" + to_string(ev.atom) + "," + (ev.truth ? "true" : "false") + ").";
    }
};

} // namespace

std::string render(const Statement& statement) {
    return std::visit(StatementRenderer{}, statement.node);
}

std::string render(const Program& program) {
    std::string out;
    for (const Statement& s : program.statements) {
        out += render(s);
        out += "\n";
    }
    return out;
}

} // namespace ddtep
