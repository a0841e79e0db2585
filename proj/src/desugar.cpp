#include "ddtep/desugar.hpp"

#include <set>

#include "ddtep/render.hpp"

namespace ddtep {

namespace {

void collect_vars(const Term& term, std::vector<std::string>& out, std::set<std::string>& seen) {
    if (term.kind == Term::Kind::Variable) {
        if (seen.insert(term.name).second) out.push_back(term.name);
        return;
    }
    for (const Term& arg : term.args) collect_vars(arg, out, seen);
}

void collect_vars(const Atom& atom, std::vector<std::string>& out, std::set<std::string>& seen) {
    for (const Term& arg : atom.args) collect_vars(arg, out, seen);
}

// Expands nested body disjunctions into a list of plain conjunctions.
std::vector<std::vector<Literal>> dnf(const Body& body) {
    std::vector<std::vector<Literal>> branches{{}};
    for (const BodyElem& elem : body) {
        if (!elem.is_disjunction()) {
            for (auto& branch : branches) branch.push_back(elem.lit);
            continue;
        }
        std::vector<std::vector<Literal>> expanded;
        for (const Body& alt : elem.alts) {
            for (const auto& alt_branch : dnf(alt)) {
                for (const auto& prefix : branches) {
                    auto combined = prefix;
                    combined.insert(combined.end(), alt_branch.begin(), alt_branch.end());
                    expanded.push_back(std::move(combined));
                }
            }
        }
        branches = std::move(expanded);
    }
    return branches;
}

Body body_of(const std::vector<Literal>& literals) {
    Body body;
    body.reserve(literals.size());
    for (const Literal& lit : literals) body.push_back(BodyElem::literal(lit));
    return body;
}

struct Desugarer {
    const Program& source;
    CoreProgram core;
    std::set<std::string> used_preds;
    int aux_counter = 0;

    explicit Desugarer(const Program& program) : source(program) {
        for (const Statement& stmt : program.statements) {
            std::visit(
                [&](const auto& node) {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, AnnotatedDisjunction>) {
                        for (const ADHead& head : node.heads) used_preds.insert(head.atom.pred);
                    } else if constexpr (std::is_same_v<T, DecisionGroup>) {
                        for (const Atom& alt : node.alternatives) used_preds.insert(alt.pred);
                    } else if constexpr (std::is_same_v<T, DecisionRule> ||
                                         std::is_same_v<T, Rule>) {
                        used_preds.insert(node.head.pred);
                    }
                },
                stmt.node);
        }
    }

    std::string fresh_pred(const std::string& base) {
        std::string name = base;
        int suffix = 1;
        while (!used_preds.insert(name).second) name = base + "_" + std::to_string(++suffix);
        return name;
    }

    void emit(StatementNode node, const Statement& origin) {
        core.program.statements.push_back(Statement{std::move(node), origin.loc, origin.end_line});
    }

    int assign_param(ProbExpr& prob, const Atom& head, int stmt_index) {
        if (!prob.learnable) return -1;
        LearnableParam param;
        param.index = static_cast<int>(core.params.size());
        param.label = head.pred + "/" + std::to_string(head.arity()) + "#" +
                      std::to_string(stmt_index);
        param.init = prob.value;
        param.loc = prob.loc;
        prob.param = param.index;
        core.params.push_back(param);
        return param.index;
    }

    void desugar_ad(const AnnotatedDisjunction& source_ad, const Statement& stmt, int stmt_index) {
        AnnotatedDisjunction ad = source_ad;
        std::set<std::string> head_keys;
        for (ADHead& head : ad.heads) {
            assign_param(head.prob, head.atom, stmt_index);
            if (!head_keys.insert(to_string(head.atom)).second)
                throw Error(ErrorKind::Semantic,
                            "duplicate head " + to_string(head.atom) +
                                " in annotated disjunction",
                            head.atom.loc);
        }
        if (ad.body.empty()) {
            emit(std::move(ad), stmt);
            return;
        }

        // Probabilistic rule: one auxiliary fact per source clause, shared by
        // all ground instances of the clause variables.
        ++aux_counter;
        std::vector<std::string> vars;
        std::set<std::string> seen;
        for (const ADHead& head : ad.heads) collect_vars(head.atom, vars, seen);
        for (const auto& branch : dnf(ad.body))
            for (const Literal& lit : branch) collect_vars(lit.atom, vars, seen);
        std::vector<Term> aux_args;
        for (const std::string& v : vars) aux_args.push_back(Term::variable(v));

        AnnotatedDisjunction aux;
        aux.aux_of = stmt_index;
        std::vector<Atom> aux_atoms;
        for (const ADHead& head : ad.heads) {
            Atom aux_atom{fresh_pred(head.atom.pred + "_aux" + std::to_string(aux_counter)),
                          aux_args, head.atom.loc};
            aux_atoms.push_back(aux_atom);
            aux.heads.push_back(ADHead{head.prob, std::move(aux_atom)});
        }
        emit(std::move(aux), stmt);

        for (size_t i = 0; i < ad.heads.size(); ++i) {
            for (const auto& branch : dnf(ad.body)) {
                std::vector<Literal> body{Literal{aux_atoms[i], false}};
                body.insert(body.end(), branch.begin(), branch.end());
                emit(Rule{ad.heads[i].atom, body_of(body)}, stmt);
            }
        }
    }

    void desugar_decision_rule(const DecisionRule& rule, const Statement& stmt) {
        std::string indicator = fresh_pred("d_" + rule.head.pred);
        Atom indicator_atom{indicator, rule.head.args, rule.head.loc};
        for (const auto& branch : dnf(rule.body)) {
            DecisionRule decl{rule.head, body_of(branch), indicator};
            emit(std::move(decl), stmt);
            std::vector<Literal> body{Literal{indicator_atom, false}};
            body.insert(body.end(), branch.begin(), branch.end());
            emit(Rule{rule.head, body_of(body)}, stmt);
        }
    }

    CoreProgram run() {
        for (size_t i = 0; i < source.statements.size(); ++i) {
            const Statement& stmt = source.statements[i];
            std::visit(
                [&](const auto& node) {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, AnnotatedDisjunction>) {
                        desugar_ad(node, stmt, static_cast<int>(i));
                    } else if constexpr (std::is_same_v<T, DecisionRule>) {
                        desugar_decision_rule(node, stmt);
                    } else if constexpr (std::is_same_v<T, Rule>) {
                        for (const auto& branch : dnf(node.body))
                            emit(Rule{node.head, body_of(branch)}, stmt);
                    } else if constexpr (std::is_same_v<T, UtilityDecl>) {
                        for (const auto& branch : dnf(node.guard))
                            emit(UtilityDecl{node.target, node.reward, body_of(branch)}, stmt);
                    } else if constexpr (std::is_same_v<T, Constraint>) {
                        for (const auto& branch : dnf(node.body))
                            emit(Constraint{body_of(branch)}, stmt);
                    } else {
                        emit(node, stmt);
                    }
                },
                stmt.node);
            while (core.origins.size() < core.program.statements.size())
                core.origins.push_back(static_cast<int>(i));
        }
        return std::move(core);
    }
};

} // namespace

CoreProgram desugar(const Program& program) { return Desugarer(program).run(); }

Program apply_params(const Program& program, const std::vector<double>& values) {
    Program out = program;
    size_t next = 0;
    for (Statement& stmt : out.statements) {
        auto* ad = std::get_if<AnnotatedDisjunction>(&stmt.node);
        if (!ad) continue;
        for (ADHead& head : ad->heads) {
            if (!head.prob.learnable) continue;
            if (next >= values.size())
                throw Error(ErrorKind::Usage, "not enough parameter values to apply");
            head.prob.learnable = false;
            head.prob.value = values[next++];
            head.prob.param = -1;
        }
    }
    if (next != values.size())
        throw Error(ErrorKind::Usage, "too many parameter values for program");
    return out;
}

} // namespace ddtep
