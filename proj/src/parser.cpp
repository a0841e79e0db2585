#include "ddtep/parser.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "ddtep/render.hpp"
#include "ddtep/token.hpp"

namespace ddtep {

namespace {

constexpr double kAdSumSlack = 1e-9;

class Parser {
public:
    explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

    Program parse() {
        Program prog;
        while (!done()) prog.statements.push_back(parse_statement());
        check_arities(prog);
        check_head_roles(prog);
        return prog;
    }

    Atom parse_single_atom() {
        Atom atom = parse_atom();
        if (!done()) fail("unexpected trailing input after atom");
        return atom;
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;

    bool done() const { return pos_ >= toks_.size(); }
    const Token& peek(size_t ahead = 0) const {
        static const Token eof{TokenKind::Dot, "<end of input>", {}};
        return pos_ + ahead < toks_.size() ? toks_[pos_ + ahead] : eof;
    }
    bool at(TokenKind kind) const { return !done() && toks_[pos_].kind == kind; }
    const Token& take() {
        if (done()) fail("unexpected end of input");
        return toks_[pos_++];
    }
    bool accept(TokenKind kind) {
        if (!at(kind)) return false;
        ++pos_;
        return true;
    }
    const Token& expect(TokenKind kind) {
        if (!at(kind))
            fail(std::string("expected ") + token_kind_name(kind) + ", found '" + peek().text + "'");
        return toks_[pos_++];
    }
    [[noreturn]] void fail(const std::string& msg) const {
        Loc at = done() ? (toks_.empty() ? Loc{1, 1} : toks_.back().loc) : toks_[pos_].loc;
        throw Error(ErrorKind::Parse, msg, at);
    }

    // ---- terms and atoms ----

    Term parse_term() {
        if (at(TokenKind::Var)) return Term::variable(take().text);
        if (at(TokenKind::Number)) return Term::num(take().number);
        if (at(TokenKind::LBracket)) {
            take();
            std::vector<Term> elems;
            if (!at(TokenKind::RBracket)) {
                elems.push_back(parse_term());
                while (accept(TokenKind::Comma)) elems.push_back(parse_term());
                if (at(TokenKind::Pipe))
                    fail("improper list patterns ('|') are not supported");
            }
            expect(TokenKind::RBracket);
            return Term::list(std::move(elems));
        }
        if (at(TokenKind::Ident)) {
            std::string name = take().text;
            if (accept(TokenKind::LParen)) {
                std::vector<Term> args;
                args.push_back(parse_term());
                while (accept(TokenKind::Comma)) args.push_back(parse_term());
                expect(TokenKind::RParen);
                return Term::compound(std::move(name), std::move(args));
            }
            return Term::constant(std::move(name));
        }
        fail("expected a term, found '" + peek().text + "'");
    }

    Atom atom_from_term(const Term& term, Loc loc) {
        if (term.kind == Term::Kind::Constant) return Atom{term.name, {}, loc};
        if (term.kind == Term::Kind::Compound) return Atom{term.name, term.args, loc};
        fail("expected an atom, found term '" + to_string(term) + "'");
    }

    Atom parse_atom() {
        Loc loc = peek().loc;
        Term term = parse_term();
        return atom_from_term(term, loc);
    }

    // ---- bodies ----

    BodyElem parse_body_elem() {
        if (accept(TokenKind::Naf)) {
            Literal lit{parse_atom(), true};
            return BodyElem::literal(std::move(lit));
        }
        if (at(TokenKind::LParen)) {
            take();
            std::vector<Body> alts;
            alts.push_back(parse_conjunction());
            while (accept(TokenKind::Semicolon)) alts.push_back(parse_conjunction());
            expect(TokenKind::RParen);
            if (alts.size() == 1 && alts[0].size() == 1) return alts[0][0];
            return BodyElem::disjunction(std::move(alts));
        }
        Loc loc = peek().loc;
        Term lhs = parse_term();
        if (accept(TokenKind::NotEqual)) {
            Term rhs = parse_term();
            return BodyElem::literal(Literal{Atom{"\\=", {lhs, rhs}, loc}, false});
        }
        return BodyElem::literal(Literal{atom_from_term(lhs, loc), false});
    }

    Body parse_conjunction() {
        Body body;
        body.push_back(parse_body_elem());
        while (accept(TokenKind::Comma)) body.push_back(parse_body_elem());
        return body;
    }

    // ---- statements ----

    ProbExpr parse_prob_expr() {
        ProbExpr prob;
        prob.loc = peek().loc;
        if (at(TokenKind::Number)) {
            prob.value = take().number;
        } else if (at(TokenKind::Ident) && peek().text == "t" &&
                   (peek(1).kind == TokenKind::ColonColon ||
                    (peek(1).kind == TokenKind::LParen && peek(2).kind == TokenKind::Number))) {
            take();
            prob.learnable = true;
            if (accept(TokenKind::LParen)) {
                prob.value = expect(TokenKind::Number).number;
                expect(TokenKind::RParen);
            }
        } else {
            fail("expected a probability or 't(...)' marker");
        }
        if (prob.value && (*prob.value < 0.0 || *prob.value > 1.0))
            throw Error(ErrorKind::Parse,
                        "probability " + format_number(*prob.value) + " outside [0,1]", prob.loc);
        return prob;
    }

    Statement parse_statement() {
        Loc loc = peek().loc;
        StatementNode node = parse_statement_node();
        int end_line = expect(TokenKind::Dot).loc.line;
        return Statement{std::move(node), loc, end_line};
    }

    StatementNode parse_statement_node() {
        if (accept(TokenKind::If)) return Constraint{parse_conjunction()};
        if (at(TokenKind::Question)) return parse_decision();
        if (at(TokenKind::Number) ||
            (at(TokenKind::Ident) && peek().text == "t" &&
             (peek(1).kind == TokenKind::ColonColon ||
              (peek(1).kind == TokenKind::LParen && peek(2).kind == TokenKind::Number &&
               peek(3).kind == TokenKind::RParen && peek(4).kind == TokenKind::ColonColon))))
            return parse_annotated_disjunction();
        return parse_clause();
    }

    StatementNode parse_decision() {
        expect(TokenKind::Question);
        expect(TokenKind::ColonColon);
        Atom first = parse_atom();
        if (accept(TokenKind::If)) return DecisionRule{std::move(first), parse_conjunction(), {}};
        DecisionGroup group;
        group.alternatives.push_back(std::move(first));
        while (accept(TokenKind::Semicolon)) {
            expect(TokenKind::Question);
            expect(TokenKind::ColonColon);
            group.alternatives.push_back(parse_atom());
        }
        for (const Atom& alt : group.alternatives)
            if (!alt.is_ground())
                throw Error(ErrorKind::Parse,
                            "decision group alternative " + to_string(alt) + " must be ground",
                            alt.loc);
        return group;
    }

    StatementNode parse_annotated_disjunction() {
        AnnotatedDisjunction ad;
        Loc loc = peek().loc;
        ad.heads.push_back(parse_ad_head());
        while (accept(TokenKind::Semicolon)) ad.heads.push_back(parse_ad_head());
        if (accept(TokenKind::If)) ad.body = parse_conjunction();
        double sum = 0.0;
        bool all_const = true;
        for (const ADHead& head : ad.heads) {
            if (head.prob.learnable)
                all_const = false;
            else
                sum += *head.prob.value;
        }
        if (all_const && sum > 1.0 + kAdSumSlack)
            throw Error(ErrorKind::Parse,
                        "annotated disjunction probabilities sum to " + format_number(sum) +
                            " > 1",
                        loc);
        return ad;
    }

    ADHead parse_ad_head() {
        ProbExpr prob = parse_prob_expr();
        expect(TokenKind::ColonColon);
        return ADHead{std::move(prob), parse_atom()};
    }

    StatementNode parse_clause() {
        Atom head = parse_atom();
        if (head.pred == "utility") {
            if (head.args.size() != 2 || head.args[1].kind != Term::Kind::Number)
                throw Error(ErrorKind::Parse, "utility/2 expects (atom, number)", head.loc);
            UtilityDecl decl;
            decl.target = atom_from_term(head.args[0], head.loc);
            decl.reward = head.args[1].number;
            if (accept(TokenKind::If)) decl.guard = parse_conjunction();
            return decl;
        }
        if (head.pred == "evidence") {
            if (head.args.size() != 2 || head.args[1].kind != Term::Kind::Constant ||
                (head.args[1].name != "true" && head.args[1].name != "false"))
                throw Error(ErrorKind::Parse, "evidence/2 expects (atom, true|false)", head.loc);
            EvidenceDecl ev;
            ev.atom = atom_from_term(head.args[0], head.loc);
            ev.truth = head.args[1].name == "true";
            if (at(TokenKind::If)) fail("evidence declarations take no body");
            return ev;
        }
        Rule rule{std::move(head), {}};
        if (accept(TokenKind::If)) rule.body = parse_conjunction();
        return rule;
    }

    // ---- whole-program checks ----

    void each_atom(const Body& body, const std::function<void(const Atom&)>& fn) {
        for (const BodyElem& elem : body) {
            if (elem.is_disjunction())
                for (const Body& alt : elem.alts) each_atom(alt, fn);
            else
                fn(elem.lit.atom);
        }
    }

    void check_arities(const Program& prog) {
        std::map<std::string, std::pair<size_t, Loc>> seen;
        auto visit = [&](const Atom& atom) {
            auto [it, fresh] = seen.emplace(atom.pred, std::make_pair(atom.arity(), atom.loc));
            if (!fresh && it->second.first != atom.arity())
                throw Error(ErrorKind::Semantic,
                            "predicate " + atom.pred + " used with arity " +
                                std::to_string(atom.arity()) + " but earlier with arity " +
                                std::to_string(it->second.first) + " (line " +
                                std::to_string(it->second.second.line) + ")",
                            atom.loc);
        };
        for (const Statement& stmt : prog.statements) {
            std::visit(
                [&](const auto& node) {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, AnnotatedDisjunction>) {
                        for (const ADHead& head : node.heads) visit(head.atom);
                        each_atom(node.body, visit);
                    } else if constexpr (std::is_same_v<T, DecisionGroup>) {
                        for (const Atom& alt : node.alternatives) visit(alt);
                    } else if constexpr (std::is_same_v<T, DecisionRule>) {
                        visit(node.head);
                        each_atom(node.body, visit);
                    } else if constexpr (std::is_same_v<T, Rule>) {
                        visit(node.head);
                        each_atom(node.body, visit);
                    } else if constexpr (std::is_same_v<T, UtilityDecl>) {
                        visit(node.target);
                        each_atom(node.guard, visit);
                    } else if constexpr (std::is_same_v<T, Constraint>) {
                        each_atom(node.body, visit);
                    } else if constexpr (std::is_same_v<T, EvidenceDecl>) {
                        visit(node.atom);
                    }
                },
                stmt.node);
        }
    }

    void check_head_roles(const Program& prog) {
        enum Role { Probabilistic, Decision, Deterministic };
        static const char* role_names[] = {"probabilistic", "decision", "deterministic"};
        std::map<std::string, std::pair<Role, Loc>> roles;
        auto claim = [&](const Atom& atom, Role role) {
            if (atom.pred == "member" || atom.pred == "\\=")
                throw Error(ErrorKind::Semantic, "cannot redefine builtin " + atom.pred,
                            atom.loc);
            auto [it, fresh] = roles.emplace(atom.pred, std::make_pair(role, atom.loc));
            if (!fresh && it->second.first != role)
                throw Error(ErrorKind::Semantic,
                            "predicate " + atom.pred + " is a " + role_names[role] +
                                " head here but a " + role_names[it->second.first] +
                                " head at line " + std::to_string(it->second.second.line),
                            atom.loc);
        };
        for (const Statement& stmt : prog.statements) {
            if (const auto* ad = stmt_as<AnnotatedDisjunction>(stmt))
                for (const ADHead& head : ad->heads) claim(head.atom, Probabilistic);
            else if (const auto* group = stmt_as<DecisionGroup>(stmt))
                for (const Atom& alt : group->alternatives) claim(alt, Decision);
            else if (const auto* dr = stmt_as<DecisionRule>(stmt))
                claim(dr->head, Decision);
            else if (const auto* rule = stmt_as<Rule>(stmt))
                claim(rule->head, Deterministic);
        }
    }
};

} // namespace

Program parse_program(std::string_view text) { return Parser(text).parse(); }

Atom parse_ground_atom(std::string_view text) {
    Atom atom = Parser(text).parse_single_atom();
    if (!atom.is_ground())
        throw Error(ErrorKind::Parse, "atom " + to_string(atom) + " is not ground", atom.loc);
    return atom;
}

} // namespace ddtep
