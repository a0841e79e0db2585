#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ddtep/desugar.hpp"
#include "ddtep/parser.hpp"
#include "ddtep/render.hpp"
#include "ddtep/token.hpp"
#include "test_util.hpp"

using namespace ddtep;

TEST_CASE("tokenize probabilistic fact") {
    auto toks = tokenize("0.5::fire.");
    REQUIRE(toks.size() == 4);
    CHECK(toks[0].kind == TokenKind::Number);
    CHECK(toks[0].number == doctest::Approx(0.5));
    CHECK(toks[1].kind == TokenKind::ColonColon);
    CHECK(toks[2].kind == TokenKind::Ident);
    CHECK(toks[2].text == "fire");
    CHECK(toks[3].kind == TokenKind::Dot);
}

TEST_CASE("tokenize empty input") { CHECK(tokenize("").empty()); }

TEST_CASE("tokenize decision group") {
    auto toks = tokenize("?::ask;?::long;?::short.");
    REQUIRE(toks.size() == 12);
    CHECK(toks.back().kind == TokenKind::Dot);
    CHECK(toks[0].kind == TokenKind::Question);
    CHECK(toks[1].kind == TokenKind::ColonColon);
}

TEST_CASE("tokenize records spans and strips comments") {
    auto toks = tokenize("a. % comment\nb.");
    REQUIRE(toks.size() == 4);
    CHECK(toks[2].loc.line == 2);
    CHECK(toks[2].loc.col == 1);
}

TEST_CASE("lexical error carries location") {
    try {
        tokenize("a.\n  @b.");
        FAIL("expected a lex error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Lex);
        CHECK(e.loc().line == 2);
        CHECK(e.loc().col == 3);
    }
}

TEST_CASE("parse utility declaration") {
    Program p = parse_program("utility(run_into_wall, -30).");
    REQUIRE(p.statements.size() == 1);
    const auto* decl = stmt_as<UtilityDecl>(p.statements[0]);
    REQUIRE(decl);
    CHECK(decl->target.pred == "run_into_wall");
    CHECK(decl->reward == doctest::Approx(-30.0));
    CHECK(decl->guard.empty());
}

TEST_CASE("parse decision rule") {
    Program p = parse_program("?::give(P,T):-person(P),topic(T).");
    const auto* rule = stmt_as<DecisionRule>(p.statements.at(0));
    REQUIRE(rule);
    CHECK(rule->head.pred == "give");
    CHECK(rule->head.args.size() == 2);
    CHECK(rule->body.size() == 2);
}

TEST_CASE("parse decision group vs rule vs annotated disjunction") {
    Program p = parse_program("?::ask;?::long;?::short.\n"
                              "0.5::cake_is_ethical; 0.5::death_is_ethical.\n"
                              "utility(a,2) :- b.\n"
                              ":- give(P,T1), give(P,T2), T1 \\= T2.\n"
                              "evidence(impact(ann,t0),true).\n");
    CHECK(stmt_as<DecisionGroup>(p.statements.at(0)));
    CHECK(stmt_as<DecisionGroup>(p.statements.at(0))->alternatives.size() == 3);
    CHECK(stmt_as<AnnotatedDisjunction>(p.statements.at(1)));
    CHECK(stmt_as<UtilityDecl>(p.statements.at(2)));
    CHECK(stmt_as<Constraint>(p.statements.at(3)));
    const auto* ev = stmt_as<EvidenceDecl>(p.statements.at(4));
    REQUIRE(ev);
    CHECK(ev->truth);
    CHECK(to_string(ev->atom) == "impact(ann,t0)");
}

TEST_CASE("annotated disjunction over probability mass is rejected") {
    CHECK_THROWS_WITH_AS(parse_program("0.6::a; 0.6::b."),
                         doctest::Contains("sum to 1.2"), Error);
}

TEST_CASE("probability literals outside [0,1] are rejected") {
    CHECK_THROWS_AS(parse_program("1.5::a."), Error);
    CHECK_THROWS_AS(parse_program("t(1.5)::a."), Error);
}

TEST_CASE("head role conflicts are rejected") {
    CHECK_THROWS_WITH_AS(parse_program("0.5::a. a :- b."), doctest::Contains("deterministic"),
                         Error);
    CHECK_THROWS_AS(parse_program("?::a;?::b. 0.3::a."), Error);
    CHECK_THROWS_AS(parse_program("?::a :- g. a :- b."), Error);
}

TEST_CASE("arity must be consistent per predicate") {
    CHECK_THROWS_WITH_AS(parse_program("p(a). q :- p(a,b)."), doctest::Contains("arity"), Error);
}

TEST_CASE("builtins cannot be redefined") {
    CHECK_THROWS_AS(parse_program("member(a,[a])."), Error);
}

TEST_CASE("learnable markers") {
    Program p = parse_program("t(0.9)::authority(X) :- person(X).\nt::guess.");
    const auto* with_init = stmt_as<AnnotatedDisjunction>(p.statements.at(0));
    REQUIRE(with_init);
    CHECK(with_init->heads[0].prob.learnable);
    CHECK(with_init->heads[0].prob.value == 0.9);
    const auto* without = stmt_as<AnnotatedDisjunction>(p.statements.at(1));
    REQUIRE(without);
    CHECK(without->heads[0].prob.learnable);
    CHECK(!without->heads[0].prob.value.has_value());
}

TEST_CASE("every corpus program parses") {
    for (const std::string& name : corpus_programs())
        CHECK_NOTHROW(parse_program(corpus_file(name)));
    CHECK_NOTHROW(parse_program(corpus_file("impact_evidence.ddtep")));
}

TEST_CASE("desugar turns probabilistic rules into auxiliary facts") {
    CoreProgram core = desugar(parse_program("0.5::help(A,B):-connection(A,B)."));
    REQUIRE(core.program.statements.size() == 2);
    const auto* aux = stmt_as<AnnotatedDisjunction>(core.program.statements[0]);
    REQUIRE(aux);
    CHECK(aux->heads[0].atom.pred == "help_aux1");
    CHECK(aux->heads[0].atom.args.size() == 2);
    CHECK(aux->body.empty());
    const auto* rule = stmt_as<Rule>(core.program.statements[1]);
    REQUIRE(rule);
    CHECK(rule->head.pred == "help");
    REQUIRE(rule->body.size() == 2);
    CHECK(rule->body[0].lit.atom.pred == "help_aux1");
    CHECK(rule->body[1].lit.atom.pred == "connection");
}

TEST_CASE("desugar keeps deterministic facts unchanged") {
    Program p = parse_program("baby(a).");
    CoreProgram core = desugar(p);
    REQUIRE(core.program.statements.size() == 1);
    CHECK(core.program.statements[0] == p.statements[0]);
}

TEST_CASE("desugar splits body disjunctions") {
    CoreProgram core =
        desugar(parse_program("connection(P,A):-(researchgate(P,A);researchgate(A,P))."));
    REQUIRE(core.program.statements.size() == 2);
    const auto* first = stmt_as<Rule>(core.program.statements[0]);
    const auto* second = stmt_as<Rule>(core.program.statements[1]);
    REQUIRE(first);
    REQUIRE(second);
    CHECK(first->head == second->head);
    CHECK(to_string(first->body[0].lit) == "researchgate(P,A)");
    CHECK(to_string(second->body[0].lit) == "researchgate(A,P)");
}

TEST_CASE("desugar rewrites decision rules to indicator plus guard rule") {
    CoreProgram core = desugar(parse_program("?::informed_bake :- ask, cake_is_ethical."));
    REQUIRE(core.program.statements.size() == 2);
    const auto* decl = stmt_as<DecisionRule>(core.program.statements[0]);
    REQUIRE(decl);
    CHECK(decl->indicator == "d_informed_bake");
    const auto* rule = stmt_as<Rule>(core.program.statements[1]);
    REQUIRE(rule);
    CHECK(rule->head.pred == "informed_bake");
    REQUIRE(rule->body.size() == 3);
    CHECK(rule->body[0].lit.atom.pred == "d_informed_bake");
}

TEST_CASE("desugar assigns shared clause-level parameters in order") {
    CoreProgram core = desugar(parse_program(corpus_file("archives_learn.ddtep")));
    REQUIRE(core.params.size() == 5);
    CHECK(core.params[0].label == "authority/1#0");
    CHECK(core.params[0].init == 0.9);
    CHECK(core.params[4].label == "help/2#4");
    CHECK(core.params[4].init == 0.5);
}

TEST_CASE("render canonical forms") {
    Program group = parse_program("?:: ask ; ?:: long ; ?:: short .");
    CHECK(render(group.statements[0]) == "?::ask;?::long;?::short.");
    Program fact = parse_program("0.5::fire.");
    CHECK(render(fact.statements[0]) == "0.5::fire.");
    Program ad = parse_program("0.5::cake_is_ethical;0.5::death_is_ethical.");
    CHECK(render(ad.statements[0]) == "0.5::cake_is_ethical; 0.5::death_is_ethical.");
}

TEST_CASE("parse-render round trip is a fixed point on the corpus") {
    std::vector<std::string> names = corpus_programs();
    names.push_back("impact_evidence.ddtep");
    for (const std::string& name : names) {
        CAPTURE(name);
        Program once = parse_program(corpus_file(name));
        Program twice = parse_program(render(once));
        CHECK(once == twice);
        CHECK(render(once) == render(twice));
    }
}

TEST_CASE("numbers render in shortest round-trip form") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(-30.0) == "-30");
    CHECK(format_number(0.99999999) == "0.99999999");
    double tiny = 1e-9;
    Program p = parse_program(format_number(tiny) + "::a.");
    const auto* ad = stmt_as<AnnotatedDisjunction>(p.statements[0]);
    REQUIRE(ad);
    CHECK(*ad->heads[0].prob.value == tiny);
}

TEST_CASE("apply_params replaces markers in discovery order") {
    Program p = parse_program("t(0.9)::a. t::b. 0.5::c.");
    Program fitted = apply_params(p, {0.25, 0.75});
    CHECK(render(fitted.statements[0]) == "0.25::a.");
    CHECK(render(fitted.statements[1]) == "0.75::b.");
    CHECK(render(fitted.statements[2]) == "0.5::c.");
    CHECK_THROWS_AS(apply_params(p, {0.1}), Error);
}

TEST_CASE("improper list patterns are rejected") {
    CHECK_THROWS_AS(parse_program("p([a|T])."), Error);
}
