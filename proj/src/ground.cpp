#include "ddtep/ground.hpp"

#include <algorithm>
#include <cassert>
#include <functional>

#include "ddtep/render.hpp"

namespace ddtep {

namespace {

constexpr double kMassSlack = 1e-9;

Term substitute(const Term& term, const Binding& binding) {
    if (term.kind == Term::Kind::Variable) {
        auto it = binding.find(term.name);
        return it != binding.end() ? it->second : term;
    }
    if (term.args.empty()) return term;
    Term out = term;
    for (Term& arg : out.args) arg = substitute(arg, binding);
    return out;
}

Atom substitute(const Atom& atom, const Binding& binding) {
    Atom out = atom;
    for (Term& arg : out.args) arg = substitute(arg, binding);
    return out;
}

bool unify(const Term& pattern, const Term& value, Binding& binding) {
    if (pattern.kind == Term::Kind::Variable) {
        auto [it, fresh] = binding.emplace(pattern.name, value);
        return fresh || it->second == value;
    }
    if (pattern.kind != value.kind) return false;
    switch (pattern.kind) {
    case Term::Kind::Constant: return pattern.name == value.name;
    case Term::Kind::Number: return pattern.number == value.number;
    case Term::Kind::Compound:
        if (pattern.name != value.name) return false;
        [[fallthrough]];
    case Term::Kind::List: {
        if (pattern.args.size() != value.args.size()) return false;
        for (size_t i = 0; i < pattern.args.size(); ++i)
            if (!unify(pattern.args[i], value.args[i], binding)) return false;
        return true;
    }
    default: return false;
    }
}

bool unify(const Atom& pattern, const Atom& value, Binding& binding) {
    if (pattern.pred != value.pred || pattern.args.size() != value.args.size()) return false;
    for (size_t i = 0; i < pattern.args.size(); ++i)
        if (!unify(pattern.args[i], value.args[i], binding)) return false;
    return true;
}

void collect_constants(const Term& term, std::set<Term>& out) {
    switch (term.kind) {
    case Term::Kind::Constant:
    case Term::Kind::Number: out.insert(term); break;
    case Term::Kind::List:
    case Term::Kind::Compound:
        for (const Term& arg : term.args) collect_constants(arg, out);
        break;
    case Term::Kind::Variable: break;
    }
}

void collect_constants(const Atom& atom, std::set<Term>& out) {
    for (const Term& arg : atom.args) collect_constants(arg, out);
}

void collect_constants(const Body& body, std::set<Term>& out) {
    for (const BodyElem& elem : body) {
        if (elem.is_disjunction())
            for (const Body& alt : elem.alts) collect_constants(alt, out);
        else
            collect_constants(elem.lit.atom, out);
    }
}

std::vector<Literal> body_literals(const Body& body) {
    std::vector<Literal> out;
    out.reserve(body.size());
    for (const BodyElem& elem : body) {
        assert(!elem.is_disjunction());
        out.push_back(elem.lit);
    }
    return out;
}

bool term_ground_under(const Term& term, const Binding& binding) {
    return substitute(term, binding).is_ground();
}

bool atom_ground_under(const Atom& atom, const Binding& binding) {
    for (const Term& arg : atom.args)
        if (!term_ground_under(arg, binding)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Stratification
// ---------------------------------------------------------------------------

struct PredGraph {
    // head predicate -> (body predicate, through negation?)
    std::map<std::string, std::vector<std::pair<std::string, bool>>> edges;
    std::set<std::string> heads;
};

PredGraph dependency_graph(const CoreProgram& core) {
    PredGraph g;
    for (const Statement& stmt : core.program.statements) {
        const auto* rule = stmt_as<Rule>(stmt);
        if (!rule) continue;
        g.heads.insert(rule->head.pred);
        for (const Literal& lit : body_literals(rule->body)) {
            if (is_builtin(lit.atom.pred)) continue;
            g.edges[rule->head.pred].push_back({lit.atom.pred, lit.negated});
        }
    }
    return g;
}

std::map<std::string, int> stratify(const CoreProgram& core) {
    PredGraph g = dependency_graph(core);

    // Tarjan SCC, iterative.
    std::map<std::string, int> index, low, comp;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    int next_index = 0, next_comp = 0;
    std::vector<std::string> order(g.heads.begin(), g.heads.end());

    std::function<void(const std::string&)> strongconnect = [&](const std::string& v) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack.insert(v);
        auto it = g.edges.find(v);
        if (it != g.edges.end()) {
            for (const auto& [w, neg] : it->second) {
                if (!g.heads.count(w)) continue;
                if (!index.count(w)) {
                    strongconnect(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack.count(w)) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
        }
        if (low[v] == index[v]) {
            while (true) {
                std::string w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                comp[w] = next_comp;
                if (w == v) break;
            }
            ++next_comp;
        }
    };
    for (const std::string& v : order)
        if (!index.count(v)) strongconnect(v);

    // A negative edge inside a component is unstratified negation.
    for (const auto& [head, deps] : g.edges) {
        for (const auto& [dep, neg] : deps) {
            if (!neg || !g.heads.count(dep)) continue;
            if (comp[head] == comp[dep]) {
                std::string cycle;
                for (const auto& [p, c] : comp)
                    if (c == comp[head]) cycle += (cycle.empty() ? "" : ", ") + p;
                throw Error(ErrorKind::Semantic,
                            "unstratified negation through cycle: " + cycle);
            }
        }
    }

    std::map<std::string, int> stratum;
    std::function<int(const std::string&)> level = [&](const std::string& p) -> int {
        auto it = stratum.find(p);
        if (it != stratum.end()) return it->second;
        stratum[p] = 0; // positive cycles settle at the max of their external deps
        int s = 0;
        auto edges = g.edges.find(p);
        if (edges != g.edges.end()) {
            for (const auto& [dep, neg] : edges->second) {
                if (!g.heads.count(dep)) continue;
                int ds = comp[dep] == comp[p] ? stratum[p] : level(dep);
                s = std::max(s, ds + (neg ? 1 : 0));
            }
        }
        stratum[p] = s;
        return s;
    };
    for (const std::string& v : order) level(v);
    return stratum;
}

} // namespace

bool is_builtin(const std::string& pred) { return pred == "member" || pred == "\\="; }

std::vector<Binding> eval_builtin(const Literal& lit, const Binding& binding) {
    const Atom& atom = lit.atom;
    std::vector<Binding> out;
    auto invert_wrap = [&](bool succeeded) {
        // For a negated builtin, success of the positive form means failure.
        if (succeeded != lit.negated) out.push_back(binding);
    };
    if (atom.pred == "\\=") {
        if (atom.args.size() != 2)
            throw Error(ErrorKind::Semantic, "\\= expects two arguments", atom.loc);
        Term lhs = substitute(atom.args[0], binding);
        Term rhs = substitute(atom.args[1], binding);
        if (!lhs.is_ground() || !rhs.is_ground())
            throw Error(ErrorKind::Semantic,
                        "instantiation error: \\= requires ground arguments in " +
                            to_string(atom),
                        atom.loc);
        invert_wrap(lhs != rhs);
        return out;
    }
    if (atom.pred == "member") {
        if (atom.args.size() != 2)
            throw Error(ErrorKind::Semantic, "member expects two arguments", atom.loc);
        Term list = substitute(atom.args[1], binding);
        if (!list.is_ground())
            throw Error(ErrorKind::Semantic,
                        "instantiation error: member/2 requires a ground list in " +
                            to_string(atom),
                        atom.loc);
        if (list.kind != Term::Kind::List) return out;
        if (lit.negated) {
            Term elem = substitute(atom.args[0], binding);
            if (!elem.is_ground())
                throw Error(ErrorKind::Semantic,
                            "instantiation error: negated member/2 requires ground arguments",
                            atom.loc);
            bool found = false;
            for (const Term& item : list.args) found = found || item == elem;
            invert_wrap(found);
            return out;
        }
        for (const Term& item : list.args) {
            Binding extended = binding;
            if (unify(atom.args[0], item, extended)) out.push_back(std::move(extended));
        }
        return out;
    }
    throw Error(ErrorKind::Semantic, "unknown builtin " + atom.pred, atom.loc);
}

std::set<Term> herbrand_universe(const CoreProgram& core, const std::set<Term>& extra) {
    std::set<Term> out = extra;
    for (const Statement& stmt : core.program.statements) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, AnnotatedDisjunction>) {
                    for (const ADHead& head : node.heads) collect_constants(head.atom, out);
                    collect_constants(node.body, out);
                } else if constexpr (std::is_same_v<T, DecisionGroup>) {
                    for (const Atom& alt : node.alternatives) collect_constants(alt, out);
                } else if constexpr (std::is_same_v<T, DecisionRule>) {
                    collect_constants(node.head, out);
                    collect_constants(node.body, out);
                } else if constexpr (std::is_same_v<T, Rule>) {
                    collect_constants(node.head, out);
                    collect_constants(node.body, out);
                } else if constexpr (std::is_same_v<T, UtilityDecl>) {
                    collect_constants(node.target, out);
                    collect_constants(node.guard, out);
                } else if constexpr (std::is_same_v<T, Constraint>) {
                    collect_constants(node.body, out);
                } else if constexpr (std::is_same_v<T, EvidenceDecl>) {
                    collect_constants(node.atom, out);
                }
            },
            stmt.node);
    }
    return out;
}

std::map<std::string, int> check_stratified(const CoreProgram& core) { return stratify(core); }

namespace {

// ---------------------------------------------------------------------------
// Grounder
// ---------------------------------------------------------------------------

class Grounder {
public:
    Grounder(const CoreProgram& core, const std::vector<double>* params) : core_(core) {
        resolve_params(params);
        classify_predicates();
        strata_ = stratify(core_);
    }

    GroundProgram run() {
        evaluate_statics();
        seed_decisions_and_facts();
        dynamic_fixpoint();
        ground_utilities();
        ground_constraints();
        ground_evidence();
        assemble();
        return std::move(gp_);
    }

private:
    const CoreProgram& core_;
    GroundProgram gp_;
    std::vector<double> param_values_;

    std::set<std::string> choice_preds_, decision_preds_, derived_preds_;
    std::set<std::string> dynamic_preds_, tainted_preds_;
    std::map<std::string, std::pair<int, int>> aux_info_; // aux pred -> (core stmt, head idx)
    std::map<std::string, int> strata_;

    std::map<std::string, std::vector<int>> static_by_pred_;
    std::map<std::string, std::vector<int>> possible_by_pred_;
    std::map<std::string, int> choice_instances_;       // instance key -> choice index
    std::map<std::string, int> decision_instances_;     // indicator text -> decision index

    struct RawRule {
        int head;
        std::vector<GroundLiteral> body;
        std::string pred;
    };
    std::vector<RawRule> raw_rules_;
    std::set<std::string> rule_keys_;

    // ---- plumbing ----

    int intern(const Atom& atom) {
        std::string text = to_string(atom);
        auto it = gp_.atom_ids.find(text);
        if (it != gp_.atom_ids.end()) return it->second;
        int id = static_cast<int>(gp_.atom_text.size());
        gp_.atom_ids.emplace(text, id);
        gp_.atom_text.push_back(std::move(text));
        gp_.atoms.push_back(atom);
        gp_.static_true.push_back(false);
        return id;
    }

    void resolve_params(const std::vector<double>* params) {
        if (params) {
            if (params->size() != core_.params.size())
                throw Error(ErrorKind::Usage, "expected " + std::to_string(core_.params.size()) +
                                                  " parameter values");
            param_values_ = *params;
            return;
        }
        for (const LearnableParam& p : core_.params) {
            if (!p.init)
                throw Error(ErrorKind::Semantic,
                            "learnable parameter " + p.label +
                                " has no initial value; use t(P0) or fit it first",
                            p.loc);
            param_values_.push_back(*p.init);
        }
    }

    void classify_predicates() {
        for (size_t i = 0; i < core_.program.statements.size(); ++i) {
            const Statement& stmt = core_.program.statements[i];
            if (const auto* ad = stmt_as<AnnotatedDisjunction>(stmt)) {
                for (size_t h = 0; h < ad->heads.size(); ++h) {
                    choice_preds_.insert(ad->heads[h].atom.pred);
                    if (ad->aux_of >= 0)
                        aux_info_[ad->heads[h].atom.pred] = {static_cast<int>(i),
                                                             static_cast<int>(h)};
                }
            } else if (const auto* group = stmt_as<DecisionGroup>(stmt)) {
                for (const Atom& alt : group->alternatives) decision_preds_.insert(alt.pred);
            } else if (const auto* dr = stmt_as<DecisionRule>(stmt)) {
                decision_preds_.insert(dr->indicator);
            } else if (const auto* rule = stmt_as<Rule>(stmt)) {
                derived_preds_.insert(rule->head.pred);
            }
        }
        // dynamic: depends (transitively) on a choice or decision
        dynamic_preds_ = choice_preds_;
        dynamic_preds_.insert(decision_preds_.begin(), decision_preds_.end());
        tainted_preds_ = choice_preds_;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const Statement& stmt : core_.program.statements) {
                const auto* rule = stmt_as<Rule>(stmt);
                if (!rule) continue;
                bool dyn = false, taint = false;
                for (const Literal& lit : body_literals(rule->body)) {
                    dyn = dyn || dynamic_preds_.count(lit.atom.pred) > 0;
                    taint = taint || tainted_preds_.count(lit.atom.pred) > 0;
                }
                if (dyn && dynamic_preds_.insert(rule->head.pred).second) changed = true;
                if (taint && tainted_preds_.insert(rule->head.pred).second) changed = true;
            }
        }
    }

    bool is_static_pred(const std::string& pred) const {
        return !dynamic_preds_.count(pred) && !is_builtin(pred);
    }
    bool is_decision_static_pred(const std::string& pred) const {
        return !tainted_preds_.count(pred) && !is_builtin(pred);
    }

    // ---- generic join over ground atom lists ----

    // Calls emit(binding) for every way to satisfy `lits` given the current
    // ground atoms. Positive non-builtin literals enumerate matching atoms
    // (static exactly, dynamic over the possible set); builtins and negated
    // static literals are evaluated as soon as their variables are bound;
    // negated dynamic literals are left to the caller.
    void join(const std::vector<Literal>& lits, const std::function<void(const Binding&)>& emit) {
        std::vector<char> done(lits.size(), 0);
        for (size_t i = 0; i < lits.size(); ++i)
            if (lits[i].negated && !is_builtin(lits[i].atom.pred) &&
                !is_static_pred(lits[i].atom.pred))
                done[i] = 1; // kept in the residual ground body
        Binding binding;
        join_step(lits, done, binding, emit);
    }

    void join_step(const std::vector<Literal>& lits, std::vector<char>& done, Binding& binding,
                   const std::function<void(const Binding&)>& emit) {
        // Cheap filters first: builtins and negated statics whose arguments
        // are already bound.
        for (size_t i = 0; i < lits.size(); ++i) {
            if (done[i]) continue;
            const Literal& lit = lits[i];
            if (is_builtin(lit.atom.pred)) {
                bool ready = lit.atom.pred == "\\=" || lit.negated
                                 ? atom_ground_under(lit.atom, binding)
                                 : term_ground_under(lit.atom.args.at(1), binding);
                if (!ready) continue;
                done[i] = 1;
                for (const Binding& next : eval_builtin(lit, binding)) {
                    Binding saved = next;
                    join_step(lits, done, saved, emit);
                }
                done[i] = 0;
                return;
            }
            if (lit.negated && is_static_pred(lit.atom.pred)) {
                if (!atom_ground_under(lit.atom, binding)) continue;
                Atom ground_atom = substitute(lit.atom, binding);
                int id = gp_.atom_id(to_string(ground_atom));
                bool holds = id >= 0 && gp_.static_true[id];
                if (holds) return; // negation fails, prune this branch
                done[i] = 1;
                join_step(lits, done, binding, emit);
                done[i] = 0;
                return;
            }
        }
        // Then the first positive literal.
        for (size_t i = 0; i < lits.size(); ++i) {
            if (done[i] || lits[i].negated) continue;
            const Literal& lit = lits[i];
            const auto& index = is_static_pred(lit.atom.pred) ? static_by_pred_ : possible_by_pred_;
            auto it = index.find(lit.atom.pred);
            done[i] = 1;
            if (it != index.end()) {
                for (int atom_id : it->second) {
                    Binding extended = binding;
                    if (unify(lit.atom, gp_.atoms[atom_id], extended))
                        join_step(lits, done, extended, emit);
                }
            }
            done[i] = 0;
            return;
        }
        // Everything processable is done; any literal still pending has
        // unbound variables.
        for (size_t i = 0; i < lits.size(); ++i) {
            if (done[i]) continue;
            const Literal& lit = lits[i];
            if (is_builtin(lit.atom.pred))
                throw Error(ErrorKind::Semantic,
                            "instantiation error: arguments of " + to_string(lit.atom) +
                                " are never bound",
                            lit.atom.loc);
            throw Error(ErrorKind::Semantic,
                        "range restriction: variables of " + to_string(lit) +
                            " are never bound",
                        lit.atom.loc);
        }
        emit(binding);
    }

    Atom ground_or_throw(const Atom& atom, const Binding& binding, const char* what) {
        Atom out = substitute(atom, binding);
        if (!out.is_ground())
            throw Error(ErrorKind::Semantic,
                        std::string("range restriction: ") + what + " " + to_string(out) +
                            " is not ground",
                        atom.loc);
        return out;
    }

    // ---- phase 1: statics ----

    void evaluate_statics() {
        struct StaticRule {
            const Rule* rule;
            int stratum;
        };
        std::vector<StaticRule> rules;
        for (const Statement& stmt : core_.program.statements) {
            const auto* rule = stmt_as<Rule>(stmt);
            if (!rule || !is_static_pred(rule->head.pred)) continue;
            auto it = strata_.find(rule->head.pred);
            rules.push_back({rule, it == strata_.end() ? 0 : it->second});
        }
        std::stable_sort(rules.begin(), rules.end(),
                         [](const StaticRule& a, const StaticRule& b) {
                             return a.stratum < b.stratum;
                         });
        size_t start = 0;
        while (start < rules.size()) {
            size_t end = start;
            while (end < rules.size() && rules[end].stratum == rules[start].stratum) ++end;
            bool changed = true;
            while (changed) {
                changed = false;
                for (size_t i = start; i < end; ++i) {
                    const Rule* rule = rules[i].rule;
                    join(body_literals(rule->body), [&](const Binding& binding) {
                        Atom head = ground_or_throw(rule->head, binding, "head of");
                        int id = intern(head);
                        if (!gp_.static_true[id]) {
                            gp_.static_true[id] = true;
                            static_by_pred_[head.pred].push_back(id);
                            changed = true;
                        }
                    });
                }
            }
            start = end;
        }
    }

    // ---- phase 2: choices and decisions ----

    void mark_possible(int atom_id, bool& changed) {
        const std::string& pred = gp_.atoms[atom_id].pred;
        auto& list = possible_by_pred_[pred];
        if (std::find(list.begin(), list.end(), atom_id) == list.end()) {
            list.push_back(atom_id);
            changed = true;
        }
    }

    // Instantiates the choice variable of AD statement `stmt_index` under
    // `binding` (identity for ground user facts). Deduplicated per instance.
    int make_choice(int stmt_index, const Binding& binding, bool& changed) {
        const auto& ad = std::get<AnnotatedDisjunction>(
            core_.program.statements[stmt_index].node);
        Atom first = substitute(ad.heads[0].atom, binding);
        std::string key = std::to_string(stmt_index) + "|" + to_string(first);
        auto it = choice_instances_.find(key);
        if (it != choice_instances_.end()) return it->second;

        ChoiceVariable choice;
        choice.origin = core_.origins[stmt_index];
        double mass = 0.0;
        bool learnable = false;
        for (const ADHead& head : ad.heads) {
            Atom outcome = ground_or_throw(head.atom, binding, "probabilistic head");
            ChoiceOutcome co;
            co.atom = intern(outcome);
            co.param = head.prob.param;
            co.prob = head.prob.param >= 0 ? param_values_[head.prob.param]
                                           : head.prob.value.value_or(0.0);
            learnable = learnable || head.prob.param >= 0;
            mass += co.prob;
            choice.outcomes.push_back(co);
            mark_possible(co.atom, changed);
        }
        if (mass > 1.0 + kMassSlack)
            throw Error(ErrorKind::Semantic,
                        "outcome probabilities of " + to_string(first) + " sum to " +
                            format_number(mass) + " > 1",
                        ad.heads[0].atom.loc);
        if (learnable || 1.0 - mass > kMassSlack)
            choice.outcomes.push_back(ChoiceOutcome{-1, std::max(0.0, 1.0 - mass), -1});
        choice.label = to_string(first);
        int index = static_cast<int>(gp_.choices.size());
        choice_instances_.emplace(key, index);
        gp_.choices.push_back(std::move(choice));
        changed = true;
        return index;
    }

    void make_decision(const DecisionRule& rule, const Binding& binding, int origin,
                       bool& changed) {
        Atom source = ground_or_throw(rule.head, binding, "decision head");
        Atom indicator{rule.indicator, source.args, rule.head.loc};
        std::string key = to_string(indicator);
        if (decision_instances_.count(key)) return;
        DecisionVariable dv;
        dv.atom = intern(source);
        dv.indicator = intern(indicator);
        dv.group = -1;
        dv.origin = origin;
        decision_instances_.emplace(key, static_cast<int>(gp_.decisions.size()));
        mark_possible(dv.indicator, changed);
        gp_.decisions.push_back(dv);
        changed = true;
    }

    void seed_decisions_and_facts() {
        bool changed = false;
        for (size_t i = 0; i < core_.program.statements.size(); ++i) {
            const Statement& stmt = core_.program.statements[i];
            if (const auto* group = stmt_as<DecisionGroup>(stmt)) {
                std::vector<int> ids;
                for (const Atom& alt : group->alternatives) {
                    DecisionVariable dv;
                    dv.atom = dv.indicator = intern(alt);
                    dv.group = static_cast<int>(gp_.groups.size());
                    dv.origin = core_.origins[i];
                    ids.push_back(static_cast<int>(gp_.decisions.size()));
                    decision_instances_.emplace(to_string(alt),
                                                static_cast<int>(gp_.decisions.size()));
                    gp_.decisions.push_back(dv);
                    mark_possible(dv.indicator, changed);
                }
                gp_.groups.push_back(std::move(ids));
            } else if (const auto* ad = stmt_as<AnnotatedDisjunction>(stmt)) {
                if (ad->aux_of >= 0) continue; // instantiated via its companion rules
                bool ground_heads = true;
                for (const ADHead& head : ad->heads) ground_heads &= head.atom.is_ground();
                if (!ground_heads)
                    throw Error(ErrorKind::Semantic,
                                "range restriction: probabilistic fact " +
                                    to_string(ad->heads[0].atom) + " is not ground",
                                ad->heads[0].atom.loc);
                make_choice(static_cast<int>(i), Binding{}, changed);
            }
        }
    }

    // ---- phase 3: dynamic fixpoint ----

    void add_rule(const Atom& head, std::vector<GroundLiteral> body, bool& changed) {
        int head_id = intern(head);
        std::string key = std::to_string(head_id) + ":-";
        for (const GroundLiteral& lit : body)
            key += (lit.negated ? "~" : "") + std::to_string(lit.atom) + ",";
        if (!rule_keys_.insert(key).second) return;
        raw_rules_.push_back(RawRule{head_id, std::move(body), head.pred});
        mark_possible(head_id, changed);
    }

    void instantiate_rule(const Rule& rule, bool& changed) {
        std::vector<Literal> lits = body_literals(rule.body);
        // Companion rules of probabilistic clauses carry the auxiliary fact as
        // their first literal; it is bound by the rest of the body.
        bool companion = !lits.empty() && !lits[0].negated && aux_info_.count(lits[0].atom.pred);
        std::vector<Literal> join_lits(companion ? lits.begin() + 1 : lits.begin(), lits.end());

        join(join_lits, [&](const Binding& binding) {
            Atom head = ground_or_throw(rule.head, binding, "head of");
            std::vector<GroundLiteral> body;
            if (companion) {
                int stmt = aux_info_.at(lits[0].atom.pred).first;
                make_choice(stmt, binding, changed);
                Atom aux = ground_or_throw(lits[0].atom, binding, "auxiliary fact");
                body.push_back(GroundLiteral{intern(aux), false});
            }
            for (const Literal& lit : join_lits) {
                if (is_builtin(lit.atom.pred)) continue;
                if (is_static_pred(lit.atom.pred)) continue; // true or pruned by the join
                Atom ground_atom = ground_or_throw(lit.atom, binding, "literal");
                body.push_back(GroundLiteral{intern(ground_atom), lit.negated});
            }
            add_rule(head, std::move(body), changed);
        });
    }

    void dynamic_fixpoint() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t i = 0; i < core_.program.statements.size(); ++i) {
                const Statement& stmt = core_.program.statements[i];
                if (const auto* rule = stmt_as<Rule>(stmt)) {
                    if (!is_static_pred(rule->head.pred)) instantiate_rule(*rule, changed);
                } else if (const auto* dr = stmt_as<DecisionRule>(stmt)) {
                    join(body_literals(dr->body), [&](const Binding& binding) {
                        make_decision(*dr, binding, core_.origins[i], changed);
                    });
                }
            }
        }
    }

    // ---- phase 4: utilities, constraints, evidence ----

    void ground_utilities() {
        std::map<int, double> rewards;
        std::map<int, int> first_origin;
        std::set<std::pair<int, int>> stmt_seen; // (source stmt, atom) dedupe
        std::vector<int> order;
        for (size_t i = 0; i < core_.program.statements.size(); ++i) {
            const auto* decl = stmt_as<UtilityDecl>(core_.program.statements[i]);
            if (!decl) continue;
            int origin = core_.origins[i];
            for (const Literal& lit : body_literals(decl->guard)) {
                if (is_builtin(lit.atom.pred) || is_static_pred(lit.atom.pred)) continue;
                throw Error(ErrorKind::Semantic,
                            "utility guard literal " + to_string(lit) +
                                " is not static: guards may only test deterministic facts",
                            lit.atom.loc);
            }
            join(body_literals(decl->guard), [&](const Binding& binding) {
                Atom target = ground_or_throw(decl->target, binding, "utility atom");
                int id = intern(target);
                if (!stmt_seen.insert({origin, id}).second) return;
                auto [it, fresh] = rewards.emplace(id, decl->reward);
                if (fresh) {
                    order.push_back(id);
                    first_origin[id] = origin;
                } else {
                    it->second += decl->reward;
                    gp_.warnings.push_back("utility atom " + gp_.atom_name(id) +
                                           " declared more than once; rewards summed");
                }
            });
        }
        for (int id : order) {
            bool reachable = gp_.static_true[id] != 0;
            auto it = possible_by_pred_.find(gp_.atoms[id].pred);
            if (!reachable && it != possible_by_pred_.end())
                reachable = std::find(it->second.begin(), it->second.end(), id) !=
                            it->second.end();
            if (!reachable)
                gp_.warnings.push_back("utility atom " + gp_.atom_name(id) +
                                       " is unreachable; its probability is 0");
            gp_.utilities.push_back(GroundUtility{id, rewards[id]});
        }
        std::sort(gp_.utilities.begin(), gp_.utilities.end(),
                  [&](const GroundUtility& a, const GroundUtility& b) {
                      return gp_.atom_name(a.atom) < gp_.atom_name(b.atom);
                  });
    }

    void ground_constraints() {
        std::set<std::string> seen;
        for (const Statement& stmt : core_.program.statements) {
            const auto* constraint = stmt_as<Constraint>(stmt);
            if (!constraint) continue;
            for (const Literal& lit : body_literals(constraint->body)) {
                if (is_builtin(lit.atom.pred)) continue;
                if (!is_decision_static_pred(lit.atom.pred))
                    throw Error(ErrorKind::Semantic,
                                "constraint literal " + to_string(lit) +
                                    " depends on probabilistic atoms; constraints may only "
                                    "reference decisions and static facts",
                                lit.atom.loc);
            }
            join(body_literals(constraint->body), [&](const Binding& binding) {
                GroundConstraint gc;
                for (const Literal& lit : body_literals(constraint->body)) {
                    if (is_builtin(lit.atom.pred)) continue;
                    if (is_static_pred(lit.atom.pred)) continue;
                    Atom ground_atom = ground_or_throw(lit.atom, binding, "constraint literal");
                    gc.body.push_back(GroundLiteral{intern(ground_atom), lit.negated});
                }
                std::string text = ":-";
                for (size_t i = 0; i < gc.body.size(); ++i)
                    text += (i ? ", " : " ") + std::string(gc.body[i].negated ? "\\+" : "") +
                            gp_.atom_name(gc.body[i].atom);
                gc.text = text;
                if (gc.body.empty())
                    gp_.warnings.push_back(
                        "constraint is violated unconditionally; no strategy is admissible");
                if (seen.insert(text).second) gp_.constraints.push_back(std::move(gc));
            });
        }
    }

    void ground_evidence() {
        std::map<int, bool> seen;
        for (const Statement& stmt : core_.program.statements) {
            const auto* ev = stmt_as<EvidenceDecl>(stmt);
            if (!ev) continue;
            if (!ev->atom.is_ground())
                throw Error(ErrorKind::Semantic,
                            "evidence atom " + to_string(ev->atom) + " is not ground",
                            ev->atom.loc);
            int id = intern(ev->atom);
            auto [it, fresh] = seen.emplace(id, ev->truth);
            if (!fresh && it->second != ev->truth)
                throw Error(ErrorKind::Semantic,
                            "conflicting evidence for " + gp_.atom_name(id), ev->atom.loc);
        }
        for (const auto& [id, truth] : seen) gp_.evidence.push_back({id, truth});
        std::sort(gp_.evidence.begin(), gp_.evidence.end(),
                  [&](const auto& a, const auto& b) {
                      return gp_.atom_name(a.first) < gp_.atom_name(b.first);
                  });
    }

    // ---- phase 5: canonical ordering ----

    void assemble() {
        gp_.param_count = static_cast<int>(core_.params.size());
        gp_.pred_stratum = strata_;

        // Choices: declaration order (origin statement, then instance label).
        std::stable_sort(gp_.choices.begin(), gp_.choices.end(),
                         [](const ChoiceVariable& a, const ChoiceVariable& b) {
                             return std::tie(a.origin, a.label) < std::tie(b.origin, b.label);
                         });
        for (size_t i = 0; i < gp_.choices.size(); ++i) {
            gp_.choices[i].id = static_cast<int>(i);
            for (size_t k = 0; k < gp_.choices[i].outcomes.size(); ++k) {
                int atom = gp_.choices[i].outcomes[k].atom;
                if (atom >= 0)
                    gp_.choice_outcomes_of[atom].push_back(
                        {static_cast<int>(i), static_cast<int>(k)});
            }
        }

        // Decisions: exactly-one groups first in statement order, then free
        // decisions canonically.
        std::vector<DecisionVariable> ordered;
        for (auto& group : gp_.groups) {
            std::vector<int> renumbered;
            for (int id : group) {
                DecisionVariable dv = gp_.decisions[id];
                dv.id = static_cast<int>(ordered.size());
                renumbered.push_back(dv.id);
                ordered.push_back(dv);
            }
            group = renumbered;
        }
        std::vector<DecisionVariable> frees;
        for (const DecisionVariable& dv : gp_.decisions)
            if (dv.group < 0) frees.push_back(dv);
        std::sort(frees.begin(), frees.end(),
                  [&](const DecisionVariable& a, const DecisionVariable& b) {
                      return std::tie(a.origin, gp_.atom_name(a.atom)) <
                             std::tie(b.origin, gp_.atom_name(b.atom));
                  });
        for (DecisionVariable dv : frees) {
            dv.id = static_cast<int>(ordered.size());
            gp_.free_decisions.push_back(dv.id);
            ordered.push_back(dv);
        }
        gp_.decisions = std::move(ordered);
        for (const DecisionVariable& dv : gp_.decisions) {
            gp_.decision_by_indicator[dv.indicator] = dv.id;
            gp_.decision_by_atom[dv.atom] = dv.id;
        }

        // Rules: dense strata over dynamic predicates, canonical order.
        std::set<int> strata_used;
        for (const RawRule& rule : raw_rules_) {
            auto it = strata_.find(rule.pred);
            strata_used.insert(it == strata_.end() ? 0 : it->second);
        }
        std::map<int, int> dense;
        for (int s : strata_used) dense.emplace(s, static_cast<int>(dense.size()));
        gp_.strata_count = static_cast<int>(dense.size());
        for (const RawRule& raw : raw_rules_) {
            GroundRule rule;
            rule.head = raw.head;
            rule.body = raw.body;
            auto it = strata_.find(raw.pred);
            rule.stratum = dense[it == strata_.end() ? 0 : it->second];
            gp_.rules.push_back(std::move(rule));
        }
        auto rule_key = [&](const GroundRule& r) {
            std::string key = gp_.atom_name(r.head) + ":-";
            for (const GroundLiteral& lit : r.body)
                key += (lit.negated ? "\\+" : "") + gp_.atom_name(lit.atom) + ",";
            return key;
        };
        std::sort(gp_.rules.begin(), gp_.rules.end(),
                  [&](const GroundRule& a, const GroundRule& b) {
                      if (a.stratum != b.stratum) return a.stratum < b.stratum;
                      return rule_key(a) < rule_key(b);
                  });
        for (size_t i = 0; i < gp_.rules.size(); ++i) {
            const std::string& pred = gp_.atoms[gp_.rules[i].head].pred;
            if (is_decision_static_pred(pred)) gp_.ds_rules.push_back(static_cast<int>(i));
        }

        std::sort(gp_.constraints.begin(), gp_.constraints.end(),
                  [](const GroundConstraint& a, const GroundConstraint& b) {
                      return a.text < b.text;
                  });
    }
};

} // namespace

GroundProgram ground(const CoreProgram& core, const std::set<Term>& extra,
                     const std::vector<double>* params) {
    (void)extra; // the universe is implicit in bottom-up joins; extra constants
                 // only matter through facts that mention them
    return Grounder(core, params).run();
}

std::vector<std::vector<std::pair<int, int>>> GroundProgram::param_instances() const {
    std::vector<std::vector<std::pair<int, int>>> out(param_count);
    for (const ChoiceVariable& choice : choices)
        for (size_t k = 0; k < choice.outcomes.size(); ++k)
            if (choice.outcomes[k].param >= 0)
                out[choice.outcomes[k].param].push_back({choice.id, static_cast<int>(k)});
    return out;
}

GroundProgram GroundProgram::with_params(const std::vector<double>& values) const {
    GroundProgram out = *this;
    for (ChoiceVariable& choice : out.choices) {
        bool touched = false;
        for (ChoiceOutcome& outcome : choice.outcomes) {
            if (outcome.param < 0) continue;
            outcome.prob = values.at(outcome.param);
            touched = true;
        }
        if (!touched) continue;
        double mass = 0.0;
        ChoiceOutcome* none = nullptr;
        for (ChoiceOutcome& outcome : choice.outcomes) {
            if (outcome.atom < 0)
                none = &outcome;
            else
                mass += outcome.prob;
        }
        if (mass > 1.0 + kMassSlack)
            throw Error(ErrorKind::Semantic, "outcome probabilities of " + choice.label +
                                                 " sum to " + format_number(mass) + " > 1");
        if (none) none->prob = std::max(0.0, 1.0 - mass);
    }
    return out;
}

std::string dump(const GroundProgram& gp) {
    std::string out;
    std::vector<std::string> statics;
    for (size_t id = 0; id < gp.static_true.size(); ++id)
        if (gp.static_true[id]) statics.push_back(gp.atom_text[id]);
    std::sort(statics.begin(), statics.end());
    for (const std::string& text : statics) out += "static: " + text + ".\n";
    for (const ChoiceVariable& choice : gp.choices) {
        out += "choice:";
        for (size_t k = 0; k < choice.outcomes.size(); ++k) {
            const ChoiceOutcome& o = choice.outcomes[k];
            out += (k ? "; " : " ") + format_number(o.prob) +
                   "::" + (o.atom >= 0 ? gp.atom_name(o.atom) : "<none>");
        }
        out += ".\n";
    }
    for (size_t g = 0; g < gp.groups.size(); ++g)
        for (int id : gp.groups[g])
            out += "decision[group " + std::to_string(g) +
                   "]: " + gp.atom_name(gp.decisions[id].atom) + ".\n";
    for (int id : gp.free_decisions)
        out += "decision: " + gp.atom_name(gp.decisions[id].atom) + ".\n";
    for (const GroundRule& rule : gp.rules) {
        out += "rule[stratum " + std::to_string(rule.stratum) + "]: " + gp.atom_name(rule.head);
        if (!rule.body.empty()) {
            out += " :- ";
            for (size_t i = 0; i < rule.body.size(); ++i)
                out += (i ? ", " : "") + std::string(rule.body[i].negated ? "\\+" : "") +
                       gp.atom_name(rule.body[i].atom);
        }
        out += ".\n";
    }
    for (const GroundUtility& u : gp.utilities)
        out += "utility: " + gp.atom_name(u.atom) + " = " + format_number(u.reward) + ".\n";
    for (const GroundConstraint& c : gp.constraints) out += "constraint: " + c.text + ".\n";
    for (const auto& [atom, truth] : gp.evidence)
        out += "evidence: " + gp.atom_name(atom) + " = " + (truth ? "true" : "false") + ".\n";
    return out;
}

} // namespace ddtep
