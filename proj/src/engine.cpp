#include "ddtep/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>

#include "ddtep/render.hpp"

namespace ddtep {

long long world_cap_from_env() {
    if (const char* env = std::getenv("DDTEP_WORLD_CAP")) {
        char* end = nullptr;
        long long cap = std::strtoll(env, &end, 10);
        if (end && *end == '\0' && cap > 0) return cap;
    }
    return kDefaultWorldCap;
}

// ---------------------------------------------------------------------------
// Worlds and least models
// ---------------------------------------------------------------------------

WorldEnumerator::WorldEnumerator(const GroundProgram& gp, long long cap) : gp_(gp) {
    if (gp.world_count() > static_cast<long double>(cap))
        throw Error(ErrorKind::Resource,
                    "world-space too large for the enumeration oracle (cap " +
                        std::to_string(cap) + ")");
    state_.assign(gp.choices.size(), 0);
}

bool WorldEnumerator::next(World& world) {
    if (done_) return false;
    world.outcomes = state_;
    world.prob = 1.0;
    for (size_t i = 0; i < state_.size(); ++i)
        world.prob *= gp_.choices[i].outcomes[state_[i]].prob;
    // advance odometer, last variable fastest
    done_ = true;
    for (size_t i = state_.size(); i-- > 0;) {
        if (++state_[i] < static_cast<int>(gp_.choices[i].outcomes.size())) {
            done_ = false;
            break;
        }
        state_[i] = 0;
    }
    return true;
}

std::vector<char> decisions_of(const GroundProgram& gp, const Strategy& strategy) {
    std::vector<char> picked(gp.decisions.size(), 0);
    for (size_t g = 0; g < gp.groups.size(); ++g) {
        int alt = strategy.group_pick.at(g);
        picked[gp.groups[g].at(alt)] = 1;
    }
    for (size_t f = 0; f < gp.free_decisions.size(); ++f)
        picked[gp.free_decisions[f]] = strategy.free_pick.at(f);
    return picked;
}

std::vector<char> least_model_inputs(const GroundProgram& gp, const std::vector<int>& outcomes,
                                     const std::vector<char>& picked) {
    std::vector<char> truth(gp.atom_text.size(), 0);
    for (size_t id = 0; id < truth.size(); ++id) truth[id] = gp.static_true[id];
    for (size_t c = 0; c < gp.choices.size(); ++c) {
        int atom = gp.choices[c].outcomes[outcomes[c]].atom;
        if (atom >= 0) truth[atom] = 1;
    }
    for (const DecisionVariable& dv : gp.decisions)
        if (picked[dv.id]) truth[dv.indicator] = 1;

    size_t start = 0;
    while (start < gp.rules.size()) {
        size_t end = start;
        int stratum = gp.rules[start].stratum;
        while (end < gp.rules.size() && gp.rules[end].stratum == stratum) ++end;
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t i = start; i < end; ++i) {
                const GroundRule& rule = gp.rules[i];
                if (truth[rule.head]) continue;
                bool fires = true;
                for (const GroundLiteral& lit : rule.body) {
                    bool value = truth[lit.atom] != 0;
                    if (value == lit.negated) {
                        fires = false;
                        break;
                    }
                }
                if (fires) {
                    truth[rule.head] = 1;
                    changed = true;
                }
            }
        }
        start = end;
    }
    return truth;
}

std::vector<char> least_model(const GroundProgram& gp, const World& world,
                              const Strategy& strategy) {
    return least_model_inputs(gp, world.outcomes, decisions_of(gp, strategy));
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

namespace {

std::vector<char> decision_static_model(const GroundProgram& gp, const Strategy& strategy) {
    std::vector<char> truth(gp.atom_text.size(), 0);
    for (size_t id = 0; id < truth.size(); ++id) truth[id] = gp.static_true[id];
    std::vector<char> picked = decisions_of(gp, strategy);
    for (const DecisionVariable& dv : gp.decisions)
        if (picked[dv.id]) truth[dv.indicator] = 1;
    bool changed = true;
    while (changed) { // decision-static rules are negation-free towards each
        changed = false; // other only through strata; a straight fixpoint per
        for (int idx : gp.ds_rules) { // stratum order over the sorted rule list
            const GroundRule& rule = gp.rules[idx];
            if (truth[rule.head]) continue;
            bool fires = true;
            for (const GroundLiteral& lit : rule.body) {
                bool value = truth[lit.atom] != 0;
                if (value == lit.negated) {
                    fires = false;
                    break;
                }
            }
            if (fires) {
                truth[rule.head] = 1;
                changed = true;
            }
        }
    }
    return truth;
}

} // namespace

std::string violated_constraint(const GroundProgram& gp, const Strategy& strategy) {
    if (gp.constraints.empty()) return {};
    std::vector<char> truth = decision_static_model(gp, strategy);
    for (const GroundConstraint& constraint : gp.constraints) {
        bool violated = true;
        for (const GroundLiteral& lit : constraint.body) {
            bool value = truth[lit.atom] != 0;
            if (value == lit.negated) {
                violated = false;
                break;
            }
        }
        if (violated) return constraint.text;
    }
    return {};
}

bool is_admissible(const GroundProgram& gp, const Strategy& strategy) {
    return violated_constraint(gp, strategy).empty();
}

void check_strategy(const GroundProgram& gp, const Strategy& strategy) {
    if (strategy.group_pick.size() != gp.groups.size())
        throw Error(ErrorKind::Usage, "strategy assigns " +
                                          std::to_string(strategy.group_pick.size()) +
                                          " groups, program has " +
                                          std::to_string(gp.groups.size()));
    for (size_t g = 0; g < gp.groups.size(); ++g)
        if (strategy.group_pick[g] < 0 ||
            strategy.group_pick[g] >= static_cast<int>(gp.groups[g].size()))
            throw Error(ErrorKind::Usage, "invalid pick for group " + std::to_string(g));
    if (strategy.free_pick.size() != gp.free_decisions.size())
        throw Error(ErrorKind::Usage,
                    "strategy assigns " + std::to_string(strategy.free_pick.size()) +
                        " free decisions, program has " +
                        std::to_string(gp.free_decisions.size()));
    std::string violated = violated_constraint(gp, strategy);
    if (!violated.empty())
        throw Error(ErrorKind::Semantic, "strategy violates constraint \"" + violated + "\"");
}

// ---------------------------------------------------------------------------
// Oracle evaluation
// ---------------------------------------------------------------------------

double marginal(const GroundProgram& gp, const Strategy& strategy, const Atom& atom,
                const std::vector<std::pair<Atom, bool>>& evidence, long long cap) {
    int target = gp.atom_id(to_string(atom));
    std::vector<std::pair<int, bool>> ev;
    bool ev_possible = true;
    for (const auto& [ev_atom, truth] : evidence) {
        int id = gp.atom_id(to_string(ev_atom));
        if (id < 0) {
            if (truth) ev_possible = false; // unknown atoms are never true
            continue;
        }
        ev.push_back({id, truth});
    }
    if (!ev_possible) throw Error(ErrorKind::Evidence, "inconsistent evidence: probability 0");

    std::vector<char> picked = decisions_of(gp, strategy);
    double p_joint = 0.0, p_ev = 0.0;
    WorldEnumerator worlds(gp, cap);
    World world;
    while (worlds.next(world)) {
        std::vector<char> truth = least_model_inputs(gp, world.outcomes, picked);
        bool ev_holds = true;
        for (const auto& [id, required] : ev)
            if ((truth[id] != 0) != required) {
                ev_holds = false;
                break;
            }
        if (!ev_holds) continue;
        p_ev += world.prob;
        if (target >= 0 && truth[target]) p_joint += world.prob;
    }
    if (!evidence.empty() && p_ev <= 0.0)
        throw Error(ErrorKind::Evidence, "inconsistent evidence: probability 0");
    if (evidence.empty()) return p_joint;
    return p_joint / p_ev;
}

EUReport expected_utility(const GroundProgram& gp, const Strategy& strategy, long long cap) {
    check_strategy(gp, strategy);
    std::vector<char> picked = decisions_of(gp, strategy);
    std::vector<double> probs(gp.utilities.size(), 0.0);

    WorldEnumerator worlds(gp, cap);
    World world;
    while (worlds.next(world)) {
        std::vector<char> truth = least_model_inputs(gp, world.outcomes, picked);
        for (size_t u = 0; u < gp.utilities.size(); ++u)
            if (truth[gp.utilities[u].atom]) probs[u] += world.prob;
    }

    EUReport report;
    report.strategy = strategy;
    for (size_t u = 0; u < gp.utilities.size(); ++u) {
        const GroundUtility& util = gp.utilities[u];
        AtomContribution row;
        row.atom = gp.atom_name(util.atom);
        row.probability = probs[u];
        row.reward = util.reward;
        row.contribution = probs[u] * util.reward;
        report.total += row.contribution;
        report.atoms.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// BDD
// ---------------------------------------------------------------------------

Bdd::Bdd(size_t node_cap) : cap_(node_cap) {
    nodes_.push_back({INT32_MAX, 0, 0}); // FALSE
    nodes_.push_back({INT32_MAX, 1, 1}); // TRUE
}

int Bdd::mk(int var, int lo, int hi) {
    if (lo == hi) return lo;
    uint64_t key = (static_cast<uint64_t>(var) << 44) ^ (static_cast<uint64_t>(lo) << 22) ^
                   static_cast<uint64_t>(hi);
    auto it = unique_.find(key);
    if (it != unique_.end()) return it->second;
    if (nodes_.size() >= cap_)
        throw Error(ErrorKind::Resource,
                    "decision-diagram node cap exceeded (" + std::to_string(cap_) + ")");
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back({var, lo, hi});
    unique_.emplace(key, id);
    return id;
}

void Bdd::collect_vars(int node, std::set<int>& out) const {
    std::set<int> visited;
    std::vector<int> stack{node};
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (is_terminal(n) || !visited.insert(n).second) continue;
        out.insert(nodes_[n].var);
        stack.push_back(nodes_[n].lo);
        stack.push_back(nodes_[n].hi);
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

Engine::Engine(const GroundProgram& gp, size_t node_cap) : gp_(gp), bdd_(node_cap) {
    for (size_t i = 0; i < gp.rules.size(); ++i)
        rules_by_head_[gp.rules[i].head].push_back(static_cast<int>(i));
    decision_var_count_ = static_cast<int>(gp.decisions.size());

    int next_var = decision_var_count_;
    selector_offset_.resize(gp.choices.size(), -1);
    for (size_t c = 0; c < gp.choices.size(); ++c) {
        const auto& outcomes = gp.choices[c].outcomes;
        selector_offset_[c] = next_var;
        int selectors = static_cast<int>(outcomes.size()) - 1;
        double remaining = 1.0;
        for (int k = 0; k < selectors; ++k) {
            double q = remaining > 1e-300 ? outcomes[k].prob / remaining : 0.0;
            q = std::clamp(q, 0.0, 1.0);
            weight_true_.push_back(q);
            var_choice_.push_back(static_cast<int>(c));
            var_outcome_.push_back(k);
            remaining -= outcomes[k].prob;
        }
        next_var += selectors;
    }
}

// Dependency cone of an atom: the choice and decision variables its truth can
// depend on, following rule bodies through both positive and negated literals.
Engine::Cone Engine::cone(int atom_id) const {
    std::set<int> choice_set, decision_set, seen;
    std::vector<int> stack{atom_id};
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (id < 0 || !seen.insert(id).second) continue;
        auto co = gp_.choice_outcomes_of.find(id);
        if (co != gp_.choice_outcomes_of.end())
            for (const auto& [choice, outcome] : co->second) choice_set.insert(choice);
        auto dec = gp_.decision_by_indicator.find(id);
        if (dec != gp_.decision_by_indicator.end()) decision_set.insert(dec->second);
        auto rules = rules_by_head_.find(id);
        if (rules != rules_by_head_.end())
            for (int r : rules->second)
                for (const GroundLiteral& lit : gp_.rules[r].body) stack.push_back(lit.atom);
    }
    Cone out;
    out.choice_ids.assign(choice_set.begin(), choice_set.end());
    out.decision_ids.assign(decision_set.begin(), decision_set.end());
    return out;
}

int Engine::build(const Cone& cone, size_t pos, int sel_index, std::vector<int>& outcomes,
                  std::vector<char>& picked, int target_atom) {
    size_t total = cone.decision_ids.size() + cone.choice_ids.size();
    if (pos == total) {
        std::vector<char> truth = least_model_inputs(gp_, outcomes, picked);
        return truth[target_atom] ? Bdd::kTrue : Bdd::kFalse;
    }
    if (pos < cone.decision_ids.size()) {
        int decision = cone.decision_ids[pos];
        picked[decision] = 0;
        int lo = build(cone, pos + 1, 0, outcomes, picked, target_atom);
        picked[decision] = 1;
        int hi = build(cone, pos + 1, 0, outcomes, picked, target_atom);
        picked[decision] = 0;
        return bdd_.mk(decision, lo, hi);
    }
    int choice = cone.choice_ids[pos - cone.decision_ids.size()];
    int selectors = static_cast<int>(gp_.choices[choice].outcomes.size()) - 1;
    if (sel_index == selectors) { // every selector false: the last outcome
        outcomes[choice] = selectors;
        return build(cone, pos + 1, 0, outcomes, picked, target_atom);
    }
    outcomes[choice] = sel_index; // selector fires: outcome fixed, rest of chain moot
    int hi = build(cone, pos + 1, 0, outcomes, picked, target_atom);
    int lo = build(cone, pos, sel_index + 1, outcomes, picked, target_atom);
    return bdd_.mk(selector_offset_[choice] + sel_index, lo, hi);
}

int Engine::compile(int atom_id) {
    if (atom_id < 0) return Bdd::kFalse;
    auto it = circuit_cache_.find(atom_id);
    if (it != circuit_cache_.end()) return it->second;
    Cone c = cone(atom_id);
    std::vector<int> outcomes(gp_.choices.size(), 0);
    std::vector<char> picked(gp_.decisions.size(), 0);
    int root;
    if (gp_.static_true[atom_id]) {
        root = Bdd::kTrue;
    } else {
        root = build(c, 0, 0, outcomes, picked, atom_id);
    }
    circuit_cache_.emplace(atom_id, root);
    return root;
}

int Engine::compile(const Atom& atom) { return compile(gp_.atom_id(to_string(atom))); }

double Engine::wmc(int root, const Strategy& strategy) const {
    std::vector<char> picked = decisions_of(gp_, strategy);
    std::unordered_map<int, double> memo;
    std::function<double(int)> count = [&](int node) -> double {
        if (node == Bdd::kFalse) return 0.0;
        if (node == Bdd::kTrue) return 1.0;
        auto it = memo.find(node);
        if (it != memo.end()) return it->second;
        int var = bdd_.var_of(node);
        double value;
        if (var < decision_var_count_) {
            value = count(picked[var] ? bdd_.hi(node) : bdd_.lo(node));
        } else {
            double q = weight_true_[var - decision_var_count_];
            value = q * count(bdd_.hi(node)) + (1.0 - q) * count(bdd_.lo(node));
        }
        memo.emplace(node, value);
        return value;
    };
    return count(root);
}

EUReport Engine::eu_fast(const Strategy& strategy) {
    check_strategy(gp_, strategy);
    EUReport report;
    report.strategy = strategy;
    for (const GroundUtility& util : gp_.utilities) {
        AtomContribution row;
        row.atom = gp_.atom_name(util.atom);
        row.probability = wmc(compile(util.atom), strategy);
        row.reward = util.reward;
        row.contribution = row.probability * util.reward;
        report.total += row.contribution;
        report.atoms.push_back(std::move(row));
    }
    return report;
}

double Engine::marginal_fast(const Strategy& strategy, const Atom& atom) {
    return wmc(compile(atom), strategy);
}

void Engine::circuit_vars(int root, std::set<int>& choice_ids, std::set<int>& decision_ids) const {
    std::set<int> vars;
    bdd_.collect_vars(root, vars);
    for (int v : vars) {
        if (v < decision_var_count_)
            decision_ids.insert(v);
        else
            choice_ids.insert(var_choice_[v - decision_var_count_]);
    }
}

bool Engine::depends_on_decisions(int atom_id) {
    std::set<int> choice_ids, decision_ids;
    circuit_vars(compile(atom_id), choice_ids, decision_ids);
    return !decision_ids.empty();
}

} // namespace ddtep
