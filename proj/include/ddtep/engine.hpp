#pragma once

#include <cstdint>
#include <unordered_map>

#include "ddtep/ground.hpp"

namespace ddtep {

inline constexpr long long kDefaultWorldCap = 1LL << 24;
inline constexpr size_t kDefaultNodeCap = 1u << 22;

/// Overridable via the DDTEP_WORLD_CAP environment variable (CLI layer).
long long world_cap_from_env();

// One total choice: an outcome index per choice variable.
struct World {
    std::vector<int> outcomes;
    double prob = 1.0;
};

// One alternative per exactly-one group plus a boolean per free decision
// (indexed like GroundProgram::free_decisions).
struct Strategy {
    std::vector<int> group_pick;
    std::vector<char> free_pick;

    bool operator==(const Strategy& o) const {
        return group_pick == o.group_pick && free_pick == o.free_pick;
    }
};

struct AtomContribution {
    std::string atom;
    double probability = 0.0;
    double reward = 0.0;
    double contribution = 0.0;
};

struct EUReport {
    std::vector<AtomContribution> atoms; // canonical utility order
    double total = 0.0;
    Strategy strategy;
};

/// Canonical lazy enumeration of possible worlds. Throws a resource error on
/// construction if the world count exceeds `cap`.
class WorldEnumerator {
public:
    explicit WorldEnumerator(const GroundProgram& gp, long long cap = kDefaultWorldCap);
    bool next(World& world);

private:
    const GroundProgram& gp_;
    std::vector<int> state_;
    bool done_ = false;
};

std::vector<char> decisions_of(const GroundProgram& gp, const Strategy& strategy);

/// Stratified least model. `outcomes` selects one outcome per choice variable,
/// `picked` holds one truth per decision variable.
std::vector<char> least_model_inputs(const GroundProgram& gp, const std::vector<int>& outcomes,
                                     const std::vector<char>& picked);

std::vector<char> least_model(const GroundProgram& gp, const World& world,
                              const Strategy& strategy);

/// Text of the first ground constraint the strategy violates, or empty.
std::string violated_constraint(const GroundProgram& gp, const Strategy& strategy);
bool is_admissible(const GroundProgram& gp, const Strategy& strategy);
void check_strategy(const GroundProgram& gp, const Strategy& strategy); // shape + admissibility

/// P(atom | evidence) under a strategy, by world enumeration.
double marginal(const GroundProgram& gp, const Strategy& strategy, const Atom& atom,
                const std::vector<std::pair<Atom, bool>>& evidence = {},
                long long cap = kDefaultWorldCap);

/// Expected utility with per-atom breakdown, by world enumeration (the
/// semantic reference path).
EUReport expected_utility(const GroundProgram& gp, const Strategy& strategy,
                          long long cap = kDefaultWorldCap);

// ---------------------------------------------------------------------------
// Knowledge compilation: reduced ordered BDDs per query atom
// ---------------------------------------------------------------------------

class Bdd {
public:
    static constexpr int kFalse = 0;
    static constexpr int kTrue = 1;

    explicit Bdd(size_t node_cap = kDefaultNodeCap);
    int mk(int var, int lo, int hi);
    bool is_terminal(int node) const { return node <= 1; }
    int var_of(int node) const { return nodes_[node].var; }
    int lo(int node) const { return nodes_[node].lo; }
    int hi(int node) const { return nodes_[node].hi; }
    size_t size() const { return nodes_.size(); }
    void collect_vars(int node, std::set<int>& out) const;

private:
    struct Node {
        int var, lo, hi;
    };
    std::vector<Node> nodes_;
    std::unordered_map<uint64_t, int> unique_;
    size_t cap_;
};

/// Compiles query atoms of one ground program into BDDs over a fixed global
/// variable order (decision variables first, then choice selectors) and
/// evaluates them by weighted model counting.
class Engine {
public:
    explicit Engine(const GroundProgram& gp, size_t node_cap = kDefaultNodeCap);

    const GroundProgram& program() const { return gp_; }

    /// Circuit that is TRUE exactly on the (choice, decision) assignments
    /// whose least model contains the atom. Cached per atom.
    int compile(int atom_id);
    int compile(const Atom& atom);

    /// Restricts decisions per the strategy, then weighted-counts over the
    /// choice selectors.
    double wmc(int root, const Strategy& strategy) const;

    /// Same contract as expected_utility, via compiled circuits.
    EUReport eu_fast(const Strategy& strategy);

    double marginal_fast(const Strategy& strategy, const Atom& atom);

    /// Choice variables and decision variables mentioned by a compiled circuit.
    void circuit_vars(int root, std::set<int>& choice_ids, std::set<int>& decision_ids) const;

    bool depends_on_decisions(int atom_id);

private:
    struct Cone {
        std::vector<int> choice_ids;
        std::vector<int> decision_ids;
    };
    Cone cone(int atom_id) const;
    int build(const Cone& cone, size_t pos, int sel_index, std::vector<int>& outcomes,
              std::vector<char>& picked, int target_atom);

    const GroundProgram& gp_;
    Bdd bdd_;
    std::unordered_map<int, int> circuit_cache_;       // atom id -> root
    std::unordered_map<int, std::vector<int>> rules_by_head_;
    int decision_var_count_ = 0;
    std::vector<int> selector_offset_;                 // per choice id
    std::vector<double> weight_true_;                  // per global var (selectors)
    std::vector<int> var_choice_, var_outcome_;        // selector var -> (choice, outcome)
};

} // namespace ddtep
