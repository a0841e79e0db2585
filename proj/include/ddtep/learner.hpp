#pragma once

#include "ddtep/engine.hpp"

namespace ddtep {

// One training example: a partial truth assignment to ground atoms.
struct Interpretation {
    std::vector<std::pair<Atom, bool>> atoms;
};

struct Dataset {
    std::vector<Interpretation> interpretations;
    std::set<Term> constants; // for Herbrand-universe extension
};

/// Parses evidence text: each `evidence(Atom,true|false).` line observes one
/// atom; consecutive lines form one joint interpretation, blank lines separate
/// interpretations.
Dataset parse_dataset(std::string_view text);

struct EStepResult {
    std::vector<double> counts; // expected true-counts per parameter
    std::vector<double> totals; // instance-interpretation pairs per parameter
    double loglik = 0.0;
};

struct FitOptions {
    int max_iters = 100;
    double tol = 1e-4;
    uint64_t seed = 0;
    long long world_cap = kDefaultWorldCap;
};

struct FitResult {
    std::vector<double> params;      // per parameter index
    std::vector<std::string> labels; // parameter labels from desugaring
    std::vector<double> loglik_trace;
    int iterations = 0;
    bool converged = false;
    uint64_t seed = 0;
    std::vector<std::string> warnings;
    Program fitted; // source program with markers replaced by learned values
};

/// Sum over interpretations of log P(evidence) with the given parameter
/// values. Rejects evidence whose circuit support includes a decision
/// variable, and evidence of probability zero.
double log_likelihood(const CoreProgram& core, const std::vector<double>& params,
                      const Dataset& dataset, long long world_cap = kDefaultWorldCap);

/// Posterior expected counts per parameter: for every interpretation, every
/// ground instance of a learnable clause contributes P(instance true |
/// evidence); instances independent of the evidence contribute their prior.
EStepResult e_step(const GroundProgram& gp, const Dataset& dataset,
                   long long world_cap = kDefaultWorldCap);

/// counts/totals, clamped to [1e-9, 1-1e-9]. Parameters without instances are
/// left unchanged with a warning.
std::vector<double> m_step(const EStepResult& step, const std::vector<double>& current,
                           std::vector<std::string>* warnings = nullptr);

FitResult em_fit(const Program& source, const CoreProgram& core, const Dataset& dataset,
                 const FitOptions& opts = {});

} // namespace ddtep
