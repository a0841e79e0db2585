#include "ddtep/learner.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ddtep/parser.hpp"
#include "ddtep/render.hpp"

namespace ddtep {

namespace {

constexpr double kClamp = 1e-9;

std::vector<int> blank_lines(std::string_view text) {
    std::vector<int> out;
    int line = 1;
    bool blank = true;
    for (char c : text) {
        if (c == '\n') {
            if (blank) out.push_back(line);
            ++line;
            blank = true;
        } else if (c != ' ' && c != '\t' && c != '\r') {
            blank = false;
        }
    }
    if (blank) out.push_back(line);
    return out;
}

} // namespace

Dataset parse_dataset(std::string_view text) {
    Program program = parse_program(text);
    std::vector<int> separators = blank_lines(text);

    Dataset dataset;
    int prev_end = -1;
    for (const Statement& stmt : program.statements) {
        const auto* ev = stmt_as<EvidenceDecl>(stmt);
        if (!ev)
            throw Error(ErrorKind::Parse, "datasets may only contain evidence declarations",
                        stmt.loc);
        if (!ev->atom.is_ground())
            throw Error(ErrorKind::Parse, "evidence atom " + to_string(ev->atom) +
                                              " is not ground",
                        ev->atom.loc);
        bool separated = prev_end < 0 ||
                         std::any_of(separators.begin(), separators.end(), [&](int line) {
                             return line > prev_end && line < stmt.loc.line;
                         });
        if (separated) dataset.interpretations.emplace_back();
        prev_end = stmt.end_line;

        auto& atoms = dataset.interpretations.back().atoms;
        std::string key = to_string(ev->atom);
        bool duplicate = false;
        for (const auto& [atom, truth] : atoms) {
            if (to_string(atom) != key) continue;
            if (truth != ev->truth)
                throw Error(ErrorKind::Parse,
                            "conflicting evidence for " + key + " in one interpretation",
                            ev->atom.loc);
            duplicate = true;
        }
        if (!duplicate) atoms.push_back({ev->atom, ev->truth});
        for (const Term& arg : ev->atom.args) {
            std::vector<Term> stack{arg};
            while (!stack.empty()) {
                Term t = stack.back();
                stack.pop_back();
                if (t.kind == Term::Kind::Constant || t.kind == Term::Kind::Number)
                    dataset.constants.insert(t);
                for (const Term& sub : t.args) stack.push_back(sub);
            }
        }
    }
    return dataset;
}

namespace {

struct EvidenceAtom {
    int id = -1;             // interned atom, -1 if outside the vocabulary
    bool required = true;
    std::string text;
};

struct InterpretationPlan {
    std::vector<EvidenceAtom> atoms;
    std::vector<int> support; // choice variables the evidence depends on
    std::string text;
};

std::vector<InterpretationPlan> plan_interpretations(const GroundProgram& gp,
                                                     const Dataset& dataset) {
    Engine engine(gp);
    std::vector<InterpretationPlan> plans;
    for (const Interpretation& interp : dataset.interpretations) {
        InterpretationPlan plan;
        std::set<int> support;
        for (const auto& [atom, truth] : interp.atoms) {
            EvidenceAtom ev;
            ev.text = to_string(atom);
            ev.id = gp.atom_id(ev.text);
            ev.required = truth;
            plan.text += (plan.text.empty() ? "" : ", ") + ev.text + "=" +
                         (truth ? "true" : "false");
            if (ev.id >= 0) {
                std::set<int> choice_ids, decision_ids;
                engine.circuit_vars(engine.compile(ev.id), choice_ids, decision_ids);
                if (!decision_ids.empty())
                    throw Error(ErrorKind::Evidence,
                                "decision-dependent evidence: " + ev.text + " depends on " +
                                    gp.atom_name(
                                        gp.decisions[*decision_ids.begin()].atom));
                support.insert(choice_ids.begin(), choice_ids.end());
            }
            plan.atoms.push_back(std::move(ev));
        }
        plan.support.assign(support.begin(), support.end());
        plans.push_back(std::move(plan));
    }
    return plans;
}

} // namespace

EStepResult e_step(const GroundProgram& gp, const Dataset& dataset, long long world_cap) {
    auto instances = gp.param_instances();
    EStepResult result;
    result.counts.assign(gp.param_count, 0.0);
    result.totals.assign(gp.param_count, 0.0);

    std::vector<InterpretationPlan> plans = plan_interpretations(gp, dataset);
    std::vector<char> no_decisions(gp.decisions.size(), 0);

    for (const InterpretationPlan& plan : plans) {
        for (const EvidenceAtom& ev : plan.atoms)
            if (ev.id < 0 && ev.required)
                throw Error(ErrorKind::Evidence,
                            "impossible evidence: " + ev.text + " is not derivable");

        // Enumerate assignments of the support variables; everything else is
        // independent of the evidence and marginalizes to 1.
        long double combos = 1.0L;
        for (int c : plan.support) combos *= gp.choices[c].outcomes.size();
        if (combos > static_cast<long double>(world_cap))
            throw Error(ErrorKind::Resource, "evidence support too large for the oracle");

        std::vector<int> outcomes(gp.choices.size(), 0);
        std::vector<int> state(plan.support.size(), 0);
        std::vector<std::vector<double>> posterior(plan.support.size());
        for (size_t i = 0; i < plan.support.size(); ++i)
            posterior[i].assign(gp.choices[plan.support[i]].outcomes.size(), 0.0);

        double p_evidence = 0.0;
        bool done = plan.support.empty();
        bool first = true;
        while (first || !done) {
            first = false;
            double p = 1.0;
            for (size_t i = 0; i < plan.support.size(); ++i) {
                outcomes[plan.support[i]] = state[i];
                p *= gp.choices[plan.support[i]].outcomes[state[i]].prob;
            }
            std::vector<char> truth = least_model_inputs(gp, outcomes, no_decisions);
            bool holds = true;
            for (const EvidenceAtom& ev : plan.atoms) {
                bool value = ev.id >= 0 && truth[ev.id];
                if (value != ev.required) {
                    holds = false;
                    break;
                }
            }
            if (holds) {
                p_evidence += p;
                for (size_t i = 0; i < plan.support.size(); ++i) posterior[i][state[i]] += p;
            }
            if (plan.support.empty()) break;
            done = true;
            for (size_t i = plan.support.size(); i-- > 0;) {
                if (++state[i] <
                    static_cast<int>(gp.choices[plan.support[i]].outcomes.size())) {
                    done = false;
                    break;
                }
                state[i] = 0;
            }
        }

        if (p_evidence <= 0.0)
            throw Error(ErrorKind::Evidence, "impossible evidence: {" + plan.text + "}");
        result.loglik += std::log(p_evidence);

        for (int param = 0; param < gp.param_count; ++param) {
            for (const auto& [choice, outcome] : instances[param]) {
                result.totals[param] += 1.0;
                auto it = std::find(plan.support.begin(), plan.support.end(), choice);
                if (it == plan.support.end()) {
                    // independent of the evidence: posterior equals prior
                    result.counts[param] += gp.choices[choice].outcomes[outcome].prob;
                } else {
                    size_t idx = static_cast<size_t>(it - plan.support.begin());
                    result.counts[param] += posterior[idx][outcome] / p_evidence;
                }
            }
        }
    }
    return result;
}

double log_likelihood(const CoreProgram& core, const std::vector<double>& params,
                      const Dataset& dataset, long long world_cap) {
    GroundProgram gp = ground(core, dataset.constants, &params);
    return e_step(gp, dataset, world_cap).loglik;
}

std::vector<double> m_step(const EStepResult& step, const std::vector<double>& current,
                           std::vector<std::string>* warnings) {
    std::vector<double> out = current;
    for (size_t p = 0; p < current.size(); ++p) {
        if (step.totals[p] <= 0.0) {
            if (warnings)
                warnings->push_back("parameter #" + std::to_string(p) +
                                    " has no relevant ground instances; left unchanged");
            continue;
        }
        out[p] = std::clamp(step.counts[p] / step.totals[p], kClamp, 1.0 - kClamp);
    }
    return out;
}

FitResult em_fit(const Program& source, const CoreProgram& core, const Dataset& dataset,
                 const FitOptions& opts) {
    if (core.params.empty())
        throw Error(ErrorKind::Usage, "nothing to learn: the program declares no t(...) "
                                      "parameters");
    FitResult fit;
    fit.seed = opts.seed;
    std::mt19937_64 gen(opts.seed);
    std::uniform_real_distribution<double> uniform(0.1, 0.9);
    for (const LearnableParam& param : core.params) {
        fit.labels.push_back(param.label);
        fit.params.push_back(param.init ? *param.init : uniform(gen));
    }

    GroundProgram base = ground(core, dataset.constants, &fit.params);
    EStepResult step = e_step(base, dataset, opts.world_cap);
    fit.loglik_trace.push_back(step.loglik);

    for (int it = 1; it <= opts.max_iters; ++it) {
        std::vector<double> next = m_step(step, fit.params, &fit.warnings);
        double delta = 0.0;
        for (size_t p = 0; p < next.size(); ++p)
            delta = std::max(delta, std::abs(next[p] - fit.params[p]));
        fit.params = std::move(next);
        fit.iterations = it;
        GroundProgram gp = base.with_params(fit.params);
        step = e_step(gp, dataset, opts.world_cap);
        fit.loglik_trace.push_back(step.loglik);
        if (delta < opts.tol) {
            fit.converged = true;
            break;
        }
    }
    std::sort(fit.warnings.begin(), fit.warnings.end());
    fit.warnings.erase(std::unique(fit.warnings.begin(), fit.warnings.end()),
                       fit.warnings.end());
    fit.fitted = apply_params(source, fit.params);
    return fit;
}

} // namespace ddtep
