#include "ddtep/report.hpp"

#include <cstdio>

#include <openssl/evp.h>

#include "ddtep/render.hpp"

namespace ddtep {

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string fixed9(double value) {
    if (value == 0.0) value = 0.0; // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", value);
    return buf;
}

nlohmann::ordered_json strategy_json(const GroundProgram& gp, const Strategy& strategy) {
    nlohmann::ordered_json out;
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (size_t g = 0; g < gp.groups.size(); ++g) {
        nlohmann::ordered_json entry;
        entry["group"] = g;
        nlohmann::ordered_json alts = nlohmann::ordered_json::array();
        for (int id : gp.groups[g]) alts.push_back(gp.atom_name(gp.decisions[id].atom));
        entry["alternatives"] = alts;
        entry["chosen"] = gp.atom_name(gp.decisions[gp.groups[g][strategy.group_pick[g]]].atom);
        groups.push_back(entry);
    }
    out["groups"] = groups;
    nlohmann::ordered_json free = nlohmann::ordered_json::object();
    for (size_t f = 0; f < gp.free_decisions.size(); ++f)
        free[gp.atom_name(gp.decisions[gp.free_decisions[f]].atom)] =
            static_cast<bool>(strategy.free_pick[f]);
    out["free"] = free;
    return out;
}

std::string strategy_text(const GroundProgram& gp, const Strategy& strategy) {
    std::string out;
    for (size_t g = 0; g < gp.groups.size(); ++g) {
        if (!out.empty()) out += ", ";
        out += gp.atom_name(gp.decisions[gp.groups[g][strategy.group_pick[g]]].atom);
    }
    for (size_t f = 0; f < gp.free_decisions.size(); ++f) {
        if (!out.empty()) out += ", ";
        out += gp.atom_name(gp.decisions[gp.free_decisions[f]].atom);
        out += strategy.free_pick[f] ? "=true" : "=false";
    }
    return out.empty() ? "(empty strategy)" : out;
}

namespace {

nlohmann::ordered_json atoms_json(const EUReport& report) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const AtomContribution& row : report.atoms) {
        nlohmann::ordered_json entry;
        entry["atom"] = row.atom;
        entry["probability"] = row.probability;
        entry["reward"] = row.reward;
        entry["contribution"] = row.contribution;
        rows.push_back(entry);
    }
    return rows;
}

} // namespace

RunReport::RunReport(std::string command, const std::string& program_bytes) {
    json_["command"] = std::move(command);
    json_["program_sha256"] = sha256_hex(program_bytes);
}

void RunReport::set_strategy(const GroundProgram& gp, const Strategy& strategy) {
    json_["strategy"] = strategy_json(gp, strategy);
}

void RunReport::set_eu(const EUReport& report) {
    json_["total_eu"] = report.total;
    json_["atoms"] = atoms_json(report);
}

void RunReport::set_solution(const GroundProgram& gp, const Solution& solution) {
    set_strategy(gp, solution.best.strategy);
    set_eu(solution.best);
    nlohmann::ordered_json ties = nlohmann::ordered_json::array();
    for (const auto& [strategy, total] : solution.ties) {
        nlohmann::ordered_json entry;
        entry["strategy"] = strategy_json(gp, strategy);
        entry["total_eu"] = total;
        ties.push_back(entry);
    }
    json_["ties"] = ties;
    json_["method"] = solution.method;
    json_["certified"] = solution.certified;
    json_["explored"] = solution.explored;
}

void RunReport::set_bounds(const GroundProgram& gp, const BoundsReport& bounds) {
    nlohmann::ordered_json out;
    out["min"] = bounds.min_report.total;
    out["max"] = bounds.max_report.total;
    out["argmin"] = strategy_json(gp, bounds.min_report.strategy);
    out["argmax"] = strategy_json(gp, bounds.max_report.strategy);
    json_["bounds"] = out;
}

void RunReport::set_verdict(const GroundProgram& gp, const GuaranteeVerdict& verdict) {
    set_bounds(gp, verdict.bounds);
    json_["bounds"]["threshold"] = verdict.threshold;
    json_["bounds"]["holds"] = verdict.holds;
    if (!verdict.holds) {
        json_["bounds"]["counterexample"] = strategy_json(gp, verdict.bounds.min_report.strategy);
        json_["bounds"]["counterexample_eu"] = verdict.bounds.min_report.total;
    }
}

void RunReport::set_fit(const FitResult& fit) {
    nlohmann::ordered_json out;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (size_t p = 0; p < fit.params.size(); ++p) params[fit.labels[p]] = fit.params[p];
    out["params"] = params;
    out["loglik_trace"] = fit.loglik_trace;
    out["iterations"] = fit.iterations;
    out["converged"] = fit.converged;
    out["seed"] = fit.seed;
    json_["fit"] = out;
}

void RunReport::set_query(const Atom& atom, double probability) {
    json_["atom"] = to_string(atom);
    json_["probability"] = probability;
}

void RunReport::set_worlds(nlohmann::ordered_json rows) { json_["worlds"] = std::move(rows); }

void RunReport::set_duration_ms(double ms) { json_["duration_ms"] = ms; }

std::string RunReport::to_text() const {
    std::string out;
    auto strategy_line = [](const nlohmann::ordered_json& strategy) {
        std::string line;
        for (const auto& group : strategy["groups"]) {
            if (!line.empty()) line += ", ";
            line += group["chosen"].get<std::string>();
        }
        for (const auto& [name, value] : strategy["free"].items()) {
            if (!line.empty()) line += ", ";
            line += name + (value.get<bool>() ? "=true" : "=false");
        }
        return line.empty() ? std::string("(empty strategy)") : line;
    };

    out += "command: " + json_["command"].get<std::string>() + "\n";
    out += "program sha256: " + json_["program_sha256"].get<std::string>() + "\n";
    if (json_.contains("method"))
        out += "method: " + json_["method"].get<std::string>() +
               (json_["certified"].get<bool>() ? " (certified optimum)" : " (not certified)") +
               ", explored " + std::to_string(json_["explored"].get<long long>()) +
               " strategies\n";
    if (json_.contains("strategy")) out += "strategy: " + strategy_line(json_["strategy"]) + "\n";
    if (json_.contains("atoms")) {
        out += "utility atoms:\n";
        size_t width = 4;
        for (const auto& row : json_["atoms"])
            width = std::max(width, row["atom"].get<std::string>().size());
        for (const auto& row : json_["atoms"]) {
            std::string atom = row["atom"].get<std::string>();
            atom.resize(width, ' ');
            out += "  " + atom + "  p=" + fixed9(row["probability"].get<double>()) +
                   "  reward=" + fixed9(row["reward"].get<double>()) +
                   "  contribution=" + fixed9(row["contribution"].get<double>()) + "\n";
        }
    }
    if (json_.contains("total_eu"))
        out += "total expected utility: " + fixed9(json_["total_eu"].get<double>()) + "\n";
    if (json_.contains("ties") && json_["ties"].size() > 1) {
        out += "ties (within 1e-9):\n";
        for (const auto& tie : json_["ties"])
            out += "  " + strategy_line(tie["strategy"]) +
                   "  eu=" + fixed9(tie["total_eu"].get<double>()) + "\n";
    }
    if (json_.contains("atom"))
        out += json_["atom"].get<std::string>() + ": " +
               fixed9(json_["probability"].get<double>()) + "\n";
    if (json_.contains("bounds")) {
        const auto& bounds = json_["bounds"];
        out += "bounds: min=" + fixed9(bounds["min"].get<double>()) +
               " (" + strategy_line(bounds["argmin"]) + "), max=" +
               fixed9(bounds["max"].get<double>()) + " (" + strategy_line(bounds["argmax"]) +
               ")\n";
        if (bounds.contains("holds")) {
            out += "guarantee eu >= " + fixed9(bounds["threshold"].get<double>()) + ": ";
            out += bounds["holds"].get<bool>() ? "HOLDS\n" : "REFUTED\n";
            if (!bounds["holds"].get<bool>())
                out += "counterexample: " + strategy_line(bounds["counterexample"]) +
                       " with eu=" + fixed9(bounds["counterexample_eu"].get<double>()) + "\n";
        }
    }
    if (json_.contains("fit")) {
        const auto& fit = json_["fit"];
        out += "fit: " + std::to_string(fit["iterations"].get<int>()) + " iterations, " +
               (fit["converged"].get<bool>() ? "converged" : "not converged") + "\n";
        out += "parameters:\n";
        for (const auto& [label, value] : fit["params"].items())
            out += "  " + label + " = " + fixed9(value.get<double>()) + "\n";
        out += "log-likelihood trace:";
        for (const auto& ll : fit["loglik_trace"]) out += " " + fixed9(ll.get<double>());
        out += "\n";
    }
    if (json_.contains("duration_ms"))
        out += "duration: " + std::to_string(json_["duration_ms"].get<double>()) + " ms\n";
    return out;
}

} // namespace ddtep
