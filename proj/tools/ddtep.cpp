#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ddtep/parser.hpp"
#include "ddtep/render.hpp"
#include "ddtep/report.hpp"

namespace {

using namespace ddtep;

constexpr int kExitOk = 0;
constexpr int kExitRefuted = 1;
constexpr int kExitProgramError = 2;
constexpr int kExitResource = 3;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start)
            .count();
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Usage, "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct LoadedProgram {
    std::string bytes;
    Program program;
    CoreProgram core;
};

LoadedProgram load(const std::string& path) {
    LoadedProgram out;
    out.bytes = read_file(path);
    out.program = parse_program(out.bytes);
    out.core = desugar(out.program);
    return out;
}

void print_warnings(const GroundProgram& gp) {
    for (const std::string& warning : gp.warnings) std::cerr << "warning: " << warning << "\n";
}

// Splits "a=true,give(ann,area51),b=false" at top-level commas.
std::vector<std::string> split_assignments(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    int depth = 0;
    for (char c : text) {
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (c == ',' && depth == 0) {
            if (!current.empty()) out.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

std::vector<std::pair<Atom, bool>> parse_assignments(const std::string& text) {
    std::vector<std::pair<Atom, bool>> out;
    for (std::string item : split_assignments(text)) {
        bool value = true;
        size_t eq = item.rfind('=');
        // '=' can only appear as the assignment separator; atoms contain none
        if (eq != std::string::npos) {
            std::string rhs = item.substr(eq + 1);
            if (rhs == "true" || rhs == "1")
                value = true;
            else if (rhs == "false" || rhs == "0")
                value = false;
            else
                throw Error(ErrorKind::Usage, "expected =true or =false in '" + item + "'");
            item = item.substr(0, eq);
        }
        out.push_back({parse_ground_atom(item), value});
    }
    return out;
}

Strategy strategy_from_assignments(const GroundProgram& gp,
                                   const std::vector<std::pair<Atom, bool>>& assignments) {
    Strategy strategy;
    strategy.group_pick.assign(gp.groups.size(), -1);
    strategy.free_pick.assign(gp.free_decisions.size(), 0);
    std::vector<int> free_index(gp.decisions.size(), -1);
    for (size_t f = 0; f < gp.free_decisions.size(); ++f)
        free_index[gp.free_decisions[f]] = static_cast<int>(f);

    for (const auto& [atom, value] : assignments) {
        int id = gp.atom_id(to_string(atom));
        auto it = id < 0 ? gp.decision_by_atom.end() : gp.decision_by_atom.find(id);
        if (it == gp.decision_by_atom.end())
            throw Error(ErrorKind::Usage,
                        to_string(atom) + " is not a decision atom of this program");
        const DecisionVariable& dv = gp.decisions[it->second];
        if (dv.group >= 0) {
            if (!value) continue; // explicit =false on an alternative is a no-op
            int alt = 0;
            for (size_t i = 0; i < gp.groups[dv.group].size(); ++i)
                if (gp.groups[dv.group][i] == dv.id) alt = static_cast<int>(i);
            if (strategy.group_pick[dv.group] >= 0 && strategy.group_pick[dv.group] != alt)
                throw Error(ErrorKind::Usage,
                            "exactly-one group violated: both " +
                                gp.atom_name(gp.decisions[gp.groups[dv.group][strategy.group_pick
                                                                                   [dv.group]]]
                                                 .atom) +
                                " and " + gp.atom_name(dv.atom) + " selected");
            strategy.group_pick[dv.group] = alt;
        } else {
            strategy.free_pick[free_index[dv.id]] = value;
        }
    }
    for (size_t g = 0; g < strategy.group_pick.size(); ++g) {
        if (strategy.group_pick[g] >= 0) continue;
        std::string alts;
        for (int id : gp.groups[g])
            alts += (alts.empty() ? "" : ", ") + gp.atom_name(gp.decisions[id].atom);
        throw Error(ErrorKind::Usage,
                    "incomplete strategy: pick one of group " + std::to_string(g) + " {" + alts +
                        "}");
    }
    return strategy;
}

void emit(const RunReport& report, bool json) {
    std::cout << (json ? report.to_json() + "\n" : report.to_text());
}

EngineMode parse_engine(const std::string& name) {
    if (name == "oracle") return EngineMode::Oracle;
    if (name == "circuit") return EngineMode::Circuit;
    throw Error(ErrorKind::Usage, "--engine must be oracle or circuit");
}

// ---------------------------------------------------------------------------

int cmd_solve(const std::string& path, const std::string& method, const std::string& engine,
              uint64_t seed, bool json) {
    Timer timer;
    LoadedProgram loaded = load(path);
    GroundProgram gp = ground(loaded.core);
    print_warnings(gp);
    EngineMode mode = parse_engine(engine);
    long long cap = world_cap_from_env();
    Solution solution;
    if (method == "exhaustive")
        solution = solve_exhaustive(gp, mode, kDefaultStrategyCap, cap);
    else if (method == "local")
        solution = solve_local(gp, seed, 4, 256, mode, kDefaultStrategyCap, cap);
    else
        throw Error(ErrorKind::Usage, "--method must be exhaustive or local");

    RunReport report("solve", loaded.bytes);
    report.set_solution(gp, solution);
    report.set_duration_ms(timer.ms());
    emit(report, json);
    return kExitOk;
}

int cmd_eval(const std::string& path, const std::string& set, const std::string& engine,
             bool json) {
    Timer timer;
    LoadedProgram loaded = load(path);
    GroundProgram gp = ground(loaded.core);
    print_warnings(gp);
    Strategy strategy = strategy_from_assignments(gp, parse_assignments(set));
    long long cap = world_cap_from_env();
    EUReport eu;
    if (parse_engine(engine) == EngineMode::Circuit) {
        Engine compiled(gp);
        eu = compiled.eu_fast(strategy);
    } else {
        eu = expected_utility(gp, strategy, cap);
    }
    RunReport report("eval", loaded.bytes);
    report.set_strategy(gp, strategy);
    report.set_eu(eu);
    report.set_duration_ms(timer.ms());
    emit(report, json);
    return kExitOk;
}

int cmd_query(const std::string& path, const std::string& atom_text, const std::string& strategy_text,
              const std::string& evidence_text, bool json) {
    Timer timer;
    LoadedProgram loaded = load(path);
    GroundProgram gp = ground(loaded.core);
    print_warnings(gp);
    Atom atom = parse_ground_atom(atom_text);

    std::vector<std::pair<Atom, bool>> evidence;
    for (const auto& [id, truth] : gp.evidence) {
        Atom ev_atom = gp.atoms[id];
        evidence.push_back({ev_atom, truth});
    }
    if (!evidence_text.empty())
        for (const auto& [ev_atom, truth] : parse_assignments(evidence_text))
            evidence.push_back({ev_atom, truth});

    Strategy strategy;
    strategy.group_pick.assign(gp.groups.size(), 0);
    strategy.free_pick.assign(gp.free_decisions.size(), 0);
    if (!strategy_text.empty()) {
        strategy = strategy_from_assignments(gp, parse_assignments(strategy_text));
    } else {
        Engine compiled(gp);
        auto requires_strategy = [&](const Atom& a) {
            int id = gp.atom_id(to_string(a));
            return id >= 0 && compiled.depends_on_decisions(id);
        };
        if (requires_strategy(atom))
            throw Error(ErrorKind::Usage,
                        to_string(atom) + " depends on decisions; provide --strategy");
        for (const auto& [ev_atom, truth] : evidence)
            if (requires_strategy(ev_atom))
                throw Error(ErrorKind::Usage, "evidence " + to_string(ev_atom) +
                                                  " depends on decisions; provide --strategy");
    }
    if (gp.atom_id(to_string(atom)) < 0)
        std::cerr << "warning: " << to_string(atom)
                  << " is not in the program vocabulary; probability 0\n";

    double probability = marginal(gp, strategy, atom, evidence, world_cap_from_env());
    RunReport report("query", loaded.bytes);
    report.set_query(atom, probability);
    report.set_duration_ms(timer.ms());
    emit(report, json);
    return kExitOk;
}

int cmd_learn(const std::string& path, const std::string& data_path, int max_iters, double tol,
              uint64_t seed, const std::string& out_path, bool json) {
    Timer timer;
    LoadedProgram loaded = load(path);
    Dataset dataset = parse_dataset(read_file(data_path));
    FitOptions opts;
    opts.max_iters = max_iters;
    opts.tol = tol;
    opts.seed = seed;
    opts.world_cap = world_cap_from_env();
    FitResult fit = em_fit(loaded.program, loaded.core, dataset, opts);
    for (const std::string& warning : fit.warnings) std::cerr << "warning: " << warning << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error(ErrorKind::Usage, "cannot write " + out_path);
        out << render(fit.fitted);
    }
    RunReport report("learn", loaded.bytes);
    report.set_fit(fit);
    report.set_duration_ms(timer.ms());
    emit(report, json);
    return kExitOk;
}

int cmd_verify(const std::string& path, bool has_threshold, double threshold,
               const std::string& engine, bool json) {
    Timer timer;
    LoadedProgram loaded = load(path);
    GroundProgram gp = ground(loaded.core);
    print_warnings(gp);
    EngineMode mode = parse_engine(engine);
    long long cap = world_cap_from_env();

    RunReport report("verify", loaded.bytes);
    int code = kExitOk;
    if (has_threshold) {
        GuaranteeVerdict verdict = check_guarantee(gp, threshold, mode, kDefaultStrategyCap, cap);
        report.set_verdict(gp, verdict);
        code = verdict.holds ? kExitOk : kExitRefuted;
    } else {
        report.set_bounds(gp, verify_bounds(gp, mode, kDefaultStrategyCap, cap));
    }
    report.set_duration_ms(timer.ms());
    emit(report, json);
    return code;
}

int cmd_explain(const std::string& path, const std::string& set, bool worlds,
                const std::string& engine, bool json) {
    Timer timer;
    LoadedProgram loaded = load(path);
    GroundProgram gp = ground(loaded.core);
    print_warnings(gp);
    Strategy strategy = strategy_from_assignments(gp, parse_assignments(set));
    long long cap = world_cap_from_env();
    EUReport eu;
    if (parse_engine(engine) == EngineMode::Circuit) {
        Engine compiled(gp);
        eu = compiled.eu_fast(strategy);
    } else {
        eu = expected_utility(gp, strategy, cap);
    }
    RunReport report("explain", loaded.bytes);
    report.set_strategy(gp, strategy);
    report.set_eu(eu);

    std::string world_table;
    if (worlds) {
        if (gp.world_count() > 256.0L) {
            std::cerr << "note: " << static_cast<double>(gp.world_count())
                      << " worlds exceed the 256-row table cap; omitting --worlds output\n";
        } else {
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            std::vector<char> picked = decisions_of(gp, strategy);
            WorldEnumerator en(gp, 256);
            World world;
            double mass = 0.0;
            while (en.next(world)) {
                std::vector<char> truth = least_model_inputs(gp, world.outcomes, picked);
                nlohmann::ordered_json row;
                std::string label;
                for (size_t c = 0; c < gp.choices.size(); ++c) {
                    int atom = gp.choices[c].outcomes[world.outcomes[c]].atom;
                    label += (label.empty() ? "" : ", ") + gp.choices[c].label + "=" +
                             (atom >= 0 ? gp.atom_name(atom) : "none");
                }
                row["world"] = label;
                row["probability"] = world.prob;
                nlohmann::ordered_json holds = nlohmann::ordered_json::object();
                for (const GroundUtility& util : gp.utilities)
                    holds[gp.atom_name(util.atom)] = truth[util.atom] != 0;
                row["atoms"] = holds;
                rows.push_back(row);
                mass += world.prob;

                world_table += "  p=" + fixed9(world.prob) + "  " +
                               (label.empty() ? "(no choices)" : label);
                std::string true_atoms;
                for (const GroundUtility& util : gp.utilities)
                    if (truth[util.atom])
                        true_atoms += (true_atoms.empty() ? "" : ", ") + gp.atom_name(util.atom);
                world_table += "  => {" + true_atoms + "}\n";
            }
            report.set_worlds(std::move(rows));
            world_table += "  total probability: " + fixed9(mass) + "\n";
        }
    }
    report.set_duration_ms(timer.ms());
    if (json) {
        emit(report, true);
    } else {
        std::cout << report.to_text();
        if (!world_table.empty()) std::cout << "worlds:\n" << world_table;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ddtep - declarative decision-theoretic probabilistic programs"};
    app.require_subcommand(1);
    bool json = false;
    app.add_flag("--json", json, "emit the machine-readable report");

    std::string path, engine = "circuit", method = "exhaustive", set, atom, strategy, evidence;
    std::string data, out;
    uint64_t seed = 0;
    int max_iters = 100;
    double tol = 1e-4, threshold = 0.0;
    bool worlds = false;

    auto* solve = app.add_subcommand("solve", "find the expected-utility maximizing strategy");
    solve->add_option("program", path)->required();
    solve->add_option("--method", method, "exhaustive|local")->capture_default_str();
    solve->add_option("--engine", engine, "oracle|circuit")->capture_default_str();
    solve->add_option("--seed", seed, "seed for --method=local")->capture_default_str();

    auto* eval = app.add_subcommand("eval", "expected utility of one strategy");
    eval->add_option("program", path)->required();
    eval->add_option("--set", set, "decision assignment, e.g. ask=true,informed_bake=true")
        ->required();
    eval->add_option("--engine", engine, "oracle|circuit")->capture_default_str();

    auto* query = app.add_subcommand("query", "marginal probability of a ground atom");
    query->add_option("program", path)->required();
    query->add_option("--atom", atom)->required();
    query->add_option("--strategy", strategy, "decision assignment");
    query->add_option("--evidence", evidence, "conditioning atoms, e.g. fire=true");

    auto* learn = app.add_subcommand("learn", "fit t(...) parameters from interpretations");
    learn->add_option("program", path)->required();
    learn->add_option("--data", data)->required();
    learn->add_option("--max-iters", max_iters)->capture_default_str();
    learn->add_option("--tol", tol)->capture_default_str();
    learn->add_option("--seed", seed)->capture_default_str();
    learn->add_option("--out", out, "write the fitted program here");

    auto* verify = app.add_subcommand("verify", "expected-utility bounds over all strategies");
    verify->add_option("program", path)->required();
    auto* at_least = verify->add_option("--at-least", threshold, "value guarantee to check");
    verify->add_option("--engine", engine, "oracle|circuit")->capture_default_str();

    auto* explain = app.add_subcommand("explain", "per-atom contributions for one strategy");
    explain->add_option("program", path)->required();
    explain->add_option("--strategy", set, "decision assignment")->required();
    explain->add_flag("--worlds", worlds, "include the world table (up to 256 worlds)");
    explain->add_option("--engine", engine, "oracle|circuit")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitProgramError;
    }

    try {
        if (solve->parsed()) return cmd_solve(path, method, engine, seed, json);
        if (eval->parsed()) return cmd_eval(path, set, engine, json);
        if (query->parsed()) return cmd_query(path, atom, strategy, evidence, json);
        if (learn->parsed()) return cmd_learn(path, data, max_iters, tol, seed, out, json);
        if (verify->parsed())
            return cmd_verify(path, at_least->count() > 0, threshold, engine, json);
        if (explain->parsed()) return cmd_explain(path, set, worlds, engine, json);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Resource ? kExitResource : kExitProgramError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitProgramError;
    }
    return kExitProgramError;
}
