#include "ddtep/solver.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <random>

namespace ddtep {

namespace {

constexpr double kTieTolerance = 1e-9;

// Shared evaluator so exhaustive search compiles circuits once.
class Evaluator {
public:
    Evaluator(const GroundProgram& gp, EngineMode mode, long long world_cap)
        : gp_(gp), mode_(mode), world_cap_(world_cap) {
        if (mode == EngineMode::Circuit) engine_.emplace(gp);
    }

    EUReport report(const Strategy& strategy) {
        return mode_ == EngineMode::Circuit ? engine_->eu_fast(strategy)
                                            : expected_utility(gp_, strategy, world_cap_);
    }

private:
    const GroundProgram& gp_;
    EngineMode mode_;
    long long world_cap_;
    std::optional<Engine> engine_;
};

// Canonical odometer over the raw strategy space; returns false when done.
bool advance(const GroundProgram& gp, Strategy& s) {
    for (size_t f = s.free_pick.size(); f-- > 0;) {
        if (!s.free_pick[f]) {
            s.free_pick[f] = 1;
            return true;
        }
        s.free_pick[f] = 0;
    }
    for (size_t g = s.group_pick.size(); g-- > 0;) {
        if (++s.group_pick[g] < static_cast<int>(gp.groups[g].size())) return true;
        s.group_pick[g] = 0;
    }
    return false;
}

Strategy first_strategy(const GroundProgram& gp) {
    Strategy s;
    s.group_pick.assign(gp.groups.size(), 0);
    s.free_pick.assign(gp.free_decisions.size(), 0);
    return s;
}

void for_each_admissible(const GroundProgram& gp, long long cap,
                         const std::function<void(const Strategy&)>& fn) {
    StrategySpace space = strategy_space(gp);
    if (space.raw_count() > static_cast<long double>(cap))
        throw Error(ErrorKind::Resource,
                    "strategy space too large to enumerate (cap " + std::to_string(cap) +
                        "); consider --method=local");
    Strategy s = first_strategy(gp);
    long long admissible = 0;
    do {
        if (!is_admissible(gp, s)) continue;
        if (++admissible > cap)
            throw Error(ErrorKind::Resource,
                        "more than " + std::to_string(cap) +
                            " admissible strategies; consider --method=local");
        fn(s);
    } while (advance(gp, s));
}

} // namespace

StrategySpace strategy_space(const GroundProgram& gp) {
    StrategySpace space;
    for (const auto& group : gp.groups) space.group_sizes.push_back(static_cast<int>(group.size()));
    space.free_count = static_cast<int>(gp.free_decisions.size());
    return space;
}

std::vector<Strategy> enumerate_strategies(const GroundProgram& gp, long long cap) {
    std::vector<Strategy> out;
    for_each_admissible(gp, cap, [&](const Strategy& s) { out.push_back(s); });
    return out;
}

Solution solve_exhaustive(const GroundProgram& gp, EngineMode mode, long long strategy_cap,
                          long long world_cap) {
    Evaluator eval(gp, mode, world_cap);
    Solution solution;
    solution.method = "exhaustive";
    solution.certified = true;
    bool found = false;
    double best = 0.0;

    for_each_admissible(gp, strategy_cap, [&](const Strategy& s) {
        double total = eval.report(s).total;
        ++solution.explored;
        if (!found || total > best) {
            best = total;
            found = true;
            std::erase_if(solution.ties,
                          [&](const auto& entry) { return entry.second <= best - kTieTolerance; });
        }
        if (total > best - kTieTolerance) solution.ties.push_back({s, total});
    });

    if (!found)
        throw Error(ErrorKind::Semantic,
                    "no admissible strategy: every assignment violates a constraint");
    // Deterministic tie-break: ties are in canonical order; the winner is the
    // canonically smallest strategy within tolerance of the maximum.
    solution.best = eval.report(solution.ties.front().first);
    return solution;
}

Solution solve_local(const GroundProgram& gp, uint64_t seed, int restarts, int max_steps,
                     EngineMode mode, long long strategy_cap, long long world_cap) {
    Evaluator eval(gp, mode, world_cap);
    std::mt19937_64 gen(seed);
    Solution solution;
    solution.method = "local";
    solution.certified = false;

    auto random_strategy = [&]() -> std::optional<Strategy> {
        for (int attempt = 0; attempt < 256; ++attempt) {
            Strategy s;
            for (const auto& group : gp.groups)
                s.group_pick.push_back(static_cast<int>(gen() % group.size()));
            for (size_t f = 0; f < gp.free_decisions.size(); ++f)
                s.free_pick.push_back(static_cast<char>(gen() & 1));
            if (is_admissible(gp, s)) return s;
        }
        // dense constraints: fall back to the first admissible strategy
        Strategy s = first_strategy(gp);
        long long tried = 0;
        do {
            if (is_admissible(gp, s)) return s;
        } while (++tried < strategy_cap && advance(gp, s));
        return std::nullopt;
    };

    auto neighbors = [&](const Strategy& s) {
        std::vector<Strategy> out;
        for (size_t g = 0; g < gp.groups.size(); ++g)
            for (size_t alt = 0; alt < gp.groups[g].size(); ++alt) {
                if (static_cast<int>(alt) == s.group_pick[g]) continue;
                Strategy n = s;
                n.group_pick[g] = static_cast<int>(alt);
                if (is_admissible(gp, n)) out.push_back(std::move(n));
            }
        for (size_t f = 0; f < s.free_pick.size(); ++f) {
            Strategy n = s;
            n.free_pick[f] = !n.free_pick[f];
            if (is_admissible(gp, n)) out.push_back(std::move(n));
        }
        return out;
    };

    bool found = false;
    for (int restart = 0; restart < std::max(1, restarts); ++restart) {
        std::optional<Strategy> start = random_strategy();
        if (!start)
            throw Error(ErrorKind::Semantic,
                        "no admissible strategy: every assignment violates a constraint");
        Strategy current = *start;
        EUReport current_report = eval.report(current);
        ++solution.explored;
        for (int step = 0; step < max_steps; ++step) {
            EUReport best_neighbor;
            bool improved = false;
            for (const Strategy& n : neighbors(current)) {
                EUReport r = eval.report(n);
                ++solution.explored;
                if (r.total > current_report.total + 1e-12 &&
                    (!improved || r.total > best_neighbor.total)) {
                    best_neighbor = r;
                    improved = true;
                }
            }
            if (!improved) break;
            current = best_neighbor.strategy;
            current_report = best_neighbor;
        }
        if (!found || current_report.total > solution.best.total) {
            solution.best = current_report;
            found = true;
        }
    }
    return solution;
}

BoundsReport verify_bounds(const GroundProgram& gp, EngineMode mode, long long strategy_cap,
                           long long world_cap) {
    Evaluator eval(gp, mode, world_cap);
    BoundsReport bounds;
    bool found = false;
    for_each_admissible(gp, strategy_cap, [&](const Strategy& s) {
        EUReport report = eval.report(s);
        if (!found || report.total < bounds.min_report.total) bounds.min_report = report;
        if (!found || report.total > bounds.max_report.total) bounds.max_report = report;
        found = true;
    });
    if (!found)
        throw Error(ErrorKind::Semantic,
                    "no admissible strategy: every assignment violates a constraint");
    return bounds;
}

GuaranteeVerdict check_guarantee(const GroundProgram& gp, double threshold, EngineMode mode,
                                 long long strategy_cap, long long world_cap) {
    GuaranteeVerdict verdict;
    verdict.threshold = threshold;
    verdict.bounds = verify_bounds(gp, mode, strategy_cap, world_cap);
    verdict.holds = verdict.bounds.min_report.total >= threshold;
    return verdict;
}

} // namespace ddtep
