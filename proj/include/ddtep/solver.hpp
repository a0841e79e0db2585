#pragma once

#include <cstdint>

#include "ddtep/engine.hpp"

namespace ddtep {

inline constexpr long long kDefaultStrategyCap = 1LL << 20;

enum class EngineMode { Oracle, Circuit };

struct StrategySpace {
    std::vector<int> group_sizes;
    int free_count = 0;

    long double raw_count() const {
        long double n = 1.0L;
        for (int size : group_sizes) n *= size;
        for (int i = 0; i < free_count; ++i) n *= 2.0L;
        return n;
    }
};

StrategySpace strategy_space(const GroundProgram& gp);

/// Every admissible strategy, canonical order (groups as most-significant
/// odometer digits, then free decisions, false before true).
std::vector<Strategy> enumerate_strategies(const GroundProgram& gp,
                                           long long cap = kDefaultStrategyCap);

struct Solution {
    EUReport best;
    long long explored = 0;
    std::string method = "exhaustive";
    bool certified = false;
    // Strategies whose EU is within 1e-9 of the best (exhaustive runs only),
    // canonical order, best first.
    std::vector<std::pair<Strategy, double>> ties;
};

struct BoundsReport {
    EUReport min_report;
    EUReport max_report;
};

struct GuaranteeVerdict {
    bool holds = false;
    double threshold = 0.0;
    BoundsReport bounds; // counterexample on failure = bounds.min_report
};

Solution solve_exhaustive(const GroundProgram& gp, EngineMode mode = EngineMode::Circuit,
                          long long strategy_cap = kDefaultStrategyCap,
                          long long world_cap = kDefaultWorldCap);

Solution solve_local(const GroundProgram& gp, uint64_t seed, int restarts = 4,
                     int max_steps = 256, EngineMode mode = EngineMode::Circuit,
                     long long strategy_cap = kDefaultStrategyCap,
                     long long world_cap = kDefaultWorldCap);

BoundsReport verify_bounds(const GroundProgram& gp, EngineMode mode = EngineMode::Circuit,
                           long long strategy_cap = kDefaultStrategyCap,
                           long long world_cap = kDefaultWorldCap);

GuaranteeVerdict check_guarantee(const GroundProgram& gp, double threshold,
                                 EngineMode mode = EngineMode::Circuit,
                                 long long strategy_cap = kDefaultStrategyCap,
                                 long long world_cap = kDefaultWorldCap);

} // namespace ddtep
