#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "ddtep/learner.hpp"
#include "ddtep/solver.hpp"

namespace ddtep {

std::string sha256_hex(const std::string& bytes);

/// 9-decimal fixed formatting used for human-readable numbers.
std::string fixed9(double value);

// Machine-readable run report. Field order is stable; absent sections are
// omitted. Documented in the README.
class RunReport {
public:
    RunReport(std::string command, const std::string& program_bytes);

    void set_strategy(const GroundProgram& gp, const Strategy& strategy);
    void set_eu(const EUReport& report);
    void set_solution(const GroundProgram& gp, const Solution& solution);
    void set_bounds(const GroundProgram& gp, const BoundsReport& bounds);
    void set_verdict(const GroundProgram& gp, const GuaranteeVerdict& verdict);
    void set_fit(const FitResult& fit);
    void set_query(const Atom& atom, double probability);
    void set_worlds(nlohmann::ordered_json rows);
    void set_duration_ms(double ms);

    const nlohmann::ordered_json& json() const { return json_; }
    std::string to_json() const { return json_.dump(2); }

    /// Human-readable rendering of the same content.
    std::string to_text() const;

private:
    nlohmann::ordered_json json_;
};

nlohmann::ordered_json strategy_json(const GroundProgram& gp, const Strategy& strategy);

/// Short one-line form, e.g. "run_into_wall" or
/// "ask, informed_bake=true, informed_kill=false".
std::string strategy_text(const GroundProgram& gp, const Strategy& strategy);

} // namespace ddtep
