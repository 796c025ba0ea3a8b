#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "mmv/closed_form.hpp"
#include "mmv/cone.hpp"
#include "mmv/market.hpp"
#include "mmv/simulation.hpp"
#include "mmv/verification.hpp"

namespace mmv {

/// Full run description parsed from the JSON config. Parsing is strict:
/// unknown keys anywhere are a ConfigParseError.
struct RunConfig {
    MarketParams market;
    Preference pref;
    ConstraintSet constraint;
    std::optional<SimConfig> sim;
    std::optional<SaddleCheckConfig> saddle;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json solution_to_json(const ClosedFormSolution& sol);
nlohmann::json report_to_json(const VerificationReport& report);

SimConfig default_sim_config();

}  // namespace mmv
