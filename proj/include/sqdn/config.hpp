#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sqdn/integrator.hpp"
#include "sqdn/simulator.hpp"

namespace sqdn {

/// Everything a CLI verb can be configured with. JSON field names mirror the
/// member names; "lambda", "d" and "buffer" sit at the top level and
/// "policy" is a nested object.
struct RunConfig {
    SimConfig sim;
    IntegratorConfig fluid;
    int replications = 20;
    double warmup = 0.0;
    int n_max = 10;
    std::optional<FluidState> initial_state;  // fluid initial condition; default all-idle

    RunConfig();

    const ModelParams& params() const { return sim.params; }
    ModelParams& params() { return sim.params; }

    /// Field-level and cross-field checks. With fixed_point_verb set, also
    /// requires buffer > j* + 1.
    void validate(bool fixed_point_verb = false) const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Applies the fields present in j on top of cfg. Unknown fields are rejected.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& cfg);

/// Parses and validates a config file. Parse errors carry path, line and column.
RunConfig load_config(const std::filesystem::path& path, bool fixed_point_verb = false);

/// Same as load_config for in-memory text; `origin` labels error messages.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>", bool fixed_point_verb = false);

}  // namespace sqdn
