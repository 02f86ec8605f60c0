#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "sqdn/equilibrium.hpp"
#include "sqdn/integrator.hpp"
#include "sqdn/simulator.hpp"

namespace sqdn::io {

using Metadata = std::map<std::string, std::string>;

/// Writes "# key: value" lines.
void write_metadata(std::ostream& os, const Metadata& meta);

/// "i,j,value" rows with a header line.
void write_state_csv(std::ostream& os, const FluidState& x);
FluidState read_state_csv(std::istream& is);

/// {"I": buffer, "entries": [[i, j, v], ...]} with nonzero entries only.
nlohmann::json state_to_json(const FluidState& x);
FluidState state_from_json(const nlohmann::json& j);

/// Long format "t,i,j,value", every coordinate of every sample.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Metadata& meta = {});
/// "t,L_S,L_M,x00,dist_to_fixed_point"; distance column is "nan" without a fixed point.
void write_fluid_summary_csv(std::ostream& os, const Trajectory& traj, const std::optional<FluidState>& fixed_point,
                             const Metadata& meta = {});

void write_occupancy_csv(std::ostream& os, const SimTrajectory& traj, const Metadata& meta = {});
/// "t,L_S,L_M,blocked_frac,idle_assign_frac" with cumulative fractions.
void write_sim_summary_csv(std::ostream& os, const SimTrajectory& traj, const Metadata& meta = {});

/// {"lambda", "d", "jstar", "x_jj", "L_S", "L_M", "residual", "support": [[i, j, v], ...]}
nlohmann::json equilibrium_to_json(const EquilibriumReport& rep);

/// Shortest representation that parses back to the same double.
std::string num(double v);

}  // namespace sqdn::io
