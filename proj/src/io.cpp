#include "sqdn/io.hpp"

#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <sstream>

namespace sqdn::io {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{}", v);
}

namespace {

std::string time_str(double t) { return fmt::format("{:.12g}", t); }

}  // namespace

void write_metadata(std::ostream& os, const Metadata& meta) {
    for (const auto& [k, v] : meta) {
        os << "# " << k << ": " << v << '\n';
    }
}

void write_state_csv(std::ostream& os, const FluidState& x) {
    os << "i,j,value\n";
    for (int i = 0; i <= x.buffer(); ++i) {
        for (int j = i; j <= x.buffer(); ++j) {
            os << i << ',' << j << ',' << num(x(i, j)) << '\n';
        }
    }
}

FluidState read_state_csv(std::istream& is) {
    struct Entry {
        int i, j;
        double v;
    };
    std::vector<Entry> entries;
    std::string line;
    int line_no = 0;
    int cap = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.rfind("i,", 0) == 0) continue;
        Entry e{};
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> e.i >> c1 >> e.j >> c2 >> e.v) || c1 != ',' || c2 != ',') {
            throw InvalidArgument(fmt::format("state csv line {}: expected 'i,j,value', got '{}'", line_no, line));
        }
        if (e.i < 0 || e.j < e.i) {
            throw InvalidArgument(fmt::format("state csv line {}: index ({}, {}) outside i <= j", line_no, e.i, e.j));
        }
        cap = std::max(cap, e.j);
        entries.push_back(e);
    }
    if (entries.empty()) throw InvalidArgument("state csv: no entries");
    FluidState x(std::max(cap, 1));
    for (const auto& e : entries) x(e.i, e.j) = e.v;
    return x;
}

nlohmann::json state_to_json(const FluidState& x) {
    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i <= x.buffer(); ++i) {
        for (int j = i; j <= x.buffer(); ++j) {
            if (x(i, j) != 0.0) entries.push_back({i, j, x(i, j)});
        }
    }
    return {{"I", x.buffer()}, {"entries", entries}};
}

FluidState state_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("I") || !j.contains("entries")) {
        throw InvalidArgument("fluid state json: expected object with fields 'I' and 'entries'");
    }
    const int cap = j.at("I").get<int>();
    if (cap < 1) throw InvalidArgument(fmt::format("fluid state json: I must be >= 1, got {}", cap));
    FluidState x(cap);
    for (const auto& e : j.at("entries")) {
        if (!e.is_array() || e.size() != 3) throw InvalidArgument("fluid state json: entries must be [i, j, value]");
        const int r = e[0].get<int>();
        const int c = e[1].get<int>();
        if (r < 0 || c < r || c > cap) {
            throw InvalidArgument(fmt::format("fluid state json: entry ({}, {}) outside 0 <= i <= j <= {}", r, c, cap));
        }
        x(r, c) = e[2].get<double>();
    }
    return x;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Metadata& meta) {
    write_metadata(os, meta);
    os << "t,i,j,value\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto& x = traj.states[k];
        const auto t = time_str(traj.times[k]);
        for (int i = 0; i <= x.buffer(); ++i) {
            for (int j = i; j <= x.buffer(); ++j) {
                os << t << ',' << i << ',' << j << ',' << num(x(i, j)) << '\n';
            }
        }
    }
}

void write_fluid_summary_csv(std::ostream& os, const Trajectory& traj, const std::optional<FluidState>& fixed_point,
                             const Metadata& meta) {
    write_metadata(os, meta);
    os << "t,L_S,L_M,x00,dist_to_fixed_point\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto& x = traj.states[k];
        const auto mf = mass_functionals(x);
        const double dist = fixed_point ? euclidean_distance(x, *fixed_point) : std::nan("");
        os << time_str(traj.times[k]) << ',' << num(mf.ls) << ',' << num(mf.lm) << ',' << num(x(0, 0)) << ','
           << num(dist) << '\n';
    }
}

void write_occupancy_csv(std::ostream& os, const SimTrajectory& traj, const Metadata& meta) {
    write_metadata(os, meta);
    os << "t,i,j,value\n";
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& occ = traj.samples[k];
        const auto t = time_str(traj.times[k]);
        for (int i = 0; i <= occ.buffer; ++i) {
            for (int j = i; j <= occ.buffer; ++j) {
                os << t << ',' << i << ',' << j << ',' << num(occ.value(i, j)) << '\n';
            }
        }
    }
}

void write_sim_summary_csv(std::ostream& os, const SimTrajectory& traj, const Metadata& meta) {
    write_metadata(os, meta);
    os << "t,L_S,L_M,blocked_frac,idle_assign_frac\n";
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& occ = traj.samples[k];
        const auto mf = occ.functionals();
        os << time_str(traj.times[k]) << ',' << num(mf.ls) << ',' << num(mf.lm) << ',' << num(occ.blocked_fraction())
           << ',' << num(occ.idle_assign_fraction()) << '\n';
    }
}

nlohmann::json equilibrium_to_json(const EquilibriumReport& rep) {
    nlohmann::json support = nlohmann::json::array();
    const auto& x = rep.fixed_point;
    for (int i = 0; i <= x.buffer(); ++i) {
        for (int j = i; j <= x.buffer(); ++j) {
            if (x(i, j) != 0.0) support.push_back({i, j, x(i, j)});
        }
    }
    nlohmann::json out;
    out["lambda"] = rep.params.lambda;
    out["d"] = rep.params.d;
    out["jstar"] = rep.jstar;
    out["x_jj"] = rep.x_jj ? nlohmann::json(*rep.x_jj) : nlohmann::json(nullptr);
    out["L_S"] = rep.ls;
    out["L_M"] = rep.lm;
    out["residual"] = rep.residual;
    out["support"] = support;
    return out;
}

}  // namespace sqdn::io
