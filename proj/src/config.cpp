#include "sqdn/config.hpp"

#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "sqdn/equilibrium.hpp"
#include "sqdn/io.hpp"

namespace sqdn {

using nlohmann::json;

RunConfig::RunConfig() {
    sim.params = ModelParams{0.5, 2, 20};
    sim.n_servers = 1000;
    sim.horizon = 10.0;
    sim.seed = 0;
    fluid.dt = 1e-3;
    fluid.t_end = 10.0;
}

void RunConfig::validate(bool fixed_point_verb) const {
    sim.validate();
    fluid.validate();
    if (replications < 1) throw InvalidArgument(fmt::format("replications must be >= 1, got {}", replications));
    if (!(warmup >= 0.0 && warmup < sim.horizon)) {
        throw InvalidArgument(fmt::format("warmup must lie in [0, horizon = {}), got {}", sim.horizon, warmup));
    }
    if (n_max < 0) throw InvalidArgument(fmt::format("n_max must be >= 0, got {}", n_max));
    if (initial_state) {
        if (initial_state->buffer() != sim.params.buffer) {
            throw InvalidArgument(fmt::format("initial_state: I = {} does not match buffer = {}", initial_state->buffer(),
                                              sim.params.buffer));
        }
        if (auto why = initial_state->violation(); !why.empty()) throw InvalidArgument("initial_state: " + why);
    }
    if (fixed_point_verb) {
        const int js = j_star(sim.params);
        if (sim.params.buffer <= js + 1) {
            throw InvalidArgument(fmt::format("buffer must exceed j*+1 = {} for lambda={}, d={}; got buffer={}", js + 1,
                                              sim.params.lambda, sim.params.d, sim.params.buffer));
        }
    }
}

namespace {

template <typename T>
T get_field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument(fmt::format("{}: {}", key, e.what()));
    }
}

void check_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        if (!known.contains(k)) throw InvalidArgument(fmt::format("{}unknown field '{}'", where, k));
    }
}

}  // namespace

void apply_json(RunConfig& cfg, const json& j) {
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    check_keys(j,
               {"lambda", "d", "buffer", "n_servers", "horizon", "seed", "departure_mode", "sample_every", "policy",
                "initial_servers", "dt", "t_end", "fluid_sample_every", "scheme", "projection", "replications", "warmup",
                "n_max", "initial_state"},
               "");
    auto& p = cfg.params();
    if (j.contains("lambda")) p.lambda = get_field<double>(j, "lambda");
    if (j.contains("d")) p.d = get_field<int>(j, "d");
    if (j.contains("buffer")) p.buffer = get_field<int>(j, "buffer");
    if (j.contains("n_servers")) cfg.sim.n_servers = get_field<int>(j, "n_servers");
    if (j.contains("horizon")) cfg.sim.horizon = get_field<double>(j, "horizon");
    if (j.contains("seed")) cfg.sim.seed = get_field<std::uint64_t>(j, "seed");
    if (j.contains("departure_mode")) cfg.sim.departure_mode = parse_departure_mode(get_field<std::string>(j, "departure_mode"));
    if (j.contains("sample_every")) cfg.sim.sample_every = get_field<double>(j, "sample_every");
    if (j.contains("policy")) {
        const auto& pj = j.at("policy");
        if (!pj.is_object()) throw InvalidArgument("policy: expected an object");
        check_keys(pj, {"kind", "replacement", "order", "tiebreak"}, "policy: ");
        auto& pol = cfg.sim.policy;
        if (pj.contains("kind")) pol.kind = parse_policy_kind(get_field<std::string>(pj, "kind"));
        if (pj.contains("replacement")) pol.replacement = parse_replacement(get_field<std::string>(pj, "replacement"));
        if (pj.contains("order")) pol.order = parse_order(get_field<std::string>(pj, "order"));
        if (pj.contains("tiebreak")) pol.tiebreak = parse_tiebreak(get_field<std::string>(pj, "tiebreak"));
    }
    if (j.contains("initial_servers")) {
        cfg.sim.initial.clear();
        for (const auto& e : j.at("initial_servers")) {
            if (!e.is_array() || e.size() != 2) throw InvalidArgument("initial_servers: entries must be [q, m]");
            cfg.sim.initial.push_back({e[0].get<int>(), e[1].get<int>(), 0});
        }
    }
    if (j.contains("dt")) cfg.fluid.dt = get_field<double>(j, "dt");
    if (j.contains("t_end")) cfg.fluid.t_end = get_field<double>(j, "t_end");
    if (j.contains("fluid_sample_every")) cfg.fluid.sample_every = get_field<double>(j, "fluid_sample_every");
    if (j.contains("scheme")) cfg.fluid.scheme = parse_scheme(get_field<std::string>(j, "scheme"));
    if (j.contains("projection")) cfg.fluid.projection = parse_projection(get_field<std::string>(j, "projection"));
    if (j.contains("replications")) cfg.replications = get_field<int>(j, "replications");
    if (j.contains("warmup")) cfg.warmup = get_field<double>(j, "warmup");
    if (j.contains("n_max")) cfg.n_max = get_field<int>(j, "n_max");
    if (j.contains("initial_state")) {
        try {
            cfg.initial_state = io::state_from_json(j.at("initial_state"));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(fmt::format("initial_state: {}", e.what()));
        }
    }
}

json to_json(const RunConfig& cfg) {
    const auto& p = cfg.params();
    json j;
    j["lambda"] = p.lambda;
    j["d"] = p.d;
    j["buffer"] = p.buffer;
    j["n_servers"] = cfg.sim.n_servers;
    j["horizon"] = cfg.sim.horizon;
    j["seed"] = cfg.sim.seed;
    j["departure_mode"] = to_string(cfg.sim.departure_mode);
    j["sample_every"] = cfg.sim.sample_every;
    j["policy"] = {{"kind", to_string(cfg.sim.policy.kind)},
                   {"replacement", to_string(cfg.sim.policy.replacement)},
                   {"order", to_string(cfg.sim.policy.order)},
                   {"tiebreak", to_string(cfg.sim.policy.tiebreak)}};
    if (!cfg.sim.initial.empty()) {
        json servers = json::array();
        for (const auto& s : cfg.sim.initial) servers.push_back({s.q, s.m});
        j["initial_servers"] = servers;
    }
    j["dt"] = cfg.fluid.dt;
    j["t_end"] = cfg.fluid.t_end;
    j["fluid_sample_every"] = cfg.fluid.sample_every;
    j["scheme"] = to_string(cfg.fluid.scheme);
    j["projection"] = to_string(cfg.fluid.projection);
    j["replications"] = cfg.replications;
    j["warmup"] = cfg.warmup;
    j["n_max"] = cfg.n_max;
    if (cfg.initial_state) j["initial_state"] = io::state_to_json(*cfg.initial_state);
    return j;
}

RunConfig parse_config(const std::string& text, const std::string& origin, bool fixed_point_verb) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line and column.
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InvalidArgument(fmt::format("{}:{}:{}: parse error: {}", origin, line, col, e.what()));
    }
    RunConfig cfg;
    try {
        apply_json(cfg, j);
        cfg.validate(fixed_point_verb);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(fmt::format("{}: {}", origin, e.what()));
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, bool fixed_point_verb) {
    std::ifstream is(path);
    if (!is) throw InvalidArgument(fmt::format("{}: cannot open config file", path.string()));
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.string(), fixed_point_verb);
}

}  // namespace sqdn
