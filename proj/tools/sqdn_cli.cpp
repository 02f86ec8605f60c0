// sqdn: command-line front end.
//
//   sqdn <verb> [--config FILE] [flags]
//
// Verbs: simulate, fluid, fixed-point, thresholds, experiment, compare.
// Exit status: 0 success, 1 configuration error, 2 internal consistency failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sqdn/analysis.hpp"
#include "sqdn/config.hpp"
#include "sqdn/equilibrium.hpp"
#include "sqdn/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sqdn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitConsistency = 2;

struct Flags {
    std::string config_path;
    std::string out_dir;
    std::string experiment;
    int threads = 0;
    json overrides = json::object();
};

// Registers a flag whose value, when given, lands in `overrides` under `key`.
template <typename T>
void add_override(CLI::App* app, Flags& flags, const std::string& names, const std::string& key, const std::string& help) {
    app->add_option_function<T>(names, [&flags, key](const T& v) { flags.overrides[key] = v; }, help);
}

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
    add_override<double>(app, f, "--lambda", "lambda", "arrival rate per server, in (0, 1)");
    add_override<int>(app, f, "--d", "d", "number of servers sampled per arrival");
    add_override<int>(app, f, "--buffer", "buffer", "buffer size I");
}

void add_sim(CLI::App* app, Flags& f) {
    add_override<int>(app, f, "--n,--n-servers", "n_servers", "number of servers N");
    add_override<double>(app, f, "--horizon", "horizon", "simulated time horizon");
    add_override<std::uint64_t>(app, f, "--seed", "seed", "base seed");
    add_override<double>(app, f, "--sample-every", "sample_every", "stochastic sampling interval");
    add_override<std::string>(app, f, "--departure-mode", "departure_mode", "per-busy-server | potential-departure");
    app->add_option_function<std::string>(
        "--policy", [&f](const std::string& v) { f.overrides["policy"]["kind"] = v; },
        "sqdn-memory | sqd-classic | random | jsq");
    app->add_option_function<std::string>(
        "--replacement", [&f](const std::string& v) { f.overrides["policy"]["replacement"] = v; }, "with | without");
    app->add_option_function<std::string>(
        "--order", [&f](const std::string& v) { f.overrides["policy"]["order"] = v; },
        "sample-then-assign | assign-then-sample");
    app->add_option_function<std::string>(
        "--tiebreak", [&f](const std::string& v) { f.overrides["policy"]["tiebreak"] = v; }, "uniform | oldest-timer");
}

void add_fluid(CLI::App* app, Flags& f) {
    add_override<double>(app, f, "--dt", "dt", "integrator step");
    add_override<double>(app, f, "--t-end", "t_end", "integration horizon");
    add_override<double>(app, f, "--fluid-sample-every", "fluid_sample_every", "fluid sampling interval");
    add_override<std::string>(app, f, "--scheme", "scheme", "euler | rk4");
    add_override<std::string>(app, f, "--projection", "projection", "clip-renormalize | none");
}

void add_out(CLI::App* app, Flags& f) {
    app->add_option("--out", f.out_dir, "output directory (default: $SQDN_OUT_DIR or ./sqdn-out)");
}

RunConfig resolve(const Flags& f, bool fixed_point_verb) {
    RunConfig cfg = f.config_path.empty() ? RunConfig{} : load_config(f.config_path);
    const std::string origin = f.config_path.empty() ? "command line" : f.config_path + " + command line";
    try {
        apply_json(cfg, f.overrides);
        cfg.validate(fixed_point_verb);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(fmt::format("{}: {}", origin, e.what()));
    }
    return cfg;
}

fs::path output_dir(const Flags& f) {
    fs::path dir;
    if (!f.out_dir.empty()) {
        dir = f.out_dir;
    } else if (const char* env = std::getenv("SQDN_OUT_DIR"); env && *env) {
        dir = env;
    } else {
        dir = "sqdn-out";
    }
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

void write_manifest(const fs::path& dir, const std::string& verb, const RunConfig& cfg,
                    const std::vector<std::string>& files, const json& seeds) {
    json m;
    m["verb"] = verb;
    m["config"] = to_json(cfg);
    m["files"] = files;
    m["seeds"] = seeds;
    auto os = open_out(dir / "manifest.json");
    os << m.dump(2) << '\n';
}

io::Metadata header(const std::string& verb, const RunConfig& cfg) {
    return {{"verb", verb}, {"config", to_json(cfg).dump()}};
}

int run_simulate(const Flags& f) {
    const RunConfig cfg = resolve(f, false);
    const auto dir = output_dir(f);
    const auto traj = simulate(cfg.sim);
    auto meta = header("simulate", cfg);
    meta["seed"] = std::to_string(cfg.sim.seed);
    {
        auto os = open_out(dir / "sim_occupancy.csv");
        io::write_occupancy_csv(os, traj, meta);
    }
    {
        auto os = open_out(dir / "sim_summary.csv");
        io::write_sim_summary_csv(os, traj, meta);
    }
    write_manifest(dir, "simulate", cfg, {"sim_occupancy.csv", "sim_summary.csv"}, json::array({cfg.sim.seed}));
    const auto mf = traj.samples.back().functionals();
    std::cout << fmt::format("t={} L_S={} L_M={} blocked_frac={}\n", traj.times.back(), mf.ls, mf.lm,
                             traj.samples.back().blocked_fraction());
    return kExitOk;
}

int run_fluid(const Flags& f) {
    const RunConfig cfg = resolve(f, false);
    const auto dir = output_dir(f);
    const FluidState x0 = cfg.initial_state ? *cfg.initial_state : FluidState::all_idle(cfg.params().buffer);
    const auto traj = integrate(x0, cfg.params(), cfg.fluid);

    std::optional<FluidState> target;
    try {
        target = fixed_point(cfg.params()).fixed_point;
    } catch (const InvalidArgument&) {
        // boundary load or buffer too small for a fixed point: distance column stays nan
    }
    auto meta = header("fluid", cfg);
    {
        auto os = open_out(dir / "fluid_trajectory.csv");
        io::write_trajectory_csv(os, traj, meta);
    }
    {
        auto os = open_out(dir / "fluid_summary.csv");
        io::write_fluid_summary_csv(os, traj, target, meta);
    }
    write_manifest(dir, "fluid", cfg, {"fluid_trajectory.csv", "fluid_summary.csv"}, json::array());
    const auto mf = mass_functionals(traj.states.back());
    std::cout << fmt::format("t={} L_S={} L_M={}", traj.times.back(), mf.ls, mf.lm);
    if (target) std::cout << fmt::format(" dist_to_fixed_point={}", euclidean_distance(traj.states.back(), *target));
    std::cout << '\n';
    return kExitOk;
}

int run_fixed_point(const Flags& f) {
    const RunConfig cfg = resolve(f, true);
    const auto rep = fixed_point(cfg.params());
    std::cout << io::equilibrium_to_json(rep).dump() << '\n';
    return kExitOk;
}

int run_thresholds(const Flags& f) {
    const RunConfig cfg = resolve(f, false);
    std::cout << "n,lambda_star\n";
    for (int n = 0; n <= cfg.n_max; ++n) {
        std::cout << n << ',' << io::num(lambda_star(n, cfg.params().d)) << '\n';
    }
    return kExitOk;
}

int run_experiment_verb(const Flags& f) {
    const RunConfig cfg = resolve(f, false);
    ExperimentOptions opts;
    opts.seed = cfg.sim.seed;
    opts.replications = cfg.replications;
    opts.buffer = cfg.params().buffer;
    opts.dt = cfg.fluid.dt;
    opts.threads = f.threads;
    const auto art = run_experiment(f.experiment, opts, output_dir(f));
    for (const auto& p : art.files) std::cout << p.string() << '\n';
    std::cout << art.manifest.string() << '\n';
    return kExitOk;
}

int run_compare(const Flags& f) {
    const RunConfig cfg = resolve(f, false);
    const auto dir = output_dir(f);
    std::vector<PolicySpec> policies;
    for (auto kind : {PolicyKind::sqdn_memory, PolicyKind::sqd_classic, PolicyKind::random, PolicyKind::jsq}) {
        PolicySpec p = cfg.sim.policy;
        p.kind = kind;
        if (kind != PolicyKind::sqdn_memory) p.tiebreak = TieBreak::uniform;
        policies.push_back(p);
    }
    CompareOptions co;
    co.replications = cfg.replications;
    co.warmup = cfg.warmup;
    co.threads = f.threads;
    const auto rows = compare_policies(cfg.sim, policies, co);

    const auto meta = header("compare", cfg);
    {
        auto os = open_out(dir / "compare.csv");
        io::write_metadata(os, meta);
        os << "policy,mean_L_S,ci_L_S,blocked_frac,ci_blocked,idle_assign_frac,ci_idle_assign\n";
        for (const auto& r : rows) {
            os << r.policy.label() << ',' << io::num(r.ls.mean) << ',' << io::num(r.ls.half_width) << ','
               << io::num(r.blocked.mean) << ',' << io::num(r.blocked.half_width) << ','
               << io::num(r.idle_assign.mean) << ',' << io::num(r.idle_assign.half_width) << '\n';
        }
    }
    json seeds = json::array();
    {
        auto os = open_out(dir / "compare_replications.csv");
        io::write_metadata(os, meta);
        os << "policy,seed,mean_L_S,blocked_frac,idle_assign_frac\n";
        for (const auto& r : rows) {
            for (const auto& x : r.replications) {
                os << r.policy.label() << ',' << x.seed << ',' << io::num(x.mean_ls) << ','
                   << io::num(x.blocked_fraction) << ',' << io::num(x.idle_assign_fraction) << '\n';
            }
        }
        for (const auto& x : rows.front().replications) seeds.push_back(x.seed);
    }
    write_manifest(dir, "compare", cfg, {"compare.csv", "compare_replications.csv"}, seeds);
    for (const auto& r : rows) {
        std::cout << fmt::format("{:<40} L_S={:.6f} +- {:.6f}  idle_assign={:.4f}\n", r.policy.label(), r.ls.mean,
                                 r.ls.half_width, r.idle_assign.mean);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power-of-d-choices with memory: fluid model, fixed point and simulator"};
    app.require_subcommand(1);
    Flags flags;

    auto* sim = app.add_subcommand("simulate", "run the stochastic N-server system");
    add_common(sim, flags);
    add_sim(sim, flags);
    add_out(sim, flags);

    auto* fluid = app.add_subcommand("fluid", "integrate the fluid ODE");
    add_common(fluid, flags);
    add_fluid(fluid, flags);
    add_out(fluid, flags);

    auto* fp = app.add_subcommand("fixed-point", "print the fluid fixed point as JSON");
    add_common(fp, flags);

    auto* th = app.add_subcommand("thresholds", "print lambda_n* for n = 0..n_max");
    add_common(th, flags);
    add_override<int>(th, flags, "--n-max", "n_max", "largest n");

    auto* ex = app.add_subcommand("experiment", "run a named experiment");
    add_common(ex, flags);
    add_override<std::uint64_t>(ex, flags, "--seed", "seed", "base seed");
    add_override<int>(ex, flags, "--replications", "replications", "replications per case");
    add_override<double>(ex, flags, "--dt", "dt", "integrator step");
    ex->add_option("--name", flags.experiment, "experiment name")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
    ex->add_option("--threads", flags.threads, "worker threads (0 = all cores)");
    add_out(ex, flags);

    auto* cmp = app.add_subcommand("compare", "compare dispatch policies with common random numbers");
    add_common(cmp, flags);
    add_sim(cmp, flags);
    add_override<int>(cmp, flags, "--replications", "replications", "replications per policy");
    add_override<double>(cmp, flags, "--warmup", "warmup", "start of the measurement window");
    cmp->add_option("--threads", flags.threads, "worker threads (0 = all cores)");
    add_out(cmp, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
            std::cerr << "sqdn: unknown verb '" << argv[1] << "'\n";
        } else {
            app.exit(e);
        }
        if (app.get_subcommands().empty()) std::cerr << app.help();
        return kExitConfig;
    }

    try {
        if (sim->parsed()) return run_simulate(flags);
        if (fluid->parsed()) return run_fluid(flags);
        if (fp->parsed()) return run_fixed_point(flags);
        if (th->parsed()) return run_thresholds(flags);
        if (ex->parsed()) return run_experiment_verb(flags);
        if (cmp->parsed()) return run_compare(flags);
    } catch (const ConsistencyError& e) {
        std::cerr << "sqdn: consistency failure: " << e.what() << '\n';
        return kExitConsistency;
    } catch (const IntegrationError& e) {
        std::cerr << "sqdn: integration failure: " << e.what() << '\n';
        return kExitConsistency;
    } catch (const std::exception& e) {
        std::cerr << "sqdn: " << e.what() << '\n';
        return kExitConfig;
    }
    std::cerr << app.help();
    return kExitConfig;
}
