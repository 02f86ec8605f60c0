#include "sqdn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

#include "sqdn/equilibrium.hpp"
#include "sqdn/io.hpp"

namespace sqdn {

FluidState interpolate(const Trajectory& fluid, double t) {
    if (fluid.states.empty()) throw InvalidArgument("interpolate: empty trajectory");
    const auto& ts = fluid.times;
    if (t <= ts.front()) return fluid.states.front();
    if (t >= ts.back()) return fluid.states.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    const auto lo = hi - 1;
    const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
    FluidState out(fluid.states[lo].buffer());
    auto a = fluid.states[lo].values();
    auto b = fluid.states[hi].values();
    auto o = out.values();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] = (1.0 - w) * a[k] + w * b[k];
    return out;
}

double sup_distance(const SimTrajectory& stoch, const Trajectory& fluid) {
    if (stoch.samples.empty() || fluid.states.empty()) throw InvalidArgument("sup_distance: empty trajectory");
    if (stoch.samples.front().buffer != fluid.states.front().buffer()) {
        throw InvalidArgument(fmt::format("sup_distance: buffer mismatch ({} vs {})", stoch.samples.front().buffer,
                                          fluid.states.front().buffer()));
    }
    const double tol_t = 1e-9 * std::max(1.0, fluid.times.back());
    if (stoch.times.back() > fluid.times.back() + tol_t) {
        throw InvalidArgument(fmt::format("sup_distance: stochastic horizon {} exceeds fluid horizon {}",
                                          stoch.times.back(), fluid.times.back()));
    }
    double sup = 0.0;
    for (std::size_t k = 0; k < stoch.samples.size(); ++k) {
        const auto x = interpolate(fluid, stoch.times[k]);
        sup = std::max(sup, euclidean_distance(stoch.samples[k].as_state(), x));
    }
    return sup;
}

DecayFit fit_decay_rate(std::span<const std::pair<double, double>> series, double t_lo, double t_hi) {
    std::vector<double> ts, ys;
    for (const auto& [t, v] : series) {
        if (t < t_lo || t > t_hi) continue;
        if (!(v > 0.0)) {
            throw InvalidArgument(fmt::format("fit_decay_rate: nonpositive value {} at t={}; shrink the window", v, t));
        }
        ts.push_back(t);
        ys.push_back(std::log(v));
    }
    if (ts.size() < 2) {
        throw InvalidArgument(fmt::format("fit_decay_rate: fewer than two samples in [{}, {}]", t_lo, t_hi));
    }
    const double n = static_cast<double>(ts.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        mt += ts[k];
        my += ys[k];
    }
    mt /= n;
    my /= n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        stt += (ts[k] - mt) * (ts[k] - mt);
        sty += (ts[k] - mt) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    const double slope = sty / stt;
    DecayFit fit;
    fit.beta_hat = -slope;
    fit.alpha_hat = std::exp(my - slope * mt);
    // Perfect fit when log values carry no variance or residuals vanish.
    const double ss_res = std::max(0.0, syy - slope * sty);
    fit.r_squared = syy <= 1e-300 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    fit.t_lo = ts.front();
    fit.t_hi = ts.back();
    return fit;
}

std::pair<double, double> post_liftoff_window(const Trajectory& traj, std::span<const std::pair<double, double>> dist,
                                              double burn, double floor) {
    double last_zero = -burn;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        if (traj.states[k](0, 0) <= tol::zero) last_zero = traj.times[k];
    }
    const double t_lo = std::max(0.0, last_zero) + burn;
    double t_hi = t_lo;
    for (const auto& [t, v] : dist) {
        if (v > floor) t_hi = std::max(t_hi, t);
    }
    return {t_lo, t_hi};
}

// ---------------------------------------------------------------------------
// experiments

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json params_json(const ModelParams& p) { return {{"lambda", p.lambda}, {"d", p.d}, {"buffer", p.buffer}}; }

class ArtifactWriter {
public:
    ArtifactWriter(std::string name, fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
        out_.name = std::move(name);
        manifest_["experiment"] = out_.name;
        manifest_["files"] = json::array();
    }

    std::ofstream open(const std::string& file) {
        out_.files.push_back(dir_ / file);
        manifest_["files"].push_back(file);
        std::ofstream os(dir_ / file);
        if (!os) throw std::runtime_error("cannot write " + (dir_ / file).string());
        os << "# experiment: " << out_.name << '\n';
        return os;
    }

    json& manifest() { return manifest_; }

    ExperimentArtifacts finish() {
        out_.manifest = dir_ / "manifest.json";
        std::ofstream os(out_.manifest);
        os << manifest_.dump(2) << '\n';
        return out_;
    }

private:
    fs::path dir_;
    ExperimentArtifacts out_;
    json manifest_;
};

std::vector<std::uint64_t> seed_ladder(const ExperimentOptions& opts) {
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < opts.replications; ++r) seeds.push_back(replication_seed(opts.seed, static_cast<std::uint64_t>(r)));
    return seeds;
}

Trajectory fluid_from_idle(const ModelParams& p, double t_end, const ExperimentOptions& opts, double sample_every) {
    IntegratorConfig cfg;
    cfg.dt = opts.dt;
    cfg.t_end = t_end;
    cfg.sample_every = sample_every;
    return integrate(FluidState::all_idle(p.buffer), p, cfg);
}

SimConfig sim_config(const ModelParams& p, int n, double horizon, std::uint64_t seed, double sample_every) {
    SimConfig c;
    c.params = p;
    c.n_servers = n;
    c.horizon = horizon;
    c.seed = seed;
    c.sample_every = sample_every;
    return c;
}

ExperimentArtifacts fig3_left(const ExperimentOptions& opts, const fs::path& dir) {
    ArtifactWriter w("fig3-left", dir);
    const ModelParams p{0.45, 2, opts.buffer};
    const double horizon = 10.0;
    const double every = 0.1;
    const auto fluid = fluid_from_idle(p, horizon, opts, every);
    const auto seeds = seed_ladder(opts);

    {
        auto os = w.open("fig3_left_fluid.csv");
        os << "t,x00,x01,x11,L_S\n";
        for (std::size_t k = 0; k < fluid.states.size(); ++k) {
            const auto& x = fluid.states[k];
            os << fmt::format("{:.12g}", fluid.times[k]) << ',' << io::num(x(0, 0)) << ',' << io::num(x(0, 1)) << ','
               << io::num(x(1, 1)) << ',' << io::num(mass_functionals(x).ls) << '\n';
        }
    }

    auto mean_os = w.open("fig3_left_stochastic.csv");
    mean_os << "N,t,x00,x01,x11,L_S\n";
    auto dist_os = w.open("fig3_left_distance.csv");
    dist_os << "N,seed,sup_distance,terminal_x00_x01_x11\n";
    json dist_summary = json::object();
    for (int n : {100, 1000}) {
        std::vector<SimTrajectory> runs;
        for (auto s : seeds) runs.push_back(simulate(sim_config(p, n, horizon, s, every)));
        double mean_dist = 0.0;
        for (const auto& run : runs) {
            const double dist = sup_distance(run, fluid);
            const auto& last = run.samples.back();
            mean_dist += dist / static_cast<double>(runs.size());
            dist_os << n << ',' << run.config.seed << ',' << io::num(dist) << ','
                    << io::num(last.value(0, 0) + last.value(0, 1) + last.value(1, 1)) << '\n';
        }
        dist_summary[std::to_string(n)] = mean_dist;
        for (std::size_t k = 0; k < runs.front().times.size(); ++k) {
            double x00 = 0, x01 = 0, x11 = 0, ls = 0;
            for (const auto& run : runs) {
                const auto& occ = run.samples[k];
                x00 += occ.value(0, 0);
                x01 += occ.value(0, 1);
                x11 += occ.value(1, 1);
                ls += occ.functionals().ls;
            }
            const double m = static_cast<double>(runs.size());
            mean_os << n << ',' << fmt::format("{:.12g}", runs.front().times[k]) << ',' << io::num(x00 / m) << ','
                    << io::num(x01 / m) << ',' << io::num(x11 / m) << ',' << io::num(ls / m) << '\n';
        }
    }
    const auto& xt = fluid.states.back();
    w.manifest()["config"] = {{"params", params_json(p)}, {"horizon", horizon}, {"sample_every", every},
                              {"dt", opts.dt},          {"n_servers", {100, 1000}}, {"initial", "all-idle"}};
    w.manifest()["seeds"] = seeds;
    w.manifest()["results"] = {{"terminal_fluid", {{"x00", xt(0, 0)}, {"x01", xt(0, 1)}, {"x11", xt(1, 1)}}},
                               {"mean_sup_distance", dist_summary}};
    return w.finish();
}

ExperimentArtifacts fig3_right(const ExperimentOptions& opts, const fs::path& dir) {
    ArtifactWriter w("fig3-right", dir);
    const ModelParams p{0.9, 2, opts.buffer};
    const int n = 1000;
    const double horizon = 10.0;
    const double every = 0.1;
    const double threshold = 0.15;
    const auto fluid = fluid_from_idle(p, horizon, opts, every);
    const auto seeds = seed_ladder(opts);
    std::vector<SimTrajectory> runs;
    for (auto s : seeds) runs.push_back(simulate(sim_config(p, n, horizon, s, every)));

    auto os = w.open("fig3_right.csv");
    os << "t,L_S_fluid,L_S_stochastic\n";
    double gap = 0.0;
    double ls_min = 1e300, ls_max = -1e300;
    for (std::size_t k = 0; k < runs.front().times.size(); ++k) {
        const double t = runs.front().times[k];
        double ls = 0.0;
        for (const auto& run : runs) ls += run.samples[k].functionals().ls;
        ls /= static_cast<double>(runs.size());
        const double lf = mass_functionals(interpolate(fluid, t)).ls;
        gap = std::max(gap, std::abs(ls - lf));
        ls_min = std::min(ls_min, lf);
        ls_max = std::max(ls_max, lf);
        os << fmt::format("{:.12g}", t) << ',' << io::num(lf) << ',' << io::num(ls) << '\n';
    }
    w.manifest()["config"] = {{"params", params_json(p)}, {"horizon", horizon}, {"sample_every", every},
                              {"dt", opts.dt},          {"n_servers", n},     {"initial", "all-idle"}};
    w.manifest()["seeds"] = seeds;
    w.manifest()["results"] = {{"max_abs_gap_L_S", gap},
                               {"threshold", threshold},
                               {"within_threshold", gap <= threshold},
                               {"L_S_fluid_range", {ls_min, ls_max}}};
    return w.finish();
}

ExperimentArtifacts jstar_sweep(const ExperimentOptions&, const fs::path& dir) {
    ArtifactWriter w("jstar-sweep", dir);
    std::vector<double> grid;
    for (int k = 1; k <= 19; ++k) grid.push_back(k / 20.0);
    for (double v : {0.96, 0.97, 0.98, 0.99, 0.995, 0.999}) grid.push_back(v);
    auto os = w.open("jstar_sweep.csv");
    os << "lambda,d,jstar,max_queue,interval_index\n";
    for (int d = 2; d <= 5; ++d) {
        for (double lam : grid) {
            const int js = j_star({lam, d, 2});
            os << io::num(lam) << ',' << d << ',' << js << ',' << js + 1 << ',' << threshold_interval(lam, d) << '\n';
        }
    }
    w.manifest()["config"] = {{"lambda_grid", grid}, {"d", {2, 3, 4, 5}}};
    return w.finish();
}

ExperimentArtifacts stability_sweep(const ExperimentOptions& opts, const fs::path& dir) {
    ArtifactWriter w("stability-sweep", dir);
    const double t_end = 20.0;
    auto os = w.open("stability_sweep.csv");
    os << "lambda,d,beta_hat,alpha_hat,r_squared,t_lo,t_hi,dist_t_end\n";
    json cases = json::array();
    for (int d = 2; d <= 4; ++d) {
        const double crit = 1.0 - 1.0 / d;
        for (double frac : {0.2, 0.4, 0.6, 0.8, 0.9}) {
            const ModelParams p{frac * crit, d, opts.buffer};
            const auto fluid = fluid_from_idle(p, t_end, opts, 0.1);
            const auto target = fixed_point(p).fixed_point;
            const auto dist = distance_to(fluid, target);
            const auto [lo, hi] = post_liftoff_window(fluid, dist);
            const auto fit = fit_decay_rate(dist, lo, hi);
            os << io::num(p.lambda) << ',' << d << ',' << io::num(fit.beta_hat) << ',' << io::num(fit.alpha_hat) << ','
               << io::num(fit.r_squared) << ',' << io::num(fit.t_lo) << ',' << io::num(fit.t_hi) << ','
               << io::num(dist.back().second) << '\n';
            cases.push_back(params_json(p));
        }
    }
    w.manifest()["config"] = {{"cases", cases}, {"t_end", t_end}, {"dt", opts.dt}, {"initial", "all-idle"}};
    return w.finish();
}

ExperimentArtifacts policy_compare(const ExperimentOptions& opts, const fs::path& dir) {
    ArtifactWriter w("policy-compare", dir);
    SimConfig base = sim_config({0.45, 2, opts.buffer}, 500, 60.0, opts.seed, 1.0);
    CompareOptions co;
    co.replications = opts.replications;
    co.warmup = 20.0;
    co.threads = opts.threads;
    std::vector<PolicySpec> policies(7);
    policies[1].kind = PolicyKind::sqd_classic;
    policies[2].kind = PolicyKind::random;
    policies[3].kind = PolicyKind::jsq;
    policies[4].replacement = Replacement::without;
    policies[5].tiebreak = TieBreak::oldest_timer;
    policies[6].order = Order::assign_then_sample;
    const auto rows = compare_policies(base, policies, co);

    auto os = w.open("policy_compare.csv");
    os << "policy,mean_L_S,ci_L_S,blocked_frac,ci_blocked,idle_assign_frac,ci_idle_assign\n";
    for (const auto& r : rows) {
        os << r.policy.label() << ',' << io::num(r.ls.mean) << ',' << io::num(r.ls.half_width) << ','
           << io::num(r.blocked.mean) << ',' << io::num(r.blocked.half_width) << ',' << io::num(r.idle_assign.mean)
           << ',' << io::num(r.idle_assign.half_width) << '\n';
    }
    auto rep = w.open("policy_compare_replications.csv");
    rep << "policy,seed,mean_L_S,blocked_frac,idle_assign_frac\n";
    for (const auto& r : rows) {
        for (const auto& x : r.replications) {
            rep << r.policy.label() << ',' << x.seed << ',' << io::num(x.mean_ls) << ',' << io::num(x.blocked_fraction)
                << ',' << io::num(x.idle_assign_fraction) << '\n';
        }
    }
    w.manifest()["config"] = {{"params", params_json(base.params)}, {"n_servers", base.n_servers},
                              {"horizon", base.horizon},            {"warmup", co.warmup},
                              {"replications", co.replications},    {"departure_mode", to_string(base.departure_mode)}};
    w.manifest()["seeds"] = seed_ladder(opts);
    return w.finish();
}

}  // namespace

ExperimentArtifacts run_experiment(const std::string& name, const ExperimentOptions& opts, const fs::path& out_dir) {
    if (opts.replications < 1) throw InvalidArgument("replications must be >= 1");
    if (name == "fig3-left") return fig3_left(opts, out_dir);
    if (name == "fig3-right") return fig3_right(opts, out_dir);
    if (name == "jstar-sweep") return jstar_sweep(opts, out_dir);
    if (name == "stability-sweep") return stability_sweep(opts, out_dir);
    if (name == "policy-compare") return policy_compare(opts, out_dir);
    throw InvalidArgument("unknown experiment '" + name + "'");
}

}  // namespace sqdn
