#include "sqdn/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "sqdn/drift.hpp"

namespace sqdn {

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) {
        throw InvalidArgument(fmt::format("dt must be > 0, got {}", dt));
    }
    if (!(t_end > 0.0)) {
        throw InvalidArgument(fmt::format("t_end must be > 0, got {}", t_end));
    }
    if (!(sample_every >= dt)) {
        throw InvalidArgument(fmt::format("sample_every ({}) must be >= dt ({})", sample_every, dt));
    }
}

const char* to_string(Scheme s) { return s == Scheme::euler ? "euler" : "rk4"; }

const char* to_string(Projection p) { return p == Projection::clip_renormalize ? "clip-renormalize" : "none"; }

Scheme parse_scheme(const std::string& s) {
    if (s == "euler") return Scheme::euler;
    if (s == "rk4") return Scheme::rk4;
    throw InvalidArgument("scheme: unknown value '" + s + "' (expected euler|rk4)");
}

Projection parse_projection(const std::string& s) {
    if (s == "clip-renormalize") return Projection::clip_renormalize;
    if (s == "none") return Projection::none;
    throw InvalidArgument("projection: unknown value '" + s + "' (expected clip-renormalize|none)");
}

namespace {

class Stepper {
public:
    Stepper(const ModelParams& p, Scheme scheme)
        : p_(p), scheme_(scheme), k1_(p.buffer), k2_(p.buffer), k3_(p.buffer), k4_(p.buffer), tmp_(p.buffer) {}

    void step(TriangularArray& x, double h) {
        auto xv = x.values();
        if (scheme_ == Scheme::euler) {
            drift_into(x, p_, k1_);
            auto k = k1_.values();
            for (std::size_t n = 0; n < xv.size(); ++n) xv[n] += h * k[n];
            return;
        }
        auto tv = tmp_.values();
        drift_into(x, p_, k1_);
        auto a = k1_.values();
        for (std::size_t n = 0; n < xv.size(); ++n) tv[n] = xv[n] + 0.5 * h * a[n];
        drift_into(tmp_, p_, k2_);
        auto b = k2_.values();
        for (std::size_t n = 0; n < xv.size(); ++n) tv[n] = xv[n] + 0.5 * h * b[n];
        drift_into(tmp_, p_, k3_);
        auto c = k3_.values();
        for (std::size_t n = 0; n < xv.size(); ++n) tv[n] = xv[n] + h * c[n];
        drift_into(tmp_, p_, k4_);
        auto e = k4_.values();
        for (std::size_t n = 0; n < xv.size(); ++n) xv[n] += h / 6.0 * (a[n] + 2.0 * b[n] + 2.0 * c[n] + e[n]);
    }

private:
    ModelParams p_;
    Scheme scheme_;
    TriangularArray k1_, k2_, k3_, k4_, tmp_;
};

std::string offending_coordinates(const FluidState& x) {
    std::string out;
    int shown = 0;
    for (int i = 0; i <= x.buffer() && shown < 8; ++i) {
        for (int j = i; j <= x.buffer() && shown < 8; ++j) {
            double v = x(i, j);
            if (!std::isfinite(v) || v < -tol::mass) {
                out += fmt::format(" ({},{})={}", i, j, v);
                ++shown;
            }
        }
    }
    return out.empty() ? fmt::format(" total mass {}", x.sum()) : out;
}

}  // namespace

Trajectory integrate(const FluidState& x0, const ModelParams& p, const IntegratorConfig& cfg) {
    p.validate();
    cfg.validate();
    x0.require_valid();
    if (x0.buffer() != p.buffer) {
        throw InvalidArgument(fmt::format("initial state buffer {} does not match params buffer {}", x0.buffer(), p.buffer));
    }

    Trajectory traj;
    traj.params = p;
    traj.meta["scheme"] = to_string(cfg.scheme);
    traj.meta["projection"] = to_string(cfg.projection);
    traj.meta["dt"] = fmt::format("{}", cfg.dt);

    FluidState x = x0;
    Stepper stepper(p, cfg.scheme);
    double min_pre_projection = 0.0;

    traj.times.push_back(0.0);
    traj.states.push_back(x);

    const auto total_steps = static_cast<long long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
    long long next_sample = 1;
    for (long long k = 1; k <= total_steps; ++k) {
        const double t_prev = static_cast<double>(k - 1) * cfg.dt;
        const double t = k == total_steps ? cfg.t_end : static_cast<double>(k) * cfg.dt;
        stepper.step(x, t - t_prev);

        auto xv = x.values();
        min_pre_projection = std::min(min_pre_projection, *std::min_element(xv.begin(), xv.end()));
        if (cfg.projection == Projection::clip_renormalize) {
            double total = 0.0;
            for (double& v : xv) {
                if (v < 0.0) v = 0.0;
                total += v;
            }
            if (total > 0.0 && std::isfinite(total)) {
                for (double& v : xv) v /= total;
            }
        }
        if (!x.valid()) {
            throw IntegrationError(fmt::format("step rejected at t={}:{}", t, offending_coordinates(x)));
        }

        const double sample_time = static_cast<double>(next_sample) * cfg.sample_every;
        const bool at_end = k == total_steps;
        if (t >= sample_time - 1e-9 * cfg.dt || at_end) {
            if (t > traj.times.back()) {
                traj.times.push_back(t);
                traj.states.push_back(x);
            }
            while (static_cast<double>(next_sample) * cfg.sample_every <= t + 1e-9 * cfg.dt) ++next_sample;
        }
    }
    traj.meta["min_pre_projection"] = fmt::format("{}", min_pre_projection);
    return traj;
}

std::vector<std::pair<double, double>> distance_to(const Trajectory& traj, const FluidState& target) {
    if (traj.states.empty()) {
        throw InvalidArgument("distance_to: empty trajectory");
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        out.emplace_back(traj.times[k], euclidean_distance(traj.states[k], target));
    }
    return out;
}

}  // namespace sqdn
