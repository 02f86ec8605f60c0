#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sqdn/integrator.hpp"
#include "sqdn/simulator.hpp"

namespace sqdn {

/// Fluid trajectory linearly interpolated at time t (clamped to its support).
FluidState interpolate(const Trajectory& fluid, double t);

/// Sup over the stochastic sample times of the Euclidean distance between the
/// occupancy measure and the interpolated fluid state.
double sup_distance(const SimTrajectory& stoch, const Trajectory& fluid);

/// Least-squares fit of log(value) = log(alpha) - beta t.
struct DecayFit {
    double beta_hat = 0.0;
    double alpha_hat = 0.0;
    double r_squared = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
};

/// Fits over samples with t_lo <= t <= t_hi. Throws InvalidArgument if any
/// value in the window is nonpositive or fewer than two samples fall in it.
/// A constant series has beta_hat = 0 and r_squared = 1.
DecayFit fit_decay_rate(std::span<const std::pair<double, double>> series, double t_lo, double t_hi);

/// Window for fitting the decay of dist(t): starts `burn` time units after the
/// last sample with x_{0,0} <= tol::zero (or at burn if x_{0,0} never vanishes)
/// and ends at the last sample whose distance exceeds `floor`.
std::pair<double, double> post_liftoff_window(const Trajectory& traj, std::span<const std::pair<double, double>> dist,
                                              double burn = 1.0, double floor = 1e-11);

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"fig3-left", "fig3-right", "jstar-sweep", "stability-sweep",
                                                "policy-compare"};
    return names;
}

struct ExperimentOptions {
    std::uint64_t seed = 0;
    int replications = 10;
    int buffer = 20;
    double dt = 1e-3;
    int threads = 0;
};

struct ExperimentArtifacts {
    std::string name;
    std::vector<std::filesystem::path> files;
    std::filesystem::path manifest;
};

/// Runs a named experiment, writing CSV tables and a manifest.json into out_dir.
/// Throws InvalidArgument for an unknown name.
ExperimentArtifacts run_experiment(const std::string& name, const ExperimentOptions& opts,
                                   const std::filesystem::path& out_dir);

}  // namespace sqdn
