#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sqdn/fluid_state.hpp"
#include "sqdn/params.hpp"

namespace sqdn {

enum class Scheme { euler, rk4 };
enum class Projection { clip_renormalize, none };

struct IntegratorConfig {
    double dt = 1e-3;
    double t_end = 10.0;
    double sample_every = 0.1;
    Scheme scheme = Scheme::euler;
    Projection projection = Projection::clip_renormalize;

    void validate() const;

    friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

/// Sampled solution of dx/dt = b(x).
struct Trajectory {
    ModelParams params;
    std::vector<double> times;
    std::vector<FluidState> states;
    std::map<std::string, std::string> meta;
};

/// Thrown when a step leaves the simplex even after projection.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-step integration with optional clip-and-renormalize projection after
/// every step. Samples are taken at multiples of cfg.sample_every and at t_end.
Trajectory integrate(const FluidState& x0, const ModelParams& p, const IntegratorConfig& cfg);

/// Euclidean distance of every sample to target.
std::vector<std::pair<double, double>> distance_to(const Trajectory& traj, const FluidState& target);

const char* to_string(Scheme s);
const char* to_string(Projection p);
Scheme parse_scheme(const std::string& s);
Projection parse_projection(const std::string& s);

}  // namespace sqdn
