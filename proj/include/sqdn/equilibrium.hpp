#pragma once

#include <optional>

#include "sqdn/fluid_state.hpp"
#include "sqdn/params.hpp"

namespace sqdn {

/// Thrown for loads that sit on a threshold lambda_n*, where the fixed point's
/// two-column structure degenerates.
class BoundaryDegeneracy : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct EquilibriumReport {
    ModelParams params;
    int jstar = 0;
    FluidState fixed_point;
    double ls = 0.0;
    double lm = 0.0;
    std::optional<double> x_jj;  // root of F; absent when jstar == 0
    double residual = 0.0;       // sup-norm of the drift at the fixed point
};

struct EquilibriumBounds {
    double ls_lo = 0.0;
    double ls_hi = 0.0;
    double lm_minus_ls = 0.0;
};

/// floor(-log(1 - lambda) / log(lambda d + 1)). Only lambda and d are read.
int j_star(const ModelParams& p);

/// Index n of the interval [lambda_n*, lambda_{n+1}*) containing lambda,
/// found by scanning the thresholds. Agrees with j_star().
int threshold_interval(double lambda, int d);

/// Threshold load lambda_n*: 0 for n = 0, otherwise the root in (0, 1] of
/// (1 - z)(zd + 1)^n = 1, by bisection.
double lambda_star(int n, int d);

/// The fixed-point equation for x_{j*,j*} (only meaningful for j* >= 1):
/// the value of x_{j*,j*} reconstructed from a trial value v, minus v.
double fixed_point_equation(double v, int jstar, const ModelParams& p);

/// Unique zero of the fluid drift. Throws BoundaryDegeneracy when lambda is
/// within 1e-12 of a threshold, InvalidArgument when buffer <= j* + 1, and
/// ConsistencyError when the reconstructed point fails its residual check.
EquilibriumReport fixed_point(const ModelParams& p);

/// (j* - 1/d, j* - 1/d + 1, 1/d).
EquilibriumBounds equilibrium_bounds(const ModelParams& p);

}  // namespace sqdn
