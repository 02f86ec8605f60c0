#pragma once

#include "sqdn/fluid_state.hpp"
#include "sqdn/params.hpp"

namespace sqdn {

/// Rate of forced assignments to servers observed at j + 1 when no server is
/// observed at or below j:
///   R_j(x) = max(0, lambda (1 - d sum_{i<=j} (j+1-i) x_{i,.})) if sum_{i<=j} x_{.,i} = 0, else 0.
/// Valid for 0 <= j <= I - 1.
double boundary_rate_r(const FluidState& x, int j, const ModelParams& p);

/// Assignment rate out of (j, j) when memory is empty up to j:
///   G_j(x) = lambda d sum_{i<=j} x_{i,.} when sum_{i<=j} x_{.,i} = 0 and
///   d sum_{i<=j} (j+1-i) x_{i,.} <= 1, else 0.
/// Valid for 1 <= j <= I - 1.
double boundary_rate_g(const FluidState& x, int j, const ModelParams& p);

/// The fluid drift b(x). Ratios x_{i,j} / x_{.,j} are only evaluated when the
/// column mass exceeds tol::zero; otherwise the whole term is zero.
DriftVector drift(const FluidState& x, const ModelParams& p);

/// Same as drift() but writes into a preallocated output and skips validation.
/// Used by the integrator inner loop.
void drift_into(const TriangularArray& x, const ModelParams& p, TriangularArray& out);

}  // namespace sqdn
