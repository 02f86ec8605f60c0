#include "sqdn/equilibrium.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "sqdn/drift.hpp"

namespace sqdn {
namespace {

constexpr int kMaxBisection = 200;
constexpr double kRootTol = 1e-13;
constexpr double kBoundaryTol = 1e-12;
constexpr double kResidualTol = 1e-9;

// log((1 - z)(zd + 1)^n); positive strictly between the trivial root 0 and lambda_n*.
double log_threshold_poly(double z, int n, int d) {
    if (z >= 1.0) return -std::numeric_limits<double>::infinity();
    return std::log1p(-z) + n * std::log1p(z * d);
}

template <typename F>
double bisect(F&& f, double lo, double hi, double tol) {
    // f(lo) > 0 > f(hi)
    for (int it = 0; it < kMaxBisection && hi - lo > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

int j_star(const ModelParams& p) {
    return static_cast<int>(std::floor(-std::log1p(-p.lambda) / std::log1p(p.lambda * p.d)));
}

double lambda_star(int n, int d) {
    if (n < 0 || d < 1) {
        throw InvalidArgument(fmt::format("lambda_star: need n >= 0 and d >= 1, got n={} d={}", n, d));
    }
    if (n == 0) return 0.0;
    if (n == 1) return 1.0 - 1.0 / d;
    // n >= 2 implies nd > 1, so the polynomial is positive just above 0.
    double lo = 1.0 / (2.0 * d);
    while (log_threshold_poly(lo, n, d) <= 0.0) {
        lo *= 0.5;
    }
    return bisect([&](double z) { return log_threshold_poly(z, n, d); }, lo, 1.0, 1e-15);
}

int threshold_interval(double lambda, int d) {
    int n = 0;
    while (n < 100000 && lambda >= lambda_star(n + 1, d)) {
        ++n;
    }
    return n;
}

double fixed_point_equation(double v, int jstar, const ModelParams& p) {
    const double ld = p.lambda * p.d;
    const double x0j = ((1.0 + ld) * (1.0 - p.lambda) - std::pow(1.0 + ld, -jstar)) / ld;
    const double growth = ld * (1.0 + 1.0 / (v * (1.0 + ld)));
    const double first = (ld - 1.0 + ld / ((1.0 + ld) * v)) * x0j;
    return std::pow(growth, jstar - 1) * first - v;
}

EquilibriumReport fixed_point(const ModelParams& p) {
    p.validate();
    const int js = j_star(p);
    if (p.buffer <= js + 1) {
        throw InvalidArgument(fmt::format("buffer {} must exceed j*+1 = {} for lambda={}, d={}", p.buffer, js + 1, p.lambda, p.d));
    }
    for (int n : {js, js + 1}) {
        if (n >= 1 && std::abs(p.lambda - lambda_star(n, p.d)) < kBoundaryTol) {
            throw BoundaryDegeneracy(fmt::format("lambda={} coincides with threshold lambda_{}* for d={}", p.lambda, n, p.d));
        }
    }

    const double lam = p.lambda;
    const double ld = lam * p.d;
    EquilibriumReport rep;
    rep.params = p;
    rep.jstar = js;
    rep.fixed_point = FluidState(p.buffer);
    FluidState& x = rep.fixed_point;

    if (js == 0) {
        x(0, 0) = 1.0 - lam - 1.0 / p.d;
        x(0, 1) = 1.0 / p.d;
        x(1, 1) = lam;
    } else {
        const double x0j = ((1.0 + ld) * (1.0 - lam) - std::pow(1.0 + ld, -js)) / ld;
        x(0, js) = x0j;
        x(0, js + 1) = (1.0 - lam) - x0j;

        auto f = [&](double v) { return v <= 0.0 ? std::numeric_limits<double>::infinity() : fixed_point_equation(v, js, p); };
        if (!(f(1.0) < 0.0)) {
            throw ConsistencyError(fmt::format("fixed-point equation not bracketed on (0, 1]: F(1) = {}", f(1.0)));
        }
        const double xjj = bisect(f, 0.0, 1.0, kRootTol);
        rep.x_jj = xjj;

        // Column j*: x_{1,j*} from x_{0,j*}, then geometric growth up to the root.
        x(js, js) = xjj;
        if (js >= 2) {
            x(1, js) = (ld - 1.0 + ld / ((1.0 + ld) * xjj)) * x0j;
            const double growth = ld * (1.0 + 1.0 / (xjj * (1.0 + ld)));
            for (int i = 1; i + 1 < js; ++i) {
                x(i + 1, js) = growth * x(i, js);
            }
        }

        // Column j*+1: x_{1,j*+1} = lambda d x_{0,j*+1}, then x_{i+1,j*+1} = y_i - x_{i,j*}.
        x(1, js + 1) = ld * x(0, js + 1);
        const double y_top = ld / (1.0 + ld);
        for (int i = 1; i <= js; ++i) {
            const double y = y_top / std::pow(1.0 + ld, js - i);
            x(i + 1, js + 1) = y - x(i, js);
        }
    }

    if (auto why = x.violation(); !why.empty()) {
        throw ConsistencyError(fmt::format("reconstructed fixed point invalid (lambda={}, d={}): {}", lam, p.d, why));
    }
    const auto b = drift(x, p);
    rep.residual = sup_norm(b.values());
    if (!(rep.residual < kResidualTol)) {
        throw ConsistencyError(fmt::format("fixed point residual {} exceeds {} (lambda={}, d={}, j*={})", rep.residual,
                                           kResidualTol, lam, p.d, js));
    }
    const auto mf = mass_functionals(x);
    rep.ls = mf.ls;
    rep.lm = mf.lm;
    return rep;
}

EquilibriumBounds equilibrium_bounds(const ModelParams& p) {
    const int js = j_star(p);
    const double inv_d = 1.0 / p.d;
    return {js - inv_d, js - inv_d + 1.0, inv_d};
}

}  // namespace sqdn
