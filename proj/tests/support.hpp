#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sqdn/fluid_state.hpp"
#include "sqdn/params.hpp"

namespace sqdn::testing {

using Rng = std::mt19937_64;

/// Uniform point on the simplex restricted to entries where keep(i, j) holds.
template <typename Keep>
FluidState random_simplex_where(int buffer, Rng& rng, Keep keep) {
    std::exponential_distribution<double> e(1.0);
    FluidState x(buffer);
    double total = 0.0;
    for (int i = 0; i <= buffer; ++i) {
        for (int j = i; j <= buffer; ++j) {
            if (keep(i, j)) {
                x(i, j) = e(rng);
                total += x(i, j);
            }
        }
    }
    for (auto& v : x.values()) v /= total;
    return x;
}

inline FluidState random_simplex(int buffer, Rng& rng) {
    return random_simplex_where(buffer, rng, [](int, int) { return true; });
}

/// Random state with all memory columns 0..k empty.
inline FluidState random_with_empty_prefix(int buffer, int k, Rng& rng) {
    return random_simplex_where(buffer, rng, [k](int, int j) { return j > k; });
}

/// Random state with x_{0,0} >= floor.
inline FluidState random_with_idle_floor(int buffer, double floor, Rng& rng) {
    FluidState x = random_simplex(buffer, rng);
    for (auto& v : x.values()) v *= 1.0 - floor;
    x(0, 0) += floor;
    return x;
}

/// Drift of the linear regime (x_{0,0} > 0), written out coordinate by
/// coordinate from the reduced system. Independent of the library's drift.
inline TriangularArray linear_drift(const TriangularArray& x, double lambda, int d) {
    const int cap = x.buffer();
    const double ld = lambda * d;
    std::vector<double> row(cap + 1, 0.0);
    for (int i = 0; i <= cap; ++i) {
        for (int j = i; j <= cap; ++j) row[i] += x(i, j);
    }
    TriangularArray b(cap);
    for (int i = 0; i <= cap; ++i) {
        for (int j = i; j <= cap; ++j) {
            double v = 0.0;
            if (i == 0 && j == 0) {
                v = -lambda + ld * (row[0] - x(0, 0));
            } else if (i == 0) {
                v = x(1, j) - ld * x(0, j);
            } else if (i == 1 && j == 1) {
                v = -x(1, 1) + lambda + ld * (row[1] - x(1, 1));
            } else if (i < j) {
                v = (i + 1 <= j ? x(i + 1, j) : 0.0) - x(i, j) - ld * x(i, j);
            } else {
                v = -x(i, i) + ld * (row[i] - x(i, i));
            }
            b(i, j) = v;
        }
    }
    return b;
}

inline double max_abs_diff(const TriangularArray& a, const TriangularArray& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
}

/// Dense matrix exponential by scaling and squaring with a Taylor series.
inline std::vector<double> expm(const std::vector<double>& a, int n) {
    double norm = 0.0;
    for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += std::abs(a[r * n + c]);
        norm = std::max(norm, s);
    }
    int squarings = 0;
    while (norm > 0.25) {
        norm *= 0.5;
        ++squarings;
    }
    const double scale = std::ldexp(1.0, -squarings);
    auto mul = [n](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> z(n * n, 0.0);
        for (int r = 0; r < n; ++r)
            for (int k = 0; k < n; ++k)
                for (int c = 0; c < n; ++c) z[r * n + c] += x[r * n + k] * y[k * n + c];
        return z;
    };
    std::vector<double> as(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) as[k] = a[k] * scale;
    std::vector<double> result(n * n, 0.0), term(n * n, 0.0);
    for (int r = 0; r < n; ++r) result[r * n + r] = term[r * n + r] = 1.0;
    for (int k = 1; k <= 30; ++k) {
        term = mul(term, as);
        for (auto& v : term) v /= k;
        for (std::size_t q = 0; q < result.size(); ++q) result[q] += term[q];
    }
    for (int s = 0; s < squarings; ++s) result = mul(result, result);
    return result;
}

}  // namespace sqdn::testing
