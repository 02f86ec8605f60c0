#include "sqdn/drift.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <vector>

namespace sqdn {
namespace {

// Everything the boundary rates need, computed once per drift evaluation.
struct BoundaryTerms {
    std::vector<double> row;
    std::vector<double> col;
    std::vector<double> r;  // R_j, j = 0..I-1
    std::vector<double> g;  // G_j, j = 0..I-1 (G_0 unused, kept 0)

    BoundaryTerms(const TriangularArray& x, const ModelParams& p) {
        const int size = x.buffer() + 1;
        row.assign(size, 0.0);
        col.assign(size, 0.0);
        for (int i = 0; i < size; ++i) {
            for (int j = i; j < size; ++j) {
                row[i] += x(i, j);
                col[j] += x(i, j);
            }
        }
        r.assign(size - 1, 0.0);
        g.assign(size - 1, 0.0);
        const double ld = p.lambda * p.d;
        double mem_prefix = 0.0;
        double row_prefix = 0.0;
        double weighted = 0.0;  // sum_{i<=j} (j+1-i) x_{i,.}
        for (int j = 0; j + 1 < size; ++j) {
            mem_prefix += col[j];
            row_prefix += row[j];
            weighted += row_prefix;
            if (mem_prefix > tol::zero) {
                continue;
            }
            const double load = p.d * weighted;
            r[j] = std::max(0.0, p.lambda * (1.0 - load));
            if (j >= 1 && load <= 1.0 + tol::zero) {
                g[j] = ld * row_prefix;
            }
        }
    }

    // R_{j-1} x_{i,j} / x_{.,j}: flow of assignments out of (i, j).
    double assigned(const TriangularArray& x, int i, int j) const {
        if (j < 1) {
            return 0.0;
        }
        const double rate = r[j - 1];
        if (rate == 0.0 || col[j] <= tol::zero) {
            return 0.0;
        }
        return rate * x(i, j) / col[j];
    }
};

void check_index(const FluidState& x, int j, int lo, int hi, const char* what) {
    if (j < lo || j > hi) {
        throw InvalidArgument(fmt::format("{} index {} outside [{}, {}] for buffer {}", what, j, lo, hi, x.buffer()));
    }
}

}  // namespace

double boundary_rate_r(const FluidState& x, int j, const ModelParams& p) {
    check_index(x, j, 0, x.buffer() - 1, "R");
    return BoundaryTerms(x, p).r[j];
}

double boundary_rate_g(const FluidState& x, int j, const ModelParams& p) {
    check_index(x, j, 1, x.buffer() - 1, "G");
    return BoundaryTerms(x, p).g[j];
}

void drift_into(const TriangularArray& x, const ModelParams& p, TriangularArray& out) {
    const int cap = x.buffer();
    const double lam = p.lambda;
    const double ld = lam * p.d;
    const BoundaryTerms bt(x, p);

    // (0, 0)
    out(0, 0) = ld * (bt.row[0] - x(0, 0)) - lam + bt.r[0];

    // i < j
    for (int i = 0; i < cap; ++i) {
        for (int j = i + 1; j <= cap; ++j) {
            double v = x(i + 1, j) - ld * x(i, j) - bt.assigned(x, i, j);
            if (i > 0) {
                v -= x(i, j);
                v += bt.assigned(x, i - 1, j - 1);
                if (j == cap) {
                    v += bt.assigned(x, i - 1, cap);
                }
            }
            out(i, j) = v;
        }
    }

    // (1, 1); buffer >= 2 so G_1 exists
    out(1, 1) = -x(1, 1) + ld * (bt.row[1] - x(1, 1)) + lam - bt.r[0] - bt.assigned(x, 1, 1) - bt.g[1];

    // 2 <= i <= I-1
    for (int i = 2; i < cap; ++i) {
        out(i, i) = -x(i, i) + ld * (bt.row[i] - x(i, i)) - bt.assigned(x, i, i) +
                    bt.assigned(x, i - 1, i - 1) + bt.g[i - 1] - bt.g[i];
    }

    // (I, I)
    out(cap, cap) = -x(cap, cap) + bt.assigned(x, cap - 1, cap - 1) + bt.g[cap - 1] + bt.assigned(x, cap - 1, cap);
}

DriftVector drift(const FluidState& x, const ModelParams& p) {
    p.validate();
    x.require_valid();
    if (x.buffer() != p.buffer) {
        throw InvalidArgument(fmt::format("state buffer {} does not match params buffer {}", x.buffer(), p.buffer));
    }
    DriftVector out(x.buffer());
    drift_into(x, p, out);
    return out;
}

}  // namespace sqdn
