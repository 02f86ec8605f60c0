#include "sqdn/fluid_state.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace sqdn {

void ModelParams::validate() const {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw InvalidArgument(fmt::format("lambda must lie in (0, 1), got {}", lambda));
    }
    if (d < 1) {
        throw InvalidArgument(fmt::format("d must be >= 1, got {}", d));
    }
    if (buffer < 2) {
        throw InvalidArgument(fmt::format("buffer must be >= 2, got {}", buffer));
    }
}

TriangularArray::TriangularArray(int buffer) : buffer_(buffer) {
    if (buffer < 1) {
        throw InvalidArgument(fmt::format("buffer must be >= 1, got {}", buffer));
    }
    values_.assign(size_for(buffer), 0.0);
}

double TriangularArray::at(int i, int j) const {
    if (i < 0 || j < i || j > buffer_) {
        throw InvalidArgument(fmt::format("index ({}, {}) outside 0 <= i <= j <= {}", i, j, buffer_));
    }
    return (*this)(i, j);
}

double TriangularArray::sum() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

FluidState FluidState::all_idle(int buffer) {
    FluidState x(buffer);
    x(0, 0) = 1.0;
    return x;
}

std::string FluidState::violation(double eps) const {
    if (size() == 0) {
        return "empty state";
    }
    for (int i = 0; i <= buffer(); ++i) {
        for (int j = i; j <= buffer(); ++j) {
            double v = (*this)(i, j);
            if (!std::isfinite(v)) {
                return fmt::format("non-finite entry at ({},{})", i, j);
            }
            if (v < -eps) {
                return fmt::format("negative entry {} at ({},{})", v, i, j);
            }
        }
    }
    double total = sum();
    if (std::abs(total - 1.0) > eps) {
        return fmt::format("total mass {} differs from 1", total);
    }
    return {};
}

void FluidState::require_valid(double eps) const {
    if (auto why = violation(eps); !why.empty()) {
        throw InvalidArgument("invalid fluid state: " + why);
    }
}

MarginalView::MarginalView(const TriangularArray& x) {
    const int n = x.buffer() + 1;
    row.assign(n, 0.0);
    col.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            row[i] += x(i, j);
            col[j] += x(i, j);
        }
    }
    mem_prefix.assign(n, 0.0);
    std::partial_sum(col.begin(), col.end(), mem_prefix.begin());
    tail.assign(n, 0.0);
    double acc = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        acc += row[i];
        tail[i] = acc;
    }
}

MassFunctionals mass_functionals(const TriangularArray& x) {
    MassFunctionals out;
    for (int i = 0; i <= x.buffer(); ++i) {
        for (int j = i; j <= x.buffer(); ++j) {
            out.ls += i * x(i, j);
            out.lm += j * x(i, j);
        }
    }
    return out;
}

double euclidean_distance(const TriangularArray& a, const TriangularArray& b) {
    if (a.buffer() != b.buffer()) {
        throw InvalidArgument(fmt::format("buffer mismatch: {} vs {}", a.buffer(), b.buffer()));
    }
    double acc = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t k = 0; k < va.size(); ++k) {
        double diff = va[k] - vb[k];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double e : v) {
        m = std::max(m, std::abs(e));
    }
    return m;
}

}  // namespace sqdn
