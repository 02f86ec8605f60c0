#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sqdn/params.hpp"

namespace sqdn {

/// Offset of (i, j) in row-major lower-triangular storage over 0 <= i <= j <= buffer.
constexpr std::size_t triangular_offset(int buffer, int i, int j) {
    return static_cast<std::size_t>(i) * (2 * static_cast<std::size_t>(buffer) + 3 - i) / 2 +
           static_cast<std::size_t>(j - i);
}

/// Dense lower-triangular storage for quantities indexed by (i, j) with
/// 0 <= i <= j <= I. Row-major over i, so offset(i, j) = i(2I + 3 - i)/2 + (j - i).
class TriangularArray {
public:
    TriangularArray() = default;
    explicit TriangularArray(int buffer);

    static constexpr std::size_t size_for(int buffer) {
        auto n = static_cast<std::size_t>(buffer) + 1;
        return n * (n + 1) / 2;
    }

    int buffer() const { return buffer_; }
    std::size_t size() const { return values_.size(); }

    std::size_t offset(int i, int j) const { return triangular_offset(buffer_, i, j); }

    double& operator()(int i, int j) { return values_[offset(i, j)]; }
    double operator()(int i, int j) const { return values_[offset(i, j)]; }

    /// Bounds-checked access; throws InvalidArgument when (i, j) is outside the index space.
    double at(int i, int j) const;

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double sum() const;

    friend bool operator==(const TriangularArray&, const TriangularArray&) = default;

private:
    int buffer_ = 0;
    std::vector<double> values_;
};

/// A point of the fluid state space: x(i, j) is the mass of servers holding i
/// jobs whose last observation at the dispatcher is j.
class FluidState : public TriangularArray {
public:
    FluidState() = default;
    explicit FluidState(int buffer) : TriangularArray(buffer) {}

    /// All servers idle and known to be idle: x(0,0) = 1.
    static FluidState all_idle(int buffer);

    /// Returns an empty string when the state is a valid simplex point within
    /// tol::mass, otherwise a description of the first violation.
    std::string violation(double eps = tol::mass) const;
    bool valid(double eps = tol::mass) const { return violation(eps).empty(); }
    void require_valid(double eps = tol::mass) const;
};

using DriftVector = TriangularArray;

/// Row and column marginals of a fluid state.
struct MarginalView {
    std::vector<double> row;         // x_{i,.}: servers with i jobs
    std::vector<double> col;         // x_{.,j}: servers observed at j
    std::vector<double> mem_prefix;  // sum_{i<=j} x_{.,i}
    std::vector<double> tail;        // Z_i = sum_{k>=i} x_{k,.}

    explicit MarginalView(const TriangularArray& x);
};

/// Mean jobs per server (L_S) and mean observation per server (L_M).
struct MassFunctionals {
    double ls = 0.0;
    double lm = 0.0;
};

MassFunctionals mass_functionals(const TriangularArray& x);

double euclidean_distance(const TriangularArray& a, const TriangularArray& b);
double sup_norm(std::span<const double> v);

}  // namespace sqdn
