#pragma once

#include <stdexcept>
#include <string>

namespace sqdn {

/// Thrown when a parameter, config field, or input state violates its contract.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computed result fails its own self-check (e.g. a fixed point
/// whose drift residual is too large).
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tolerances shared by the fluid modules.
namespace tol {
inline constexpr double zero = 1e-10;   // indicator tests on memory prefixes and column masses
inline constexpr double mass = 1e-9;    // state validity
inline constexpr double drift = 1e-12;  // conservation checks
}  // namespace tol

/// Per-server arrival rate, number of sampled servers, and buffer size.
struct ModelParams {
    double lambda = 0.5;
    int d = 2;
    int buffer = 20;

    /// Throws InvalidArgument naming the offending field.
    void validate() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

}  // namespace sqdn
