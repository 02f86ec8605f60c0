#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "sqdn/fluid_state.hpp"
#include "sqdn/params.hpp"
#include "sqdn/rng.hpp"

namespace sqdn {

enum class DepartureMode { per_busy_server, potential_departure };
enum class PolicyKind { sqdn_memory, sqd_classic, random, jsq };
enum class Replacement { with, without };
enum class Order { sample_then_assign, assign_then_sample };
enum class TieBreak { uniform, oldest_timer };

struct PolicySpec {
    PolicyKind kind = PolicyKind::sqdn_memory;
    Replacement replacement = Replacement::with;
    Order order = Order::sample_then_assign;
    TieBreak tiebreak = TieBreak::uniform;

    void validate() const;
    bool memoryless() const { return kind != PolicyKind::sqdn_memory; }
    /// Short label such as "sqdn-memory" or "sqdn-memory/without/assign-then-sample/oldest-timer".
    std::string label() const;

    friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

const char* to_string(DepartureMode m);
const char* to_string(PolicyKind k);
const char* to_string(Replacement r);
const char* to_string(Order o);
const char* to_string(TieBreak t);
DepartureMode parse_departure_mode(const std::string& s);
PolicyKind parse_policy_kind(const std::string& s);
Replacement parse_replacement(const std::string& s);
Order parse_order(const std::string& s);
TieBreak parse_tiebreak(const std::string& s);

/// Queue length and the dispatcher's last observation of one server.
/// sampled_at is the arrival count at the last sampling; the age used by the
/// oldest-timer tie-break is (arrivals so far) - sampled_at.
struct ServerState {
    int q = 0;
    int m = 0;
    std::uint64_t sampled_at = 0;

    friend bool operator==(const ServerState&, const ServerState&) = default;
};

struct SimConfig {
    ModelParams params;
    int n_servers = 1000;
    double horizon = 10.0;
    std::uint64_t seed = 0;
    DepartureMode departure_mode = DepartureMode::per_busy_server;
    double sample_every = 0.1;
    PolicySpec policy;
    /// Optional initial (q, m) per server; empty means all idle with m = q = 0.
    std::vector<ServerState> initial;

    void validate() const;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct Counters {
    std::uint64_t arrivals = 0;
    std::uint64_t departures = 0;
    std::uint64_t blocked = 0;
    std::uint64_t idle_assignments = 0;
    std::uint64_t events = 0;
    /// Integral over time of the number of jobs in the system.
    double job_time = 0.0;
};

/// Empirical fraction of (i, j)-servers, kept as exact integer counts.
struct OccupancyMeasure {
    int n_servers = 0;
    int buffer = 0;
    std::vector<std::int64_t> counts;  // triangular layout, same offsets as TriangularArray
    Counters counters;
    std::int64_t jobs_in_system = 0;

    double value(int i, int j) const;
    /// As a point of the fluid state space.
    FluidState as_state() const;
    /// R^N_j = sum_{i<=j} X_{.,i}
    std::vector<double> mem_prefix() const;
    /// Z_i = sum_{k>=i} X_{k,.}
    std::vector<double> tail() const;
    MassFunctionals functionals() const;
    double blocked_fraction() const;
    double idle_assign_fraction() const;
};

/// Occupancy of an explicit list of servers; memoryless reports (q, q).
OccupancyMeasure occupancy(std::span<const ServerState> servers, int n_servers, int buffer, bool memoryless = false);

struct SimTrajectory {
    SimConfig config;
    std::vector<double> times;
    std::vector<OccupancyMeasure> samples;
};

/// One run of the N-server Markov model. Events are drawn with the memoryless
/// re-draw scheme: the next event time is exponential in the total rate and its
/// type is chosen in proportion to the arrival and departure rates.
class Simulator {
public:
    Simulator(const SimConfig& cfg, std::unique_ptr<RandomSource> rng);
    explicit Simulator(const SimConfig& cfg);

    /// Processes events up to time t. State at t is the state after the last
    /// event at or before t; a pending event beyond t is kept for later.
    void run_until(double t);

    /// Applies one arrival at the current time (sampling, assignment, memory update).
    void arrival();
    /// Applies one departure event per the configured departure mode.
    void departure();

    double time() const { return time_; }
    const std::vector<ServerState>& servers() const { return servers_; }
    const Counters& counters() const { return counters_; }
    std::int64_t jobs_in_system() const { return jobs_; }
    OccupancyMeasure snapshot() const;

private:
    void set_q(int k, int q);
    void set_m(int k, int m);
    void observe(int k);
    void assign(int k);
    void sample_servers();
    int select_min_memory();
    int select_sqd();
    int select_jsq();
    double departure_rate() const;

    SimConfig cfg_;
    std::unique_ptr<RandomSource> rng_;
    int n_;
    int cap_;
    double time_ = 0.0;
    std::optional<double> pending_;
    std::vector<ServerState> servers_;
    Counters counters_;
    std::int64_t jobs_ = 0;
    std::vector<std::int64_t> counts_;

    // Servers grouped by memory value and by queue length, with back-pointers.
    std::vector<std::vector<int>> by_memory_;
    std::vector<int> pos_memory_;
    std::vector<std::vector<int>> by_queue_;
    std::vector<int> pos_queue_;
    std::vector<int> busy_;
    std::vector<int> pos_busy_;
    // oldest-timer tie-break: (sampled_at, random key, server) per memory value
    std::vector<std::set<std::tuple<std::uint64_t, std::uint64_t, int>>> by_age_;
    std::vector<std::uint64_t> age_key_;
    std::vector<int> sampled_;
};

/// Runs a full simulation, sampling the occupancy at multiples of sample_every
/// and at the horizon.
SimTrajectory simulate(const SimConfig& cfg);

struct ReplicationResult {
    std::uint64_t seed = 0;
    double mean_ls = 0.0;            // time-averaged jobs per server over the measurement window
    double blocked_fraction = 0.0;   // over arrivals in the window
    double idle_assign_fraction = 0.0;
};

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;  // 95% Student-t half width across replications
};

struct PolicySummary {
    PolicySpec policy;
    Estimate ls;
    Estimate blocked;
    Estimate idle_assign;
    std::vector<ReplicationResult> replications;
};

struct CompareOptions {
    int replications = 20;
    double warmup = 0.0;  // measurement window is [warmup, horizon]
    int threads = 0;      // 0 = hardware concurrency
};

/// Runs every policy over the same seed ladder (common random numbers) and
/// summarizes steady-state metrics. Results are independent of thread count.
std::vector<PolicySummary> compare_policies(const SimConfig& base, std::span<const PolicySpec> policies,
                                            const CompareOptions& opts);

Estimate estimate(std::span<const double> values);

}  // namespace sqdn
