#include "sqdn/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numeric>
#include <thread>

namespace sqdn {

// ---------------------------------------------------------------------------
// enum <-> string

const char* to_string(DepartureMode m) {
    return m == DepartureMode::per_busy_server ? "per-busy-server" : "potential-departure";
}

const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::sqdn_memory: return "sqdn-memory";
        case PolicyKind::sqd_classic: return "sqd-classic";
        case PolicyKind::random: return "random";
        case PolicyKind::jsq: return "jsq";
    }
    return "?";
}

const char* to_string(Replacement r) { return r == Replacement::with ? "with" : "without"; }

const char* to_string(Order o) { return o == Order::sample_then_assign ? "sample-then-assign" : "assign-then-sample"; }

const char* to_string(TieBreak t) { return t == TieBreak::uniform ? "uniform" : "oldest-timer"; }

DepartureMode parse_departure_mode(const std::string& s) {
    if (s == "per-busy-server") return DepartureMode::per_busy_server;
    if (s == "potential-departure") return DepartureMode::potential_departure;
    throw InvalidArgument("departure_mode: unknown value '" + s + "'");
}

PolicyKind parse_policy_kind(const std::string& s) {
    if (s == "sqdn-memory") return PolicyKind::sqdn_memory;
    if (s == "sqd-classic") return PolicyKind::sqd_classic;
    if (s == "random") return PolicyKind::random;
    if (s == "jsq") return PolicyKind::jsq;
    throw InvalidArgument("policy.kind: unknown value '" + s + "'");
}

Replacement parse_replacement(const std::string& s) {
    if (s == "with") return Replacement::with;
    if (s == "without") return Replacement::without;
    throw InvalidArgument("policy.replacement: unknown value '" + s + "'");
}

Order parse_order(const std::string& s) {
    if (s == "sample-then-assign") return Order::sample_then_assign;
    if (s == "assign-then-sample") return Order::assign_then_sample;
    throw InvalidArgument("policy.order: unknown value '" + s + "'");
}

TieBreak parse_tiebreak(const std::string& s) {
    if (s == "uniform") return TieBreak::uniform;
    if (s == "oldest-timer") return TieBreak::oldest_timer;
    throw InvalidArgument("policy.tiebreak: unknown value '" + s + "'");
}

void PolicySpec::validate() const {
    if (tiebreak == TieBreak::oldest_timer && kind != PolicyKind::sqdn_memory) {
        throw InvalidArgument("policy.tiebreak: oldest-timer requires policy.kind sqdn-memory");
    }
}

std::string PolicySpec::label() const {
    std::string out = to_string(kind);
    if (replacement != Replacement::with) out += fmt::format("/{}", to_string(replacement));
    if (order != Order::sample_then_assign) out += fmt::format("/{}", to_string(order));
    if (tiebreak != TieBreak::uniform) out += fmt::format("/{}", to_string(tiebreak));
    return out;
}

void SimConfig::validate() const {
    params.validate();
    policy.validate();
    if (n_servers < 1) {
        throw InvalidArgument(fmt::format("n_servers must be >= 1, got {}", n_servers));
    }
    if (policy.replacement == Replacement::without && n_servers < params.d) {
        throw InvalidArgument(fmt::format("n_servers ({}) must be >= d ({}) when sampling without replacement", n_servers, params.d));
    }
    if (!(horizon > 0.0)) {
        throw InvalidArgument(fmt::format("horizon must be > 0, got {}", horizon));
    }
    if (!(sample_every > 0.0)) {
        throw InvalidArgument(fmt::format("sample_every must be > 0, got {}", sample_every));
    }
    if (!initial.empty()) {
        if (static_cast<int>(initial.size()) != n_servers) {
            throw InvalidArgument(fmt::format("initial: {} server states given for n_servers = {}", initial.size(), n_servers));
        }
        for (std::size_t k = 0; k < initial.size(); ++k) {
            const auto& s = initial[k];
            if (s.q < 0 || s.q > params.buffer || s.m < 0 || s.m > params.buffer || s.q > s.m) {
                throw InvalidArgument(fmt::format("initial[{}]: need 0 <= q <= m <= buffer, got q={} m={}", k, s.q, s.m));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// occupancy

double OccupancyMeasure::value(int i, int j) const {
    return static_cast<double>(counts[triangular_offset(buffer, i, j)]) / n_servers;
}

FluidState OccupancyMeasure::as_state() const {
    FluidState x(buffer);
    auto xv = x.values();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        xv[k] = static_cast<double>(counts[k]) / n_servers;
    }
    return x;
}

std::vector<double> OccupancyMeasure::mem_prefix() const { return MarginalView(as_state()).mem_prefix; }

std::vector<double> OccupancyMeasure::tail() const { return MarginalView(as_state()).tail; }

MassFunctionals OccupancyMeasure::functionals() const { return mass_functionals(as_state()); }

double OccupancyMeasure::blocked_fraction() const {
    return counters.arrivals == 0 ? 0.0 : static_cast<double>(counters.blocked) / counters.arrivals;
}

double OccupancyMeasure::idle_assign_fraction() const {
    return counters.arrivals == 0 ? 0.0 : static_cast<double>(counters.idle_assignments) / counters.arrivals;
}

OccupancyMeasure occupancy(std::span<const ServerState> servers, int n_servers, int buffer, bool memoryless) {
    if (static_cast<int>(servers.size()) != n_servers) {
        throw InvalidArgument(fmt::format("occupancy: {} servers given, expected {}", servers.size(), n_servers));
    }
    OccupancyMeasure occ;
    occ.n_servers = n_servers;
    occ.buffer = buffer;
    occ.counts.assign(TriangularArray::size_for(buffer), 0);
    for (const auto& s : servers) {
        const int j = memoryless ? s.q : s.m;
        if (s.q < 0 || s.q > j || j > buffer) {
            throw InvalidArgument(fmt::format("occupancy: server state (q={}, m={}) outside 0 <= q <= m <= {}", s.q, s.m, buffer));
        }
        ++occ.counts[triangular_offset(buffer, s.q, j)];
        occ.jobs_in_system += s.q;
    }
    return occ;
}

// ---------------------------------------------------------------------------
// simulator

namespace {

void bucket_insert(std::vector<int>& bucket, std::vector<int>& pos, int k) {
    pos[k] = static_cast<int>(bucket.size());
    bucket.push_back(k);
}

void bucket_erase(std::vector<int>& bucket, std::vector<int>& pos, int k) {
    const int at = pos[k];
    const int last = bucket.back();
    bucket[at] = last;
    pos[last] = at;
    bucket.pop_back();
    pos[k] = -1;
}

}  // namespace

Simulator::Simulator(const SimConfig& cfg) : Simulator(cfg, std::make_unique<SeededSource>(cfg.seed)) {}

Simulator::Simulator(const SimConfig& cfg, std::unique_ptr<RandomSource> rng)
    : cfg_(cfg), rng_(std::move(rng)), n_(cfg.n_servers), cap_(cfg.params.buffer) {
    cfg_.validate();
    servers_ = cfg_.initial.empty() ? std::vector<ServerState>(n_) : cfg_.initial;
    if (cfg_.policy.memoryless()) {
        for (auto& s : servers_) s.m = s.q;
    }
    counts_.assign(TriangularArray::size_for(cap_), 0);
    by_memory_.assign(cap_ + 1, {});
    by_queue_.assign(cap_ + 1, {});
    pos_memory_.assign(n_, -1);
    pos_queue_.assign(n_, -1);
    pos_busy_.assign(n_, -1);
    const bool timer = cfg_.policy.tiebreak == TieBreak::oldest_timer;
    if (timer) {
        by_age_.assign(cap_ + 1, {});
        age_key_.assign(n_, 0);
    }
    for (int k = 0; k < n_; ++k) {
        const auto& s = servers_[k];
        ++counts_[triangular_offset(cap_, s.q, s.m)];
        jobs_ += s.q;
        bucket_insert(by_memory_[s.m], pos_memory_, k);
        bucket_insert(by_queue_[s.q], pos_queue_, k);
        if (s.q > 0) bucket_insert(busy_, pos_busy_, k);
        if (timer) {
            age_key_[k] = static_cast<std::uint64_t>(rng_->index(std::size_t{1} << 62));
            by_age_[s.m].emplace(s.sampled_at, age_key_[k], k);
        }
    }
    sampled_.reserve(cfg_.params.d);
}

void Simulator::set_q(int k, int q) {
    auto& s = servers_[k];
    if (s.q == q) return;
    --counts_[triangular_offset(cap_, s.q, s.m)];
    bucket_erase(by_queue_[s.q], pos_queue_, k);
    if (s.q == 0) bucket_insert(busy_, pos_busy_, k);
    if (q == 0) bucket_erase(busy_, pos_busy_, k);
    jobs_ += q - s.q;
    s.q = q;
    bucket_insert(by_queue_[s.q], pos_queue_, k);
    ++counts_[triangular_offset(cap_, s.q, s.m)];
}

void Simulator::set_m(int k, int m) {
    auto& s = servers_[k];
    if (s.m == m) return;
    --counts_[triangular_offset(cap_, s.q, s.m)];
    bucket_erase(by_memory_[s.m], pos_memory_, k);
    if (!by_age_.empty()) by_age_[s.m].erase({s.sampled_at, age_key_[k], k});
    s.m = m;
    bucket_insert(by_memory_[s.m], pos_memory_, k);
    if (!by_age_.empty()) by_age_[s.m].emplace(s.sampled_at, age_key_[k], k);
    ++counts_[triangular_offset(cap_, s.q, s.m)];
}

// The dispatcher reads the server's queue length into memory.
void Simulator::observe(int k) {
    auto& s = servers_[k];
    if (!by_age_.empty()) {
        by_age_[s.m].erase({s.sampled_at, age_key_[k], k});
        s.sampled_at = counters_.arrivals;
        age_key_[k] = static_cast<std::uint64_t>(rng_->index(std::size_t{1} << 62));
        by_age_[s.m].emplace(s.sampled_at, age_key_[k], k);
    }
    set_m(k, s.q);
}

void Simulator::sample_servers() {
    sampled_.clear();
    const int d = cfg_.params.d;
    if (cfg_.policy.replacement == Replacement::with) {
        for (int p = 0; p < d; ++p) {
            sampled_.push_back(static_cast<int>(rng_->index(static_cast<std::size_t>(n_))));
        }
        return;
    }
    // Floyd's algorithm: d distinct servers with exactly d draws.
    for (int top = n_ - d; top < n_; ++top) {
        const int t = static_cast<int>(rng_->index(static_cast<std::size_t>(top) + 1));
        if (std::find(sampled_.begin(), sampled_.end(), t) == sampled_.end()) {
            sampled_.push_back(t);
        } else {
            sampled_.push_back(top);
        }
    }
}

int Simulator::select_min_memory() {
    int level = 0;
    while (by_memory_[level].empty()) ++level;
    if (!by_age_.empty()) {
        return std::get<2>(*by_age_[level].begin());
    }
    const auto& bucket = by_memory_[level];
    return bucket[rng_->index(bucket.size())];
}

int Simulator::select_sqd() {
    int best = cap_ + 1;
    for (int k : sampled_) best = std::min(best, servers_[k].q);
    std::vector<int> ties;
    for (int k : sampled_) {
        if (servers_[k].q == best && std::find(ties.begin(), ties.end(), k) == ties.end()) ties.push_back(k);
    }
    return ties[rng_->index(ties.size())];
}

int Simulator::select_jsq() {
    int level = 0;
    while (by_queue_[level].empty()) ++level;
    const auto& bucket = by_queue_[level];
    return bucket[rng_->index(bucket.size())];
}

void Simulator::assign(int k) {
    const auto& s = servers_[k];
    if (s.q == 0) ++counters_.idle_assignments;
    // Memory is raised before the queue so that q <= m holds at every step.
    if (cfg_.policy.memoryless()) {
        set_m(k, std::min(s.q + 1, cap_));
    } else {
        set_m(k, std::min(s.m + 1, cap_));
    }
    if (s.q == cap_) {
        ++counters_.blocked;
    } else {
        set_q(k, s.q + 1);
    }
}

void Simulator::arrival() {
    ++counters_.arrivals;
    const auto& pol = cfg_.policy;
    switch (pol.kind) {
        case PolicyKind::sqdn_memory:
            if (pol.order == Order::sample_then_assign) {
                sample_servers();
                for (int k : sampled_) observe(k);
                assign(select_min_memory());
            } else {
                assign(select_min_memory());
                sample_servers();
                for (int k : sampled_) observe(k);
            }
            break;
        case PolicyKind::sqd_classic:
            sample_servers();
            assign(select_sqd());
            break;
        case PolicyKind::random:
            assign(static_cast<int>(rng_->index(static_cast<std::size_t>(n_))));
            break;
        case PolicyKind::jsq:
            assign(select_jsq());
            break;
    }
}

void Simulator::departure() {
    int k = -1;
    if (cfg_.departure_mode == DepartureMode::per_busy_server) {
        if (busy_.empty()) return;
        k = busy_[rng_->index(busy_.size())];
    } else {
        k = static_cast<int>(rng_->index(static_cast<std::size_t>(n_)));
        if (servers_[k].q == 0) return;
    }
    ++counters_.departures;
    set_q(k, servers_[k].q - 1);
    if (cfg_.policy.memoryless()) set_m(k, servers_[k].q);
}

double Simulator::departure_rate() const {
    return cfg_.departure_mode == DepartureMode::per_busy_server ? static_cast<double>(busy_.size())
                                                                 : static_cast<double>(n_);
}

void Simulator::run_until(double t) {
    const double arrival_rate = cfg_.params.lambda * n_;
    while (true) {
        const double dep_rate = departure_rate();
        const double total = arrival_rate + dep_rate;
        if (!pending_) pending_ = time_ + rng_->exponential(total);
        if (*pending_ > t) break;
        const double next = *pending_;
        pending_.reset();
        counters_.job_time += static_cast<double>(jobs_) * (next - time_);
        time_ = next;
        ++counters_.events;
        if (rng_->uniform() * total < arrival_rate) {
            arrival();
        } else {
            departure();
        }
    }
    if (t > time_) {
        counters_.job_time += static_cast<double>(jobs_) * (t - time_);
        time_ = t;
    }
}

OccupancyMeasure Simulator::snapshot() const {
    OccupancyMeasure occ;
    occ.n_servers = n_;
    occ.buffer = cap_;
    occ.counts = counts_;
    occ.counters = counters_;
    occ.jobs_in_system = jobs_;
    return occ;
}

SimTrajectory simulate(const SimConfig& cfg) {
    Simulator sim(cfg);
    SimTrajectory traj;
    traj.config = cfg;
    traj.times.push_back(0.0);
    traj.samples.push_back(sim.snapshot());
    for (long long k = 1;; ++k) {
        double t = static_cast<double>(k) * cfg.sample_every;
        if (t > cfg.horizon * (1.0 + 1e-12)) break;
        t = std::min(t, cfg.horizon);
        sim.run_until(t);
        traj.times.push_back(t);
        traj.samples.push_back(sim.snapshot());
    }
    if (traj.times.back() < cfg.horizon) {
        sim.run_until(cfg.horizon);
        traj.times.push_back(cfg.horizon);
        traj.samples.push_back(sim.snapshot());
    }
    return traj;
}

// ---------------------------------------------------------------------------
// policy comparison

Estimate estimate(std::span<const double> values) {
    Estimate e;
    const auto n = values.size();
    if (n == 0) return e;
    e.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    if (n < 2) return e;
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    boost::math::students_t dist(static_cast<double>(n - 1));
    e.half_width = boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(n));
    return e;
}

namespace {

ReplicationResult run_replication(const SimConfig& cfg, double warmup) {
    Simulator sim(cfg);
    sim.run_until(warmup);
    const Counters start = sim.counters();
    sim.run_until(cfg.horizon);
    const Counters& end = sim.counters();
    ReplicationResult r;
    r.seed = cfg.seed;
    const double window = cfg.horizon - warmup;
    r.mean_ls = (end.job_time - start.job_time) / (window * cfg.n_servers);
    const double arrivals = static_cast<double>(end.arrivals - start.arrivals);
    if (arrivals > 0) {
        r.blocked_fraction = static_cast<double>(end.blocked - start.blocked) / arrivals;
        r.idle_assign_fraction = static_cast<double>(end.idle_assignments - start.idle_assignments) / arrivals;
    }
    return r;
}

}  // namespace

std::vector<PolicySummary> compare_policies(const SimConfig& base, std::span<const PolicySpec> policies,
                                            const CompareOptions& opts) {
    base.validate();
    if (opts.replications < 1) {
        throw InvalidArgument(fmt::format("replications must be >= 1, got {}", opts.replications));
    }
    if (!(opts.warmup >= 0.0 && opts.warmup < base.horizon)) {
        throw InvalidArgument(fmt::format("warmup ({}) must lie in [0, horizon = {})", opts.warmup, base.horizon));
    }
    std::vector<SimConfig> jobs;
    for (const auto& pol : policies) {
        for (int r = 0; r < opts.replications; ++r) {
            SimConfig c = base;
            c.policy = pol;
            c.seed = replication_seed(base.seed, static_cast<std::uint64_t>(r));
            c.validate();
            jobs.push_back(std::move(c));
        }
    }

    std::vector<ReplicationResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            results[k] = run_replication(jobs[k], opts.warmup);
        }
    };
    int threads = opts.threads > 0 ? opts.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min<int>(threads, static_cast<int>(jobs.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    }

    std::vector<PolicySummary> out;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        PolicySummary s;
        s.policy = policies[p];
        auto first = results.begin() + static_cast<std::ptrdiff_t>(p * opts.replications);
        s.replications.assign(first, first + opts.replications);
        std::vector<double> ls, blocked, idle;
        for (const auto& r : s.replications) {
            ls.push_back(r.mean_ls);
            blocked.push_back(r.blocked_fraction);
            idle.push_back(r.idle_assign_fraction);
        }
        s.ls = estimate(ls);
        s.blocked = estimate(blocked);
        s.idle_assign = estimate(idle);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace sqdn
