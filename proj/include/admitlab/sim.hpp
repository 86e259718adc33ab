#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "admitlab/policy.hpp"
#include "admitlab/stream.hpp"

namespace admitlab {

// Q(Z_n-) and Q(Z_n) for every simulated event. Q is right-continuous and
// piecewise constant: Q(t) = initial before the first event, post[n] on
// [Z_n, Z_{n+1}).
struct QueueTrajectory {
    std::int64_t initial = 0;
    std::vector<std::int64_t> pre;
    std::vector<std::int64_t> post;
    // End of the simulated interval; trajectory queries are valid on [0, end_time].
    double end_time = 0.0;

    std::size_t size() const noexcept { return pre.size(); }
    // Q(t) for t in [0, end_time].
    std::int64_t at(const EventStream& stream, double t) const;
};

// H(n) per simulated event.
struct DecisionTrace {
    std::vector<std::uint8_t> decisions;

    std::size_t size() const noexcept { return decisions.size(); }
};

struct SimMetrics {
    // (1/N) sum Q(Z_n-) over measured events.
    double mean_queue = 0.0;
    // Time average of Q over the measured interval.
    double mean_queue_time = 0.0;
    // (lambda + 1 - p) * (sum H) / N
    double diversion_rate = 0.0;
    std::int64_t diversions = 0;
    std::int64_t wasted_count = 0;
    double wasted_rate = 0.0;
    std::int64_t n_events = 0;
    double measured_from = 0.0;
    double measured_to = 0.0;
};

struct SimOptions {
    std::int64_t q0 = 0;
    // Leading fraction of simulated events dropped from metrics.
    double burn_in_fraction = 0.1;
    // Simulate events with Z_n <= until; defaults to the stream horizon.
    std::optional<double> until;
};

struct SimResult {
    QueueTrajectory trajectory;
    DecisionTrace trace;
    SimMetrics metrics;
};

// Folds the per-event queue update over the stream. The policy sees the
// events in [Z_n, Z_n + policy.lookahead()] and nothing later.
SimResult run_simulation(const EventStream& stream, Policy& policy, const SimOptions& options);
SimResult run_simulation(const EventStream& stream, Policy& policy, std::int64_t q0 = 0);

// Open-loop replay of a fixed decision sequence (diversions on tokens are ignored).
QueueTrajectory replay_decisions(const EventStream& stream, const DecisionTrace& trace, std::int64_t q0);

// J(t): service tokens that found the queue empty in (0, t].
std::int64_t wasted_tokens(const QueueTrajectory& trajectory, const EventStream& stream, double t);

// Q(t) - [Q(0) + S(0, t) + J(t) - H(t)]; zero on every valid path.
std::int64_t flow_identity_residual(const QueueTrajectory& trajectory, const DecisionTrace& trace,
                                    const EventStream& stream, double t);

// The residual at every simulated event epoch, computed in one pass.
std::vector<std::int64_t> flow_identity_residuals(const QueueTrajectory& trajectory, const DecisionTrace& trace,
                                                  const EventStream& stream);

// Diversions among events in (a, b].
std::int64_t window_diversions(const DecisionTrace& trace, const EventStream& stream, double a, double b);

// Lebesgue fraction of [t0, t1] on which Q(t) <= q_level.
double occupancy_fraction(const QueueTrajectory& trajectory, const EventStream& stream,
                          std::int64_t q_level, double t0, double t1);

// sup{t in [0, duration): Q(t_start + t) <= q_level}, or 0 when Q stays
// above q_level on the whole window.
double last_low_time(const QueueTrajectory& trajectory, const EventStream& stream,
                     std::int64_t q_level, double t_start, double duration);

// CSV with header `n,time,mark,H,Q_pre,Q_post`.
void write_trajectory_csv(std::ostream& out, const EventStream& stream, const SimResult& result);

}  // namespace admitlab
