#include "admitlab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "admitlab/errors.hpp"
#include "admitlab/format.hpp"

namespace admitlab {

namespace {

void check_range(const QueueTrajectory& trajectory, double t) {
    if (!(t >= 0.0) || t > trajectory.end_time) {
        throw RangeError("time " + format_double(t) + " outside simulated range [0, " +
                         format_double(trajectory.end_time) + "]");
    }
}

// Simulated events with Z_n <= t.
std::size_t simulated_count(const QueueTrajectory& trajectory, const EventStream& stream, double t) {
    const auto times = stream.times().first(trajectory.size());
    return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

// Calls fn(a, b, q) for each constant piece [a, b) of Q clipped to [t0, t1].
template <typename Fn>
void for_each_piece(const QueueTrajectory& trajectory, const EventStream& stream, double t0, double t1,
                    Fn&& fn) {
    const std::size_t n = trajectory.size();
    std::size_t i = simulated_count(trajectory, stream, t0);
    double a = t0;
    std::int64_t q = i == 0 ? trajectory.initial : trajectory.post[i - 1];
    while (a < t1) {
        const double b = i < n ? std::min(stream.time(i), t1) : t1;
        if (b > a) {
            fn(a, b, q);
        }
        if (i >= n || stream.time(i) >= t1) {
            break;
        }
        a = stream.time(i);
        q = trajectory.post[i];
        ++i;
    }
}

}  // namespace

std::int64_t QueueTrajectory::at(const EventStream& stream, double t) const {
    check_range(*this, t);
    const std::size_t k = simulated_count(*this, stream, t);
    return k == 0 ? initial : post[k - 1];
}

SimResult run_simulation(const EventStream& stream, Policy& policy, const SimOptions& options) {
    if (options.q0 < 0) {
        throw ArgumentError("initial queue must be >= 0");
    }
    if (!(options.burn_in_fraction >= 0.0) || options.burn_in_fraction >= 1.0) {
        throw ConfigError("burn-in fraction must lie in [0, 1)", "burn_in");
    }
    const double until = options.until.value_or(stream.horizon());
    const auto n_sim = static_cast<std::size_t>(stream.count_events(until));
    const double lookahead = policy.lookahead();
    const auto times = stream.times();
    const auto marks = stream.marks();

    SimResult result;
    auto& traj = result.trajectory;
    traj.initial = options.q0;
    traj.end_time = until;
    traj.pre.resize(n_sim);
    traj.post.resize(n_sim);
    result.trace.decisions.assign(n_sim, 0);

    std::int64_t q = options.q0;
    std::size_t window_end = 0;
    for (std::size_t n = 0; n < n_sim; ++n) {
        traj.pre[n] = q;
        if (marks[n] == 1) {
            const double horizon_edge = times[n] + lookahead;
            window_end = std::max(window_end, n + 1);
            while (window_end < times.size() && times[window_end] <= horizon_edge) {
                ++window_end;
            }
            PolicyState state;
            state.queue = q;
            state.now = times[n];
            state.current_mark = 1;
            state.index = n;
            state.window_times = times.subspan(n, window_end - n);
            state.window_marks = marks.subspan(n, window_end - n);
            if (policy.decide(state)) {
                result.trace.decisions[n] = 1;
            } else {
                ++q;
            }
        } else if (q > 0) {
            --q;
        }
        traj.post[n] = q;
    }

    auto& m = result.metrics;
    const auto first = static_cast<std::size_t>(std::floor(options.burn_in_fraction * static_cast<double>(n_sim)));
    m.n_events = static_cast<std::int64_t>(n_sim - first);
    m.measured_from = first == 0 ? 0.0 : times[first];
    m.measured_to = until;
    if (m.n_events > 0) {
        double queue_sum = 0.0;
        for (std::size_t n = first; n < n_sim; ++n) {
            queue_sum += static_cast<double>(traj.pre[n]);
            m.diversions += result.trace.decisions[n];
            if (marks[n] == -1 && traj.pre[n] == 0) {
                ++m.wasted_count;
            }
        }
        m.mean_queue = queue_sum / static_cast<double>(m.n_events);
        m.diversion_rate = stream.params().event_rate() * static_cast<double>(m.diversions) /
                           static_cast<double>(m.n_events);
    }
    const double span = m.measured_to - m.measured_from;
    if (span > 0.0) {
        double area = 0.0;
        for_each_piece(traj, stream, m.measured_from, m.measured_to,
                       [&](double a, double b, std::int64_t v) { area += static_cast<double>(v) * (b - a); });
        m.mean_queue_time = area / span;
        m.wasted_rate = static_cast<double>(m.wasted_count) / span;
    }
    return result;
}

SimResult run_simulation(const EventStream& stream, Policy& policy, std::int64_t q0) {
    SimOptions options;
    options.q0 = q0;
    return run_simulation(stream, policy, options);
}

QueueTrajectory replay_decisions(const EventStream& stream, const DecisionTrace& trace, std::int64_t q0) {
    if (trace.size() > stream.size()) {
        throw ArgumentError("decision trace longer than stream");
    }
    QueueTrajectory traj;
    traj.initial = q0;
    traj.end_time = trace.size() == stream.size() ? stream.horizon()
                    : trace.size() == 0          ? 0.0
                                                 : stream.time(trace.size() - 1);
    std::int64_t q = q0;
    for (std::size_t n = 0; n < trace.size(); ++n) {
        traj.pre.push_back(q);
        if (stream.mark(n) == 1) {
            q += trace.decisions[n] ? 0 : 1;
        } else if (q > 0) {
            --q;
        }
        traj.post.push_back(q);
    }
    return traj;
}

std::int64_t wasted_tokens(const QueueTrajectory& trajectory, const EventStream& stream, double t) {
    check_range(trajectory, t);
    const std::size_t k = simulated_count(trajectory, stream, t);
    std::int64_t j = 0;
    for (std::size_t n = 0; n < k; ++n) {
        j += (stream.mark(n) == -1 && trajectory.pre[n] == 0) ? 1 : 0;
    }
    return j;
}

std::int64_t flow_identity_residual(const QueueTrajectory& trajectory, const DecisionTrace& trace,
                                    const EventStream& stream, double t) {
    check_range(trajectory, t);
    const std::size_t k = simulated_count(trajectory, stream, t);
    std::int64_t h = 0;
    for (std::size_t n = 0; n < k; ++n) {
        h += trace.decisions[n];
    }
    const std::int64_t q = k == 0 ? trajectory.initial : trajectory.post[k - 1];
    return q - (trajectory.initial + stream.net_input(0.0, t).value + wasted_tokens(trajectory, stream, t) - h);
}

std::vector<std::int64_t> flow_identity_residuals(const QueueTrajectory& trajectory, const DecisionTrace& trace,
                                                  const EventStream& stream) {
    std::vector<std::int64_t> out(trajectory.size());
    std::int64_t walk = 0;
    std::int64_t wasted = 0;
    std::int64_t diverted = 0;
    for (std::size_t n = 0; n < trajectory.size(); ++n) {
        walk += stream.mark(n);
        wasted += (stream.mark(n) == -1 && trajectory.pre[n] == 0) ? 1 : 0;
        diverted += trace.decisions[n];
        out[n] = trajectory.post[n] - (trajectory.initial + walk + wasted - diverted);
    }
    return out;
}

std::int64_t window_diversions(const DecisionTrace& trace, const EventStream& stream, double a, double b) {
    if (a > b) {
        throw ArgumentError("window_diversions requires a <= b");
    }
    const auto lo = std::min<std::size_t>(static_cast<std::size_t>(stream.count_events(a)), trace.size());
    const auto hi = std::min<std::size_t>(static_cast<std::size_t>(stream.count_events(b)), trace.size());
    std::int64_t y = 0;
    for (std::size_t n = lo; n < hi; ++n) {
        y += trace.decisions[n];
    }
    return y;
}

double occupancy_fraction(const QueueTrajectory& trajectory, const EventStream& stream,
                          std::int64_t q_level, double t0, double t1) {
    if (!(t0 < t1)) {
        throw ArgumentError("occupancy_fraction requires t0 < t1");
    }
    check_range(trajectory, t0);
    check_range(trajectory, t1);
    double low = 0.0;
    for_each_piece(trajectory, stream, t0, t1, [&](double a, double b, std::int64_t v) {
        if (v <= q_level) {
            low += b - a;
        }
    });
    return low / (t1 - t0);
}

double last_low_time(const QueueTrajectory& trajectory, const EventStream& stream,
                     std::int64_t q_level, double t_start, double duration) {
    if (!(duration > 0.0)) {
        throw ArgumentError("last_low_time requires duration > 0");
    }
    check_range(trajectory, t_start);
    check_range(trajectory, t_start + duration);
    double v = 0.0;
    for_each_piece(trajectory, stream, t_start, t_start + duration, [&](double, double b, std::int64_t q) {
        if (q <= q_level) {
            v = b - t_start;
        }
    });
    return std::min(v, duration);
}

void write_trajectory_csv(std::ostream& out, const EventStream& stream, const SimResult& result) {
    out << "n,time,mark,H,Q_pre,Q_post\n";
    const auto& traj = result.trajectory;
    for (std::size_t n = 0; n < traj.size(); ++n) {
        out << (n + 1) << ',' << format_double(stream.time(n)) << ',' << int{stream.mark(n)} << ','
            << int{result.trace.decisions[n]} << ',' << traj.pre[n] << ',' << traj.post[n] << '\n';
    }
}

}  // namespace admitlab
