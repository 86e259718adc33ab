#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace admitlab {

// (lambda, p, W): arrival rate, diversion budget, lookahead length.
// Valid parameters are in the overload regime 1 - p < lambda < 1.
struct ModelParams {
    double lambda = 0.9;
    double p = 0.5;
    double window = 0.0;

    // Throws ConfigError naming the offending field.
    void validate() const;

    // lambda - (1 - p), the up-drift of the admit-everything walk.
    double drift() const noexcept { return lambda - (1.0 - p); }
    // Total rate of the merged arrival and service-token process.
    double event_rate() const noexcept { return lambda + 1.0 - p; }
    // Probability that a given event is an arrival.
    double arrival_probability() const noexcept { return lambda / event_rate(); }
};

ModelParams make_params(double lambda, double p, double window = 0.0);

// Net input S(s, t) over an interval: arrivals minus tokens.
struct WalkIncrement {
    std::int64_t value = 0;
    friend bool operator==(WalkIncrement, WalkIncrement) = default;
};

enum class ExtremeMode { min, max };

struct WalkExtreme {
    std::int64_t value = 0;
    double epoch = 0.0;
};

// A realized merged sample path {(Z_n, R_n)} on (0, horizon]. Immutable
// after construction. Event indices are 0-based in code; the n-th event of
// the counting process N(t) is index n - 1.
class EventStream {
public:
    EventStream() = default;
    // Validates strictly increasing times in (0, horizon] and marks in {+1, -1}.
    EventStream(std::vector<double> times, std::vector<std::int8_t> marks, double horizon,
                ModelParams params = {});

    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }
    double horizon() const noexcept { return horizon_; }
    const ModelParams& params() const noexcept { return params_; }

    std::span<const double> times() const noexcept { return times_; }
    std::span<const std::int8_t> marks() const noexcept { return marks_; }
    double time(std::size_t i) const { return times_[i]; }
    std::int8_t mark(std::size_t i) const { return marks_[i]; }

    // N(t) = #{n : Z_n <= t}. Throws RangeError outside [0, horizon].
    std::int64_t count_events(double t) const;

    // S(s, t), summed over events in (s, t].
    WalkIncrement net_input(double s, double t) const;

    // S(0, Z_{i+1}) i.e. the walk right after event index i; prefix(-1) would be 0.
    std::int64_t walk_after(std::size_t i) const { return prefix_[i + 1]; }
    // Sum of marks over indices [0, n).
    std::int64_t prefix(std::size_t n) const { return prefix_[n]; }

    // Extreme of u -> S(t0, u) over u in (t0, t1], with the first epoch
    // attaining it. The level 0 counts as attained at t0.
    WalkExtreme running_extreme(double t0, double t1, ExtremeMode mode) const;

    // First event epoch t in (t0, t_max] with S(t0, t) < -barrier, as the
    // elapsed time t - t0; negative when not hit.
    double first_passage_below(double t0, double barrier, double t_max) const;

    // Events in (origin, horizon], re-timed so that origin becomes 0.
    EventStream shifted(double origin) const;

    std::int64_t arrivals() const noexcept;

private:
    void check_time(double t) const;

    std::vector<double> times_;
    std::vector<std::int8_t> marks_;
    std::vector<std::int64_t> prefix_{0};
    double horizon_ = 0.0;
    ModelParams params_{};
};

// Exponential gaps at rate lambda + 1 - p with i.i.d. marks, +1 with
// probability lambda / (lambda + 1 - p). Deterministic in (params, horizon, seed).
EventStream generate_stream(const ModelParams& params, double horizon, std::uint64_t seed);

// CSV dump with header `n,time,mark`, n starting at 1.
void write_stream_csv(std::ostream& out, const EventStream& stream);

}  // namespace admitlab
