#include "admitlab/stream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "admitlab/errors.hpp"
#include "admitlab/format.hpp"
#include "admitlab/rng.hpp"

namespace admitlab {

void ModelParams::validate() const {
    if (!std::isfinite(p) || p <= 0.0 || p >= 1.0) {
        throw ConfigError("p must lie in (0, 1), got " + format_double(p), "p");
    }
    if (!std::isfinite(lambda) || lambda <= 1.0 - p || lambda >= 1.0) {
        throw ConfigError("lambda must lie in (1 - p, 1) = (" + format_double(1.0 - p) +
                              ", 1), got " + format_double(lambda),
                          "lambda");
    }
    if (!std::isfinite(window) || window < 0.0) {
        throw ConfigError("window must be finite and >= 0, got " + format_double(window), "window");
    }
}

ModelParams make_params(double lambda, double p, double window) {
    ModelParams params{lambda, p, window};
    params.validate();
    return params;
}

EventStream::EventStream(std::vector<double> times, std::vector<std::int8_t> marks,
                         double horizon, ModelParams params)
    : times_(std::move(times)), marks_(std::move(marks)), horizon_(horizon), params_(params) {
    if (!std::isfinite(horizon_) || horizon_ < 0.0) {
        throw ConfigError("stream horizon must be finite and >= 0", "horizon");
    }
    if (times_.size() != marks_.size()) {
        throw ArgumentError("stream times and marks differ in length");
    }
    double prev = 0.0;
    prefix_.reserve(times_.size() + 1);
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!(times_[i] > prev) || times_[i] > horizon_) {
            throw ArgumentError("stream times must be strictly increasing in (0, horizon]");
        }
        if (marks_[i] != 1 && marks_[i] != -1) {
            throw ArgumentError("stream marks must be +1 or -1");
        }
        prev = times_[i];
        prefix_.push_back(prefix_.back() + marks_[i]);
    }
}

void EventStream::check_time(double t) const {
    if (!(t >= 0.0) || t > horizon_) {
        throw RangeError("time " + format_double(t) + " outside [0, " + format_double(horizon_) + "]");
    }
}

std::int64_t EventStream::count_events(double t) const {
    check_time(t);
    return std::upper_bound(times_.begin(), times_.end(), t) - times_.begin();
}

WalkIncrement EventStream::net_input(double s, double t) const {
    if (s > t) {
        throw ArgumentError("net_input requires s <= t");
    }
    return {prefix_[count_events(t)] - prefix_[count_events(s)]};
}

WalkExtreme EventStream::running_extreme(double t0, double t1, ExtremeMode mode) const {
    if (t0 > t1) {
        throw ArgumentError("running_extreme requires t0 <= t1");
    }
    const auto first = static_cast<std::size_t>(count_events(t0));
    const auto last = static_cast<std::size_t>(count_events(t1));
    const std::int64_t base = prefix_[first];
    WalkExtreme best{0, t0};
    for (std::size_t i = first; i < last; ++i) {
        const std::int64_t v = prefix_[i + 1] - base;
        if (mode == ExtremeMode::min ? v < best.value : v > best.value) {
            best = {v, times_[i]};
        }
    }
    return best;
}

double EventStream::first_passage_below(double t0, double barrier, double t_max) const {
    const auto first = static_cast<std::size_t>(count_events(t0));
    const std::int64_t base = prefix_[first];
    for (std::size_t i = first; i < times_.size() && times_[i] <= t_max; ++i) {
        if (static_cast<double>(prefix_[i + 1] - base) < -barrier) {
            return times_[i] - t0;
        }
    }
    return -1.0;
}

EventStream EventStream::shifted(double origin) const {
    const auto first = static_cast<std::size_t>(count_events(origin));
    std::vector<double> t;
    std::vector<std::int8_t> m(marks_.begin() + static_cast<std::ptrdiff_t>(first), marks_.end());
    t.reserve(times_.size() - first);
    double prev = 0.0;
    for (std::size_t i = first; i < times_.size(); ++i) {
        double v = times_[i] - origin;
        // the subtraction can collapse adjacent epochs in floating point
        if (!(v > prev)) {
            v = std::nextafter(prev, std::numeric_limits<double>::infinity());
        }
        t.push_back(v);
        prev = v;
    }
    const double h = std::max(horizon_ - origin, t.empty() ? 0.0 : t.back());
    return EventStream(std::move(t), std::move(m), h, params_);
}

std::int64_t EventStream::arrivals() const noexcept {
    return (static_cast<std::int64_t>(size()) + prefix_.back()) / 2;
}

EventStream generate_stream(const ModelParams& params, double horizon, std::uint64_t seed) {
    params.validate();
    if (!std::isfinite(horizon) || horizon <= 0.0) {
        throw ConfigError("horizon must be finite and > 0", "horizon");
    }
    Rng rng(seed);
    const double rate = params.event_rate();
    const double p_arrival = params.arrival_probability();
    std::vector<double> times;
    std::vector<std::int8_t> marks;
    const auto expected = static_cast<std::size_t>(rate * horizon * 1.05 + 16);
    times.reserve(expected);
    marks.reserve(expected);
    double t = 0.0;
    for (;;) {
        double next = t - std::log1p(-rng.uniform()) / rate;
        if (!(next > t)) {
            next = std::nextafter(t, std::numeric_limits<double>::infinity());
        }
        if (next > horizon) {
            break;
        }
        t = next;
        times.push_back(t);
        marks.push_back(rng.uniform() < p_arrival ? std::int8_t{1} : std::int8_t{-1});
    }
    return EventStream(std::move(times), std::move(marks), horizon, params);
}

void write_stream_csv(std::ostream& out, const EventStream& stream) {
    out << "n,time,mark\n";
    for (std::size_t i = 0; i < stream.size(); ++i) {
        out << (i + 1) << ',' << format_double(stream.time(i)) << ',' << int{stream.mark(i)} << '\n';
    }
}

}  // namespace admitlab
