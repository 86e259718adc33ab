#include "admitlab/policy.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

#include "admitlab/analytic.hpp"
#include "admitlab/errors.hpp"

namespace admitlab {

void BudgetState::refill(double now) {
    if (now > last_refill) {
        tokens = std::min(cap, tokens + rate * (now - last_refill));
        last_refill = now;
    }
}

bool threshold_decide(std::int64_t x, const PolicyState& state) { return state.queue == x; }

bool admit_all_decide(const PolicyState&) { return false; }

std::int64_t certified_queue_floor(const PolicyState& state) {
    std::int64_t level = state.queue;
    std::int64_t floor = level;
    for (std::size_t j = 1; j < state.window_size(); ++j) {
        level += state.window_marks[j];
        floor = std::min(floor, level);
    }
    return floor;
}

bool windowed_drain_decide(const ModelParams& params, BudgetState& budget, const PolicyState& state) {
    (void)params;
    budget.refill(state.now);
    if (state.current_mark != 1 || !budget.can_spend()) {
        return false;
    }
    if (certified_queue_floor(state) < 1) {
        return false;
    }
    budget.spend();
    return true;
}

PolicySpec PolicySpec::parse(const std::string& text) {
    PolicySpec spec;
    if (text == "admit-all") {
        spec.kind = Kind::admit_all;
    } else if (text == "windowed-drain") {
        spec.kind = Kind::windowed_drain;
    } else if (text == "threshold:auto") {
        spec.kind = Kind::threshold_auto;
    } else if (text.starts_with("threshold:x=")) {
        const char* first = text.data() + 12;
        const char* last = text.data() + text.size();
        std::int64_t x = -1;
        auto [ptr, ec] = std::from_chars(first, last, x);
        if (ec != std::errc{} || ptr != last || first == last || x < 0) {
            throw ConfigError("threshold policy needs a nonnegative integer x: '" + text + "'", "policy");
        }
        spec.kind = Kind::threshold;
        spec.x = x;
    } else {
        throw ConfigError("unknown policy '" + text + "'", "policy");
    }
    return spec;
}

std::string PolicySpec::to_string() const {
    switch (kind) {
        case Kind::threshold: return "threshold:x=" + std::to_string(x);
        case Kind::threshold_auto: return "threshold:auto";
        case Kind::windowed_drain: return "windowed-drain";
        case Kind::admit_all: return "admit-all";
    }
    return "admit-all";
}

ThresholdPolicy::ThresholdPolicy(std::int64_t x) : x_(x) {
    if (x < 0) {
        throw ConfigError("threshold must be >= 0", "policy");
    }
}

double drain_initial_credit(const ModelParams& params) { return std::max(1.0, params.p * params.window); }

BudgetState drain_budget(const ModelParams& params) {
    // unused credit carries over; a finite cap would push the queue to
    // order 1/(1 - lambda) (see README)
    return {drain_initial_credit(params), params.p, std::numeric_limits<double>::infinity(), 0.0};
}

WindowedDrainPolicy::WindowedDrainPolicy(const ModelParams& params)
    : params_(params), budget_(drain_budget(params)) {
    params_.validate();
}

std::int64_t WindowedDrainPolicy::window_floor(const PolicyState& state) {
    // positions k index the walk after event k - 1; the arrival at n is
    // left out, so the reference position is n + 1
    const std::size_t n = state.index;
    const std::size_t ref = n + 1;
    const std::size_t last = n + state.window_size();
    if (!started_ || ref >= base_ + prefix_.size()) {
        base_ = ref;
        prefix_.assign(1, 0);
        minima_.clear();
        started_ = true;
    }
    while (base_ + prefix_.size() - 1 < last) {
        const std::size_t k = base_ + prefix_.size();
        const std::int64_t v = prefix_.back() + state.window_marks[k - 1 - n];
        prefix_.push_back(v);
        while (!minima_.empty() && prefix_[minima_.back() - base_] >= v) {
            minima_.pop_back();
        }
        minima_.push_back(k);
    }
    while (!minima_.empty() && minima_.front() <= ref) {
        minima_.pop_front();
    }
    while (base_ < ref) {
        prefix_.pop_front();
        ++base_;
    }
    std::int64_t drop = 0;
    if (!minima_.empty()) {
        drop = std::min<std::int64_t>(0, prefix_[minima_.front() - base_] - prefix_.front());
    }
    return state.queue + drop;
}

bool WindowedDrainPolicy::decide(const PolicyState& state) {
    budget_.refill(state.now);
    if (state.current_mark != 1 || !budget_.can_spend()) {
        return false;
    }
    if (window_floor(state) < 1) {
        return false;
    }
    budget_.spend();
    return true;
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const ModelParams& params) {
    switch (spec.kind) {
        case PolicySpec::Kind::admit_all: return std::make_unique<AdmitAllPolicy>();
        case PolicySpec::Kind::threshold: return std::make_unique<ThresholdPolicy>(spec.x);
        case PolicySpec::Kind::threshold_auto:
            return std::make_unique<ThresholdPolicy>(min_feasible_threshold(params));
        case PolicySpec::Kind::windowed_drain: return std::make_unique<WindowedDrainPolicy>(params);
    }
    throw ConfigError("unknown policy kind", "policy");
}

std::unique_ptr<Policy> make_policy(const std::string& spec, const ModelParams& params) {
    return make_policy(PolicySpec::parse(spec), params);
}

}  // namespace admitlab
