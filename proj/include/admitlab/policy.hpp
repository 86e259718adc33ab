#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>

#include "admitlab/stream.hpp"

namespace admitlab {

// What a policy sees at event index n: the queue just before the event and
// the lookahead content, i.e. every event in [Z_n, Z_n + W] starting with
// the current one.
struct PolicyState {
    std::int64_t queue = 0;
    double now = 0.0;
    std::int8_t current_mark = 1;
    // Absolute index of the current event in its stream.
    std::size_t index = 0;
    std::span<const double> window_times;
    std::span<const std::int8_t> window_marks;

    std::size_t window_size() const noexcept { return window_times.size(); }
    double relative_time(std::size_t j) const { return window_times[j] - now; }
};

// Continuous diversion credit refilled at `rate` up to `cap` (which may be
// infinite).
struct BudgetState {
    double tokens = 0.0;
    double rate = 0.0;
    double cap = 1.0;
    double last_refill = 0.0;

    static BudgetState full(double rate, double cap) { return {cap, rate, cap, 0.0}; }

    void refill(double now);
    bool can_spend() const noexcept { return tokens >= 1.0; }
    void spend() noexcept { tokens -= 1.0; }
};

bool threshold_decide(std::int64_t x, const PolicyState& state);
bool admit_all_decide(const PolicyState& state);

// Minimum of queue + S(now, u) over the window with the current arrival
// left out, scanning every window event.
std::int64_t certified_queue_floor(const PolicyState& state);

// Divert iff a budget unit is available and the certified floor is >= 1.
// Refills and, on divert, debits `budget`.
bool windowed_drain_decide(const ModelParams& params, BudgetState& budget, const PolicyState& state);

// Parsed policy handle: `threshold:x=<int>`, `threshold:auto`,
// `windowed-drain`, `admit-all`.
struct PolicySpec {
    enum class Kind { threshold, threshold_auto, windowed_drain, admit_all };
    Kind kind = Kind::admit_all;
    std::int64_t x = 0;

    static PolicySpec parse(const std::string& text);
    std::string to_string() const;
};

class Policy {
public:
    virtual ~Policy() = default;

    // Consulted on arrivals only. True means divert.
    virtual bool decide(const PolicyState& state) = 0;
    // Lookahead length the simulator must expose in PolicyState.
    virtual double lookahead() const noexcept { return 0.0; }
    virtual std::string name() const = 0;
};

class AdmitAllPolicy final : public Policy {
public:
    bool decide(const PolicyState& state) override { return admit_all_decide(state); }
    std::string name() const override { return "admit-all"; }
};

class ThresholdPolicy final : public Policy {
public:
    explicit ThresholdPolicy(std::int64_t x);
    bool decide(const PolicyState& state) override { return threshold_decide(x_, state); }
    std::string name() const override { return "threshold:x=" + std::to_string(x_); }
    std::int64_t threshold() const noexcept { return x_; }

private:
    std::int64_t x_;
};

// Budgeted drain with a sliding window minimum; decisions are identical to
// windowed_drain_decide on the same inputs.
class WindowedDrainPolicy final : public Policy {
public:
    explicit WindowedDrainPolicy(const ModelParams& params);
    bool decide(const PolicyState& state) override;
    double lookahead() const noexcept override { return params_.window; }
    std::string name() const override { return "windowed-drain"; }
    const BudgetState& budget() const noexcept { return budget_; }

private:
    std::int64_t window_floor(const PolicyState& state);

    ModelParams params_;
    BudgetState budget_;
    // prefix sums of marks for absolute indices [base_, base_ + prefix_.size())
    std::size_t base_ = 0;
    std::deque<std::int64_t> prefix_;
    // absolute indices with increasing prefix values (sliding minimum)
    std::deque<std::size_t> minima_;
    bool started_ = false;
};

// Starting credit of the windowed heuristic: max(1, p W).
double drain_initial_credit(const ModelParams& params);
// Credit account of the windowed heuristic: starts at drain_initial_credit,
// refills at p and never overflows, so diversions in [0, t] <= credit + p t.
BudgetState drain_budget(const ModelParams& params);

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const ModelParams& params);
std::unique_ptr<Policy> make_policy(const std::string& spec, const ModelParams& params);

}  // namespace admitlab
