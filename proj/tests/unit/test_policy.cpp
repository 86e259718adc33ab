#include <cmath>
#include <vector>

#include "doctest.h"

#include "admitlab/analytic.hpp"
#include "admitlab/errors.hpp"
#include "admitlab/policy.hpp"
#include "admitlab/rng.hpp"
#include "admitlab/sim.hpp"

using namespace admitlab;

namespace {

PolicyState arrival_state(std::int64_t queue, const std::vector<double>& times, const std::vector<std::int8_t>& marks) {
    PolicyState s;
    s.queue = queue;
    s.now = times.front();
    s.current_mark = marks.front();
    s.window_times = times;
    s.window_marks = marks;
    return s;
}

// Per-decision scan with its own bucket; the reference the sliding version must match.
class NaiveDrainPolicy final : public Policy {
public:
    explicit NaiveDrainPolicy(const ModelParams& params)
        : params_(params), budget_(drain_budget(params)) {}
    bool decide(const PolicyState& state) override { return windowed_drain_decide(params_, budget_, state); }
    double lookahead() const noexcept override { return params_.window; }
    std::string name() const override { return "naive"; }

private:
    ModelParams params_;
    BudgetState budget_;
};

// Events of `a` up to `cut`, then those of `b` after `cut`.
EventStream splice(const EventStream& a, const EventStream& b, double cut) {
    std::vector<double> t;
    std::vector<std::int8_t> m;
    for (std::size_t i = 0; i < a.size() && a.time(i) <= cut; ++i) {
        t.push_back(a.time(i));
        m.push_back(a.mark(i));
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b.time(i) > cut) {
            t.push_back(b.time(i));
            m.push_back(b.mark(i));
        }
    }
    return EventStream(std::move(t), std::move(m), std::max(a.horizon(), b.horizon()), a.params());
}

}  // namespace

TEST_CASE("threshold decisions depend only on the queue") {
    const std::vector<double> t{1.0, 1.5};
    const std::vector<std::int8_t> m{1, -1};
    CHECK(threshold_decide(2, arrival_state(2, t, m)));
    CHECK_FALSE(threshold_decide(2, arrival_state(1, t, m)));
    CHECK(threshold_decide(0, arrival_state(0, t, m)));

    const auto params = make_params(0.9, 0.5);
    const auto stream = generate_stream(params, 1000.0, 5);
    ThresholdPolicy zero(0);
    const auto run = run_simulation(stream, zero, 0);
    for (std::size_t n = 0; n < run.trajectory.size(); ++n) {
        REQUIRE(run.trajectory.post[n] == 0);
    }
}

TEST_CASE("minimal feasible threshold") {
    CHECK(min_feasible_threshold(make_params(0.9, 0.5)) == 2);
    CHECK(min_feasible_threshold(make_params(0.99, 0.5)) == 5);
    CHECK(bd_diversion_rate(make_params(0.99, 0.5), 5) == doctest::Approx(0.4983).epsilon(1e-3));
    CHECK(bd_diversion_rate(make_params(0.99, 0.5), 4) == doctest::Approx(0.5067).epsilon(1e-3));
    // lambda <= p gives a feasible x = 0
    CHECK(min_feasible_threshold(make_params(0.45, 0.6)) == 0);

    for (double p : {0.1, 0.3, 0.5, 0.8}) {
        std::int64_t prev = 0;
        for (int i = 1; i < 200; ++i) {
            const double lambda = (1.0 - p) + p * (1.0 - std::pow(0.95, i));
            const auto params = make_params(lambda, p);
            const auto x = min_feasible_threshold(params);
            REQUIRE(x >= prev);
            REQUIRE(bd_diversion_rate(params, x) <= p);
            if (x > 0) {
                REQUIRE(bd_diversion_rate(params, x - 1) > p);
            }
            prev = x;
        }
    }
}

TEST_CASE("windowed drain examples") {
    const auto params = make_params(0.9, 0.5, 5.0);
    auto budget = drain_budget(params);
    const std::vector<double> t{1.0, 2.0, 3.0};
    const std::vector<std::int8_t> up{1, 1, 1};
    CHECK_FALSE(windowed_drain_decide(params, budget, arrival_state(0, t, up)));
    CHECK(windowed_drain_decide(params, budget, arrival_state(5, t, up)));
    CHECK(budget.tokens == doctest::Approx(2.0));

    // a token run in the window drains the certified floor
    const std::vector<std::int8_t> down{1, -1, -1};
    CHECK(certified_queue_floor(arrival_state(2, t, down)) == 0);
    CHECK_FALSE(windowed_drain_decide(params, budget, arrival_state(2, t, down)));
    CHECK(windowed_drain_decide(params, budget, arrival_state(3, t, down)));

    // an empty bucket blocks diversion
    BudgetState empty{0.5, 0.5, 1.0, 1.0};
    CHECK_FALSE(windowed_drain_decide(params, empty, arrival_state(5, t, up)));

    // W = 0: only the current event is visible
    const std::vector<double> t0{1.0};
    const std::vector<std::int8_t> m0{1};
    auto b0 = BudgetState::full(0.5, 1.0);
    CHECK_FALSE(windowed_drain_decide(params, b0, arrival_state(0, t0, m0)));
    CHECK(windowed_drain_decide(params, b0, arrival_state(1, t0, m0)));
}

TEST_CASE("budget refill is capped") {
    auto b = BudgetState::full(0.5, 2.0);
    b.spend();
    b.spend();
    b.refill(1.0);
    CHECK(b.tokens == doctest::Approx(0.5));
    b.refill(100.0);
    CHECK(b.tokens == doctest::Approx(2.0));
    CHECK(drain_initial_credit(make_params(0.9, 0.5, 1.0)) == 1.0);
    CHECK(drain_initial_credit(make_params(0.9, 0.5, 10.0)) == 5.0);
    auto account = drain_budget(make_params(0.9, 0.5, 10.0));
    CHECK(account.tokens == 5.0);
    account.refill(1000.0);
    CHECK(account.tokens == doctest::Approx(505.0));
}

TEST_CASE("policy handles") {
    CHECK(PolicySpec::parse("threshold:x=3").x == 3);
    CHECK(PolicySpec::parse("threshold:auto").kind == PolicySpec::Kind::threshold_auto);
    CHECK(PolicySpec::parse("windowed-drain").to_string() == "windowed-drain");
    CHECK(PolicySpec::parse("admit-all").to_string() == "admit-all");
    CHECK(PolicySpec::parse("threshold:x=12").to_string() == "threshold:x=12");
    for (const char* bad : {"threshold", "threshold:x=", "threshold:x=-1", "threshold:x=1.5", "fifo", ""}) {
        CHECK_THROWS_AS(PolicySpec::parse(bad), ConfigError);
    }
    const auto params = make_params(0.9, 0.5, 3.0);
    CHECK(make_policy("threshold:auto", params)->name() == "threshold:x=2");
    CHECK(make_policy("windowed-drain", params)->lookahead() == 3.0);
    CHECK(make_policy("admit-all", params)->lookahead() == 0.0);
}

TEST_CASE("sliding window minimum matches the naive scan bit for bit") {
    Rng pick(17);
    for (int trial = 0; trial < 200; ++trial) {
        const double lambda = 0.55 + 0.44 * pick.uniform();
        const double p = (1.0 - lambda) + 0.01 + (lambda - 0.02) * pick.uniform();
        const double w = pick.uniform() < 0.25 ? 0.0 : 30.0 * pick.uniform();
        const auto params = make_params(lambda, std::min(p, 0.99), w);
        const auto stream = generate_stream(params, 2000.0, derive_seed(23, trial));
        const auto q0 = static_cast<std::int64_t>(pick.uniform() * 20.0);
        WindowedDrainPolicy fast(params);
        NaiveDrainPolicy naive(params);
        const auto a = run_simulation(stream, fast, q0);
        const auto b = run_simulation(stream, naive, q0);
        REQUIRE(a.trace.decisions == b.trace.decisions);
    }
}

TEST_CASE("decisions are (t+W)-causal") {
    const auto params = make_params(0.9, 0.5, 6.0);
    for (int trial = 0; trial < 40; ++trial) {
        const auto a = generate_stream(params, 800.0, derive_seed(31, trial));
        const auto b = generate_stream(params, 800.0, derive_seed(37, trial));
        const double cut_time = 100.0 + 5.0 * trial;
        const auto spliced = splice(a, b, cut_time + params.window);
        for (const char* handle : {"windowed-drain", "threshold:auto", "admit-all"}) {
            auto pa = make_policy(handle, params);
            auto pb = make_policy(handle, params);
            const auto ra = run_simulation(a, *pa, 3);
            const auto rb = run_simulation(spliced, *pb, 3);
            const auto shared = static_cast<std::size_t>(a.count_events(cut_time));
            for (std::size_t n = 0; n < shared; ++n) {
                REQUIRE(ra.trace.decisions[n] == rb.trace.decisions[n]);
            }
        }
    }
}

TEST_CASE("pathwise policy invariants") {
    for (int trial = 0; trial < 100; ++trial) {
        const auto params = make_params(0.9 + 0.009 * (trial % 10), 0.5, 2.0 + trial % 7);
        const auto stream = generate_stream(params, 1500.0, derive_seed(41, trial));
        AdmitAllPolicy admit;
        const auto base = run_simulation(stream, admit, 0);
        const auto x = min_feasible_threshold(params);
        for (const char* handle : {"windowed-drain", "threshold:auto", "threshold:x=0", "threshold:x=4"}) {
            auto policy = make_policy(handle, params);
            const auto run = run_simulation(stream, *policy, 0);
            const auto spec = PolicySpec::parse(handle);
            double diverted = 0.0;
            for (std::size_t n = 0; n < run.trajectory.size(); ++n) {
                // only arrivals are diverted
                REQUIRE((run.trace.decisions[n] == 0 || stream.mark(n) == 1));
                // admit-all dominates
                REQUIRE(run.trajectory.post[n] <= base.trajectory.post[n]);
                if (spec.kind == PolicySpec::Kind::threshold) {
                    REQUIRE(run.trajectory.post[n] <= spec.x);
                }
                if (spec.kind == PolicySpec::Kind::threshold_auto) {
                    REQUIRE(run.trajectory.post[n] <= x);
                }
                if (spec.kind == PolicySpec::Kind::windowed_drain) {
                    diverted += run.trace.decisions[n];
                    REQUIRE(diverted <= drain_initial_credit(params) + params.p * stream.time(n) + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("unbounded lookahead never wastes a token admit-all would keep") {
    for (int trial = 0; trial < 50; ++trial) {
        const double horizon = 400.0;
        const auto params = make_params(0.92, 0.5, horizon);
        const auto stream = generate_stream(params, horizon, derive_seed(53, trial));
        AdmitAllPolicy admit;
        WindowedDrainPolicy drain(params);
        const auto base = run_simulation(stream, admit, trial % 3);
        const auto run = run_simulation(stream, drain, trial % 3);
        std::int64_t diversions = 0;
        for (std::size_t n = 0; n < stream.size(); ++n) {
            diversions += run.trace.decisions[n];
            if (stream.mark(n) == -1 && run.trajectory.pre[n] == 0) {
                REQUIRE(base.trajectory.pre[n] == 0);
            }
        }
        CHECK(wasted_tokens(run.trajectory, stream, horizon) == wasted_tokens(base.trajectory, stream, horizon));
        if (trial == 0) {
            CHECK(diversions > 0);
        }
    }
}
