#include <cmath>
#include <sstream>

#include "doctest.h"

#include "admitlab/errors.hpp"
#include "admitlab/rng.hpp"
#include "admitlab/stream.hpp"

using namespace admitlab;

namespace {

EventStream hand_stream(std::vector<double> t, std::vector<std::int8_t> m, double horizon = 10.0) {
    return EventStream(std::move(t), std::move(m), horizon);
}

}  // namespace

TEST_CASE("model params enforce the overload regime") {
    CHECK_NOTHROW(make_params(0.9, 0.5, 3.0));
    CHECK_THROWS_AS(make_params(0.5, 0.5), ConfigError);
    CHECK_THROWS_AS(make_params(0.4, 0.5), ConfigError);
    CHECK_THROWS_AS(make_params(1.0, 0.5), ConfigError);
    CHECK_THROWS_AS(make_params(0.9, 0.0), ConfigError);
    CHECK_THROWS_AS(make_params(0.9, 0.5, -1.0), ConfigError);
    CHECK_THROWS_AS(make_params(0.9, 0.5, INFINITY), ConfigError);
    try {
        make_params(0.3, 0.5);
    } catch (const ConfigError& e) {
        CHECK(e.field() == "lambda");
    }
    const auto params = make_params(0.9, 0.5);
    CHECK(params.drift() == doctest::Approx(0.4));
    CHECK(params.arrival_probability() == doctest::Approx(9.0 / 14.0));
}

TEST_CASE("generated stream matches the superposed Poisson law") {
    const auto params = make_params(0.9, 0.5);
    const auto stream = generate_stream(params, 1e4, 7);
    const double mean = params.event_rate() * 1e4;
    CHECK(std::abs(static_cast<double>(stream.size()) - mean) <= 4.0 * std::sqrt(mean));

    const double n = static_cast<double>(stream.size());
    const double frac = static_cast<double>(stream.arrivals()) / n;
    const double q = 9.0 / 14.0;
    CHECK(std::abs(frac - q) <= 4.0 * std::sqrt(q * (1.0 - q) / n));

    double prev = 0.0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        REQUIRE(stream.time(i) > prev);
        prev = stream.time(i);
    }
    CHECK(prev <= stream.horizon());
}

TEST_CASE("generation is deterministic in (params, horizon, seed)") {
    const auto params = make_params(0.95, 0.3);
    const auto a = generate_stream(params, 1e4, 42);
    const auto b = generate_stream(params, 1e4, 42);
    const auto c = generate_stream(params, 1e4, 43);
    REQUIRE(a.size() == b.size());
    CHECK(std::equal(a.times().begin(), a.times().end(), b.times().begin()));
    CHECK(std::equal(a.marks().begin(), a.marks().end(), b.marks().begin()));
    CHECK_FALSE((a.size() == c.size() && std::equal(a.times().begin(), a.times().end(), c.times().begin())));
    // a longer horizon extends the same path
    const auto longer = generate_stream(params, 2e4, 42);
    CHECK(std::equal(a.times().begin(), a.times().end(), longer.times().begin()));

    CHECK_THROWS_AS(generate_stream(params, INFINITY, 1), ConfigError);
    CHECK_THROWS_AS(generate_stream(params, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_stream(ModelParams{0.2, 0.5, 0.0}, 10.0, 1), ConfigError);
}

TEST_CASE("derived seeds differ across indices and masters") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}

TEST_CASE("count_events is closed on the right") {
    const auto s = hand_stream({1.0, 2.0, 3.0}, {1, 1, -1});
    CHECK(s.count_events(0.0) == 0);
    CHECK(s.count_events(2.5) == 2);
    CHECK(s.count_events(2.0) == 2);
    CHECK(s.count_events(3.0) == 3);
    CHECK(s.count_events(10.0) == 3);
    CHECK_THROWS_AS(s.count_events(10.5), RangeError);
    CHECK_THROWS_AS(s.count_events(-1.0), RangeError);
}

TEST_CASE("net_input sums marks over (s, t]") {
    const auto s = hand_stream({1.0, 2.0, 3.0}, {1, 1, -1});
    CHECK(s.net_input(1.5, 1.5).value == 0);
    CHECK(s.net_input(0.0, 2.5).value == 2);
    CHECK(s.net_input(0.0, 3.0).value == 1);
    CHECK(s.net_input(1.0, 3.0).value == 0);
    CHECK_THROWS_AS(s.net_input(2.0, 1.0), ArgumentError);
}

TEST_CASE("running_extreme reports the first epoch attaining the extreme") {
    const auto s = hand_stream({1.0, 2.0, 3.0}, {1, -1, -1});
    const auto mn = s.running_extreme(0.0, 3.0, ExtremeMode::min);
    CHECK(mn.value == -1);
    CHECK(mn.epoch == 3.0);
    const auto mx = s.running_extreme(0.0, 3.0, ExtremeMode::max);
    CHECK(mx.value == 1);
    CHECK(mx.epoch == 1.0);
    const auto empty = s.running_extreme(1.5, 1.5, ExtremeMode::min);
    CHECK(empty.value == 0);
    CHECK(empty.epoch == 1.5);
}

TEST_CASE("net_input equals the brute-force mark count and is additive") {
    const auto params = make_params(0.8, 0.4);
    const auto stream = generate_stream(params, 500.0, 11);
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        double a = rng.uniform() * 500.0, b = rng.uniform() * 500.0, c = rng.uniform() * 500.0;
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        std::int64_t up = 0, down = 0;
        for (std::size_t i = 0; i < stream.size(); ++i) {
            if (stream.time(i) > a && stream.time(i) <= c) {
                (stream.mark(i) == 1 ? up : down) += 1;
            }
        }
        const auto whole = stream.net_input(a, c).value;
        REQUIRE(whole == up - down);
        REQUIRE(stream.net_input(a, b).value + stream.net_input(b, c).value == whole);
        REQUIRE(std::abs(whole) <= stream.count_events(c) - stream.count_events(a));
    }
}

TEST_CASE("mean net input follows the drift") {
    const auto params = make_params(0.9, 0.5);
    const double t = 10.0;
    const int seeds = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < seeds; ++s) {
        const auto v = static_cast<double>(generate_stream(params, t, derive_seed(99, s)).net_input(0.0, t).value);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / seeds;
    const double se = std::sqrt((sumsq / seeds - mean * mean) / seeds);
    CHECK(std::abs(mean - params.drift() * t) <= 4.0 * se);
}

TEST_CASE("first passage and re-timing") {
    const auto s = hand_stream({1.0, 2.0, 3.0, 4.0, 5.0}, {1, -1, -1, -1, 1});
    CHECK(s.first_passage_below(0.0, 1.0, 10.0) == doctest::Approx(4.0));
    CHECK(s.first_passage_below(0.0, 0.5, 10.0) == doctest::Approx(3.0));
    CHECK(s.first_passage_below(0.0, 5.0, 10.0) < 0.0);
    CHECK(s.first_passage_below(0.0, 1.0, 3.5) < 0.0);

    const auto shifted = s.shifted(2.5);
    REQUIRE(shifted.size() == 3);
    CHECK(shifted.time(0) == doctest::Approx(0.5));
    CHECK(shifted.horizon() == doctest::Approx(7.5));
    CHECK(shifted.net_input(0.0, 7.5).value == s.net_input(2.5, 10.0).value);
}

TEST_CASE("stream construction validates its invariants") {
    CHECK_THROWS_AS(hand_stream({1.0, 1.0}, {1, 1}), ArgumentError);
    CHECK_THROWS_AS(hand_stream({1.0, 2.0}, {1}), ArgumentError);
    CHECK_THROWS_AS(hand_stream({1.0}, {0}), ArgumentError);
    CHECK_THROWS_AS(hand_stream({11.0}, {1}), ArgumentError);
    CHECK_THROWS_AS(hand_stream({0.0}, {1}), ArgumentError);
}

TEST_CASE("stream CSV dump") {
    const auto s = hand_stream({1.0, 2.5}, {1, -1});
    std::ostringstream out;
    write_stream_csv(out, s);
    CHECK(out.str() == "n,time,mark\n1,1,1\n2,2.5,-1\n");
}
