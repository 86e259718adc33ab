#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "admitlab/policy.hpp"
#include "admitlab/stats.hpp"
#include "admitlab/stream.hpp"

namespace admitlab {

// Base-sample-path geometry. params.window is the lookahead W; the up-drift
// segment has length B = k W and is buffered on both sides by W-length
// segments. Time markers: U1 = W, U2 = W + B, U3 = 2W + B.
struct ExcursionConfig {
    ModelParams params{0.95, 0.5, 200.0};
    double k = 24.0;
    double epsilon = 0.1;
    double zeta = 40.0;
    double phi = 1.0;
    // Stand-in for the optimal stationary mean queue.
    double q_ref = 0.0;

    void validate() const;

    double window() const noexcept { return params.window; }
    double segment() const noexcept { return k * params.window; }
    double u1() const noexcept { return params.window; }
    double u2() const noexcept { return u1() + segment(); }
    double u3() const noexcept { return u2() + params.window; }
    double deadline() const noexcept { return phi * params.window; }
    double required_horizon() const noexcept { return u3() + deadline(); }
    // Depth the walk after U3 must go below for the stopping time to fire.
    double barrier() const noexcept {
        return 6.0 * q_ref + (params.drift() - epsilon) * segment() + zeta + 4.0 * params.window;
    }
};

struct EventIndicators {
    bool e1 = false;
    bool e3 = false;
    bool e4 = false;
    bool e5 = false;
    // Z measured from U3; empty when the barrier is not crossed in the stream.
    std::optional<double> z_value;
    // Q(0) <= 6 q_ref, when a queue sample was supplied.
    std::optional<bool> e2;
};

// Smallest slack zeta for which the up-drift envelope holds on (U1, U2],
// checking post-jump values and left limits at every epoch.
double e1_required_slack(const EventStream& stream, const ExcursionConfig& config);

EventIndicators evaluate_events(const EventStream& stream, const ExcursionConfig& config);
EventIndicators evaluate_events(const EventStream& stream, const ExcursionConfig& config, std::int64_t queue_at_zero);

struct ExcursionReport {
    std::int64_t n_samples = 0;
    // e1, e3, e4, e5 in that order.
    std::array<ProportionEstimate, 4> events{};
    std::array<std::array<double, 4>, 4> correlation{};
    // ln P(E5) / W; -inf with no hits.
    double e5_log_prob_per_window = 0.0;
    std::vector<EventIndicators> samples;

    double max_abs_correlation() const;
};

ExcursionReport estimate_event_probs(const ExcursionConfig& config, std::int64_t n_samples,
                                     std::uint64_t seed, unsigned workers = 0, bool keep_samples = false);

// P(E1) at each zeta, on shared streams.
std::vector<ProportionEstimate> e1_probability_by_slack(const ExcursionConfig& config,
                                                        std::span<const double> zetas,
                                                        std::int64_t n_samples, std::uint64_t seed,
                                                        unsigned workers = 0);

struct E5RateFit {
    std::vector<double> windows;
    std::vector<ProportionEstimate> probabilities;
    std::vector<bool> used;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool dropped_points = false;
};

// Fits -ln P(E5) against W over the grid. Zero-hit points are dropped and
// flagged; fewer than three usable points is an EstimationError.
E5RateFit e5_rate_fit(const ExcursionConfig& base, std::span<const double> windows,
                      std::int64_t n_samples, std::uint64_t seed, unsigned workers = 0);

struct DiagnosticOptions {
    double warmup_events = 1e5;
    double warmup_window_multiple = 100.0;
    unsigned workers = 0;
    bool check_warmup_sensitivity = false;
};

struct DiagnosticSample {
    EventIndicators events;
    std::int64_t queue_at_zero = 0;
    // diversions in (U1, U2]
    std::int64_t y = 0;
    double y_over_b = 0.0;
    double v = 0.0;
    std::int64_t wasted = 0;
    bool l0 = false;
};

struct DiagnosticReport {
    std::string policy;
    double q_ref = 0.0;
    double warmup_time = 0.0;
    std::int64_t n_samples = 0;
    ProportionEstimate e1;
    ProportionEstimate e2;
    std::int64_t conditioned = 0;
    bool too_few_conditioned = false;
    // Means conditional on E1 and E2.
    MeanEstimate y_over_b;
    MeanEstimate v;
    MeanEstimate wasted;
    MeanEstimate l0;
    // Unconditional P(Q(0) <= 2 q_ref).
    ProportionEstimate l0_overall;
    // Doubled warm-up comparison, when requested.
    std::optional<double> warmup_shift_e2;
    std::optional<double> warmup_shift_y;
    std::optional<bool> warmup_stable;
    std::vector<DiagnosticSample> samples;
};

DiagnosticReport diversion_idling_diagnostic(const ExcursionConfig& config, const PolicySpec& policy,
                                             std::int64_t n_samples, std::uint64_t seed,
                                             const DiagnosticOptions& options = {});

// Stationary mean queue used for q_ref: the birth-death value for threshold
// policies, a long warm run otherwise.
double reference_mean_queue(const PolicySpec& policy, const ModelParams& params, std::uint64_t seed,
                            double events = 1e6);

// Per-sample CSV `sample,e1,e3,e4,e5,z,Y,V,J,L0`; the last four are empty
// for pure excursion reports.
void write_excursion_samples_csv(std::ostream& out, const ExcursionReport& report);
void write_diagnostic_samples_csv(std::ostream& out, const DiagnosticReport& report);

}  // namespace admitlab
