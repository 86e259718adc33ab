#include "admitlab/excursion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "admitlab/analytic.hpp"
#include "admitlab/errors.hpp"
#include "admitlab/format.hpp"
#include "admitlab/parallel.hpp"
#include "admitlab/rng.hpp"
#include "admitlab/sim.hpp"

namespace admitlab {

void ExcursionConfig::validate() const {
    params.validate();
    if (!(params.window > 0.0)) {
        throw ConfigError("excursion window must be > 0", "window");
    }
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw ConfigError("k must be finite and > 0", "k");
    }
    if (!(zeta > 0.0) || !std::isfinite(zeta)) {
        throw ConfigError("zeta must be finite and > 0", "zeta");
    }
    if (!(phi > 0.0) || !std::isfinite(phi)) {
        throw ConfigError("phi must be finite and > 0", "phi");
    }
    if (!(epsilon > 0.0) || epsilon >= std::min(zeta, params.drift())) {
        throw ConfigError("epsilon must lie in (0, min(zeta, lambda - (1 - p)))", "epsilon");
    }
    if (!(q_ref >= 0.0) || !std::isfinite(q_ref)) {
        throw ConfigError("q_ref must be finite and >= 0", "q_ref");
    }
}

double e1_required_slack(const EventStream& stream, const ExcursionConfig& config) {
    const double drift = config.params.drift();
    const double eps = config.epsilon;
    const double u1 = config.u1();
    const auto first = static_cast<std::size_t>(stream.count_events(u1));
    const auto last = static_cast<std::size_t>(stream.count_events(config.u2()));
    auto excess = [&](std::int64_t s, double u) {
        return std::abs(static_cast<double>(s) - drift * u) - eps * u;
    };
    // u -> 0+ has S = 0, excess 0
    double worst = 0.0;
    std::int64_t s = 0;
    for (std::size_t i = first; i < last; ++i) {
        const double u = stream.time(i) - u1;
        worst = std::max(worst, excess(s, u));
        s += stream.mark(i);
        worst = std::max(worst, excess(s, u));
    }
    worst = std::max(worst, excess(s, config.segment()));
    return worst;
}

EventIndicators evaluate_events(const EventStream& stream, const ExcursionConfig& config) {
    config.validate();
    if (stream.horizon() < config.required_horizon()) {
        throw ConfigError("stream horizon " + format_double(stream.horizon()) + " is shorter than U3 + phi W = " +
                              format_double(config.required_horizon()),
                          "horizon");
    }
    EventIndicators ind;
    const double w2 = 2.0 * config.window();
    ind.e1 = e1_required_slack(stream, config) <= config.zeta;
    ind.e3 = static_cast<double>(stream.net_input(0.0, config.u1()).value) <= w2;
    ind.e4 = static_cast<double>(stream.net_input(config.u2(), config.u3()).value) <= w2;
    const double z = stream.first_passage_below(config.u3(), config.barrier(), stream.horizon());
    if (z >= 0.0) {
        ind.z_value = z;
    }
    ind.e5 = ind.z_value.has_value() && *ind.z_value <= config.deadline();
    return ind;
}

EventIndicators evaluate_events(const EventStream& stream, const ExcursionConfig& config,
                                std::int64_t queue_at_zero) {
    auto ind = evaluate_events(stream, config);
    ind.e2 = static_cast<double>(queue_at_zero) <= 6.0 * config.q_ref;
    return ind;
}

double ExcursionReport::max_abs_correlation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            worst = std::max(worst, std::abs(correlation[i][j]));
        }
    }
    return worst;
}

ExcursionReport estimate_event_probs(const ExcursionConfig& config, std::int64_t n_samples,
                                     std::uint64_t seed, unsigned workers, bool keep_samples) {
    config.validate();
    if (n_samples < 100) {
        throw ConfigError("n_samples must be >= 100", "n_samples");
    }
    const double horizon = config.required_horizon();
    auto samples = parallel_map(static_cast<std::size_t>(n_samples), workers, [&](std::size_t i) {
        const auto stream = generate_stream(config.params, horizon, derive_seed(seed, i));
        return evaluate_events(stream, config);
    });

    ExcursionReport report;
    report.n_samples = n_samples;
    std::array<std::vector<double>, 4> columns;
    for (auto& c : columns) {
        c.reserve(samples.size());
    }
    for (const auto& s : samples) {
        columns[0].push_back(s.e1 ? 1.0 : 0.0);
        columns[1].push_back(s.e3 ? 1.0 : 0.0);
        columns[2].push_back(s.e4 ? 1.0 : 0.0);
        columns[3].push_back(s.e5 ? 1.0 : 0.0);
    }
    for (std::size_t e = 0; e < 4; ++e) {
        std::int64_t hits = 0;
        for (double v : columns[e]) {
            hits += v > 0.5 ? 1 : 0;
        }
        report.events[e] = estimate_proportion(hits, n_samples);
    }
    for (std::size_t i = 0; i < 4; ++i) {
        report.correlation[i][i] = 1.0;
        for (std::size_t j = i + 1; j < 4; ++j) {
            const double c = correlation(columns[i], columns[j]);
            report.correlation[i][j] = c;
            report.correlation[j][i] = c;
        }
    }
    const double p5 = report.events[3].estimate;
    report.e5_log_prob_per_window =
        p5 > 0.0 ? std::log(p5) / config.window() : -std::numeric_limits<double>::infinity();
    if (keep_samples) {
        report.samples = std::move(samples);
    }
    return report;
}

std::vector<ProportionEstimate> e1_probability_by_slack(const ExcursionConfig& config,
                                                        std::span<const double> zetas,
                                                        std::int64_t n_samples, std::uint64_t seed,
                                                        unsigned workers) {
    config.validate();
    const double horizon = config.u2();
    const auto slack = parallel_map(static_cast<std::size_t>(n_samples), workers, [&](std::size_t i) {
        const auto stream = generate_stream(config.params, horizon, derive_seed(seed, i));
        return e1_required_slack(stream, config);
    });
    std::vector<ProportionEstimate> out;
    for (double zeta : zetas) {
        ExcursionConfig c = config;
        c.zeta = zeta;
        c.validate();
        const auto hits = std::count_if(slack.begin(), slack.end(), [&](double s) { return s <= zeta; });
        out.push_back(estimate_proportion(hits, n_samples));
    }
    return out;
}

E5RateFit e5_rate_fit(const ExcursionConfig& base, std::span<const double> windows,
                      std::int64_t n_samples, std::uint64_t seed, unsigned workers) {
    for (std::size_t i = 1; i < windows.size(); ++i) {
        if (!(windows[i] > windows[i - 1])) {
            throw ArgumentError("window grid must be strictly increasing");
        }
    }
    E5RateFit fit;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        ExcursionConfig c = base;
        c.params.window = windows[w];
        c.validate();
        const double horizon = c.required_horizon();
        const auto hits = parallel_map(static_cast<std::size_t>(n_samples), workers, [&](std::size_t i) {
            const auto stream = generate_stream(c.params, horizon, derive_seed(derive_seed(seed, w), i));
            const double z = stream.first_passage_below(c.u3(), c.barrier(), c.u3() + c.deadline());
            return z >= 0.0 ? 1 : 0;
        });
        std::int64_t total = 0;
        for (int h : hits) {
            total += h;
        }
        const auto est = estimate_proportion(total, n_samples);
        fit.windows.push_back(windows[w]);
        fit.probabilities.push_back(est);
        const bool usable = total > 0;
        fit.used.push_back(usable);
        if (usable) {
            xs.push_back(windows[w]);
            ys.push_back(-std::log(est.estimate));
        } else {
            fit.dropped_points = true;
        }
    }
    if (xs.size() < 3) {
        throw EstimationError("fewer than three window values with E5 hits; raise n_samples or shrink the grid");
    }
    const auto line = fit_line(xs, ys);
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.r_squared = line.r_squared;
    return fit;
}

double reference_mean_queue(const PolicySpec& policy, const ModelParams& params, std::uint64_t seed,
                            double events) {
    params.validate();
    if (policy.kind == PolicySpec::Kind::threshold) {
        return bd_stationary(params, policy.x).mean_queue;
    }
    if (policy.kind == PolicySpec::Kind::threshold_auto) {
        return bd_stationary(params, min_feasible_threshold(params)).mean_queue;
    }
    const double horizon = events / params.event_rate();
    const auto stream = generate_stream(params, horizon + params.window, seed);
    auto handle = make_policy(policy, params);
    SimOptions options;
    options.until = horizon;
    return run_simulation(stream, *handle, options).metrics.mean_queue;
}

namespace {

struct DiagnosticPass {
    std::vector<DiagnosticSample> samples;
    double warmup_time = 0.0;
};

DiagnosticPass run_diagnostic_pass(const ExcursionConfig& config, const PolicySpec& policy,
                                   std::int64_t n_samples, std::uint64_t seed, double warmup_time,
                                   unsigned workers) {
    const double end = warmup_time + config.required_horizon();
    const double stream_horizon = end + config.window();
    const auto low_level = static_cast<std::int64_t>(std::floor(2.0 * config.q_ref));
    DiagnosticPass pass;
    pass.warmup_time = warmup_time;
    pass.samples = parallel_map(static_cast<std::size_t>(n_samples), workers, [&](std::size_t i) {
        const auto stream = generate_stream(config.params, stream_horizon, derive_seed(seed, i));
        auto handle = make_policy(policy, config.params);
        SimOptions options;
        options.burn_in_fraction = 0.0;
        options.until = end;
        const auto run = run_simulation(stream, *handle, options);
        const auto& traj = run.trajectory;

        DiagnosticSample s;
        s.queue_at_zero = traj.at(stream, warmup_time);
        s.events = evaluate_events(stream.shifted(warmup_time), config, s.queue_at_zero);
        s.l0 = static_cast<double>(s.queue_at_zero) <= 2.0 * config.q_ref;
        s.y = window_diversions(run.trace, stream, warmup_time + config.u1(), warmup_time + config.u2());
        s.y_over_b = static_cast<double>(s.y) / config.segment();
        s.v = last_low_time(traj, stream, low_level, warmup_time + config.u1(), config.segment());
        s.wasted = wasted_tokens(traj, stream, end) - wasted_tokens(traj, stream, warmup_time);
        return s;
    });
    return pass;
}

void summarize(DiagnosticReport& report, const std::vector<DiagnosticSample>& samples) {
    std::int64_t e1_hits = 0, e2_hits = 0, l0_hits = 0;
    std::vector<double> y, v, j, l0;
    for (const auto& s : samples) {
        e1_hits += s.events.e1 ? 1 : 0;
        e2_hits += s.events.e2.value_or(false) ? 1 : 0;
        l0_hits += s.l0 ? 1 : 0;
        if (s.events.e1 && s.events.e2.value_or(false)) {
            y.push_back(s.y_over_b);
            v.push_back(s.v);
            j.push_back(static_cast<double>(s.wasted));
            l0.push_back(s.l0 ? 1.0 : 0.0);
        }
    }
    const auto n = static_cast<std::int64_t>(samples.size());
    report.n_samples = n;
    report.e1 = estimate_proportion(e1_hits, n);
    report.e2 = estimate_proportion(e2_hits, n);
    report.l0_overall = estimate_proportion(l0_hits, n);
    report.conditioned = static_cast<std::int64_t>(y.size());
    report.too_few_conditioned = report.conditioned < 50;
    report.y_over_b = estimate_mean(y);
    report.v = estimate_mean(v);
    report.wasted = estimate_mean(j);
    report.l0 = estimate_mean(l0);
}

}  // namespace

DiagnosticReport diversion_idling_diagnostic(const ExcursionConfig& config, const PolicySpec& policy,
                                             std::int64_t n_samples, std::uint64_t seed,
                                             const DiagnosticOptions& options) {
    config.validate();
    if (n_samples < 1) {
        throw ConfigError("n_samples must be >= 1", "n_samples");
    }
    const double warmup = std::max(options.warmup_events / config.params.event_rate(),
                                   options.warmup_window_multiple * config.window());
    DiagnosticReport report;
    report.policy = policy.to_string();
    report.q_ref = config.q_ref;
    report.warmup_time = warmup;
    auto pass = run_diagnostic_pass(config, policy, n_samples, seed, warmup, options.workers);
    summarize(report, pass.samples);
    if (options.check_warmup_sensitivity) {
        DiagnosticReport doubled;
        auto second = run_diagnostic_pass(config, policy, n_samples, seed, 2.0 * warmup, options.workers);
        summarize(doubled, second.samples);
        report.warmup_shift_e2 = doubled.e2.estimate - report.e2.estimate;
        report.warmup_shift_y = doubled.y_over_b.mean - report.y_over_b.mean;
        const double ci_e2 = 1.96 * std::max(report.e2.std_error, 1.0 / static_cast<double>(n_samples));
        const double ci_y = std::max(report.y_over_b.ci_halfwidth(), 1e-12);
        report.warmup_stable = std::abs(*report.warmup_shift_e2) < ci_e2 && std::abs(*report.warmup_shift_y) < ci_y;
    }
    report.samples = std::move(pass.samples);
    return report;
}

namespace {

std::string z_field(const EventIndicators& e) { return e.z_value ? format_double(*e.z_value) : std::string{}; }

}  // namespace

void write_excursion_samples_csv(std::ostream& out, const ExcursionReport& report) {
    out << "sample,e1,e3,e4,e5,z,Y,V,J,L0\n";
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const auto& e = report.samples[i];
        out << i << ',' << e.e1 << ',' << e.e3 << ',' << e.e4 << ',' << e.e5 << ',' << z_field(e) << ",,,,\n";
    }
}

void write_diagnostic_samples_csv(std::ostream& out, const DiagnosticReport& report) {
    out << "sample,e1,e3,e4,e5,z,Y,V,J,L0\n";
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const auto& s = report.samples[i];
        const auto& e = s.events;
        out << i << ',' << e.e1 << ',' << e.e3 << ',' << e.e4 << ',' << e.e5 << ',' << z_field(e) << ','
            << s.y << ',' << format_double(s.v) << ',' << s.wasted << ',' << s.l0 << '\n';
    }
}

}  // namespace admitlab
