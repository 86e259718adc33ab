#include "admitlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "admitlab/analytic.hpp"
#include "admitlab/errors.hpp"
#include "admitlab/excursion.hpp"
#include "admitlab/format.hpp"
#include "admitlab/parallel.hpp"
#include "admitlab/policy.hpp"
#include "admitlab/rng.hpp"
#include "admitlab/sim.hpp"
#include "admitlab/stats.hpp"

#ifndef ADMITLAB_VERSION
#define ADMITLAB_VERSION "0.1.0"
#endif

namespace admitlab {

using nlohmann::json;

std::string version_string() { return ADMITLAB_VERSION; }

WindowRule WindowRule::parse(const std::string& text) {
    WindowRule rule;
    if (text == "zero") {
        return rule;
    }
    auto number = [&](std::size_t offset) {
        double v = 0.0;
        const char* first = text.data() + offset;
        const char* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last || first == last || !(v >= 0.0) || !std::isfinite(v)) {
            throw ConfigError("window rule needs a finite nonnegative constant: '" + text + "'", "window_rule");
        }
        return v;
    };
    if (text.starts_with("constant:")) {
        rule.kind = Kind::constant;
        rule.c = number(9);
    } else if (text.starts_with("log:")) {
        rule.kind = Kind::log;
        rule.c = number(4);
    } else {
        throw ConfigError("unknown window rule '" + text + "'", "window_rule");
    }
    return rule;
}

std::string WindowRule::to_string() const {
    switch (kind) {
        case Kind::constant: return "constant:" + format_double(c);
        case Kind::log: return "log:" + format_double(c);
        case Kind::zero: return "zero";
    }
    return "zero";
}

double WindowRule::window(double lambda) const {
    switch (kind) {
        case Kind::constant: return c;
        case Kind::log: return -c * std::log1p(-lambda);
        case Kind::zero: return 0.0;
    }
    return 0.0;
}

namespace {

template <typename T>
T get_field(const json& j, const char* name, T fallback) {
    if (!j.contains(name)) {
        return fallback;
    }
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + name + "' has the wrong type: " + e.what(), name);
    }
}

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) {
        throw ConfigError(message, field);
    }
}

const std::vector<std::string> kExperiments{"simulate", "analytic", "excursion", "phase", "conserve", "diagnostic"};

}  // namespace

RunConfig parse_run_config(const json& j) {
    require(j.is_object(), "", "configuration must be a JSON object");
    RunConfig c;
    c.source = j;
    require(j.contains("experiment"), "experiment", "missing required field 'experiment'");
    c.experiment = get_field<std::string>(j, "experiment", "");
    require(std::find(kExperiments.begin(), kExperiments.end(), c.experiment) != kExperiments.end(), "experiment",
            "unknown experiment kind '" + c.experiment + "'");
    require(j.contains("p"), "p", "missing required field 'p'");
    c.p = get_field<double>(j, "p", 0.5);
    require(c.p > 0.0 && c.p < 1.0, "p", "p must lie in (0, 1)");

    if (j.contains("lambdas")) {
        c.lambdas = get_field<std::vector<double>>(j, "lambdas", {});
    } else if (j.contains("lambda")) {
        c.lambdas = {get_field<double>(j, "lambda", 0.0)};
    } else if (j.contains("k_range")) {
        const auto ks = get_field<std::vector<int>>(j, "k_range", {});
        require(ks.size() == 2 && ks[0] >= 1 && ks[1] >= ks[0] && ks[1] <= 52, "k_range",
                "k_range must be [k_min, k_max] with 1 <= k_min <= k_max <= 52");
        for (int k = ks[0]; k <= ks[1]; ++k) {
            c.lambdas.push_back(1.0 - std::ldexp(1.0, -k));
        }
    }
    require(!c.lambdas.empty(), "lambdas", "missing required field 'lambdas' (or 'lambda' / 'k_range')");
    for (double lambda : c.lambdas) {
        require(lambda > 0.0 && lambda < 1.0, "lambdas", "every lambda must lie in (0, 1)");
    }

    c.window_rule = WindowRule::parse(get_field<std::string>(j, "window_rule", "zero"));
    c.c_values = get_field<std::vector<double>>(j, "c_values", {0.0, 1.0, 2.0, 4.0, 8.0});
    for (double v : c.c_values) {
        require(v >= 0.0 && std::isfinite(v), "c_values", "c_values must be finite and >= 0");
    }
    if (j.contains("policies")) {
        c.policies = get_field<std::vector<std::string>>(j, "policies", {});
    } else if (j.contains("policy")) {
        c.policies = {get_field<std::string>(j, "policy", "")};
    } else if (c.experiment == "conserve") {
        // the lookahead policy for W > 0 cells
        c.policies = {"windowed-drain"};
    }
    require(!c.policies.empty(), "policies", "at least one policy is required");
    for (const auto& p : c.policies) {
        PolicySpec::parse(p);
    }
    c.online_policy = get_field<std::string>(j, "online_policy", c.online_policy);
    PolicySpec::parse(c.online_policy);

    c.horizon = get_field<double>(j, "horizon", c.horizon);
    require(c.horizon > 0.0 && std::isfinite(c.horizon), "horizon", "horizon must be finite and > 0");
    c.seeds = get_field<std::int64_t>(j, "seeds", c.experiment == "simulate" ? 1 : c.seeds);
    require(c.seeds >= 1, "seeds", "seeds must be >= 1");
    if (c.experiment == "phase" || c.experiment == "conserve") {
        require(c.seeds >= 8, "seeds", "sweeps need at least 8 seeds per cell");
    }
    c.master_seed = get_field<std::uint64_t>(j, "master_seed", c.master_seed);
    c.workers = get_field<unsigned>(j, "workers", c.workers);
    c.burn_in = get_field<double>(j, "burn_in", c.burn_in);
    require(c.burn_in >= 0.0 && c.burn_in < 1.0, "burn_in", "burn_in must lie in [0, 1)");
    c.q0 = get_field<std::int64_t>(j, "q0", c.q0);
    require(c.q0 >= 0, "q0", "q0 must be >= 0");
    c.output_dir = get_field<std::string>(j, "output_dir", c.output_dir.string());
    c.trajectory_csv = get_field<bool>(j, "trajectory_csv", c.trajectory_csv);

    c.window = get_field<double>(j, "window", c.window);
    c.k = get_field<double>(j, "k", c.k);
    c.epsilon = get_field<double>(j, "epsilon", c.epsilon);
    c.zeta = get_field<double>(j, "zeta", c.zeta);
    c.phi = get_field<double>(j, "phi", c.phi);
    if (j.contains("q_ref") && !(j["q_ref"].is_string() && j["q_ref"] == "auto")) {
        c.q_ref = get_field<double>(j, "q_ref", 0.0);
    }
    c.n_samples = get_field<std::int64_t>(j, "n_samples", c.n_samples);
    c.e5_windows = get_field<std::vector<double>>(j, "e5_windows", {});
    c.per_sample_csv = get_field<bool>(j, "per_sample_csv", c.per_sample_csv);
    c.warmup_check = get_field<bool>(j, "warmup_check", c.warmup_check);
    c.warmup_events = get_field<double>(j, "warmup_events", c.warmup_events);

    if (c.experiment == "simulate" || c.experiment == "analytic") {
        for (double lambda : c.lambdas) {
            ModelParams{lambda, c.p, 0.0}.validate();
        }
    }
    if (c.experiment == "excursion" || c.experiment == "diagnostic") {
        require(c.lambdas.size() == 1, "lambdas", "excursion experiments take exactly one lambda");
        ExcursionConfig ec{{c.lambdas[0], c.p, c.window}, c.k, c.epsilon, c.zeta, c.phi, c.q_ref.value_or(0.0)};
        ec.validate();
        require(c.n_samples >= 100 || c.experiment == "diagnostic", "n_samples", "n_samples must be >= 100");
        require(c.n_samples >= 1, "n_samples", "n_samples must be >= 1");
    }
    return c;
}

std::vector<double> feasible_lambdas(const RunConfig& config, std::ostream* warnings) {
    std::vector<double> out;
    for (double lambda : config.lambdas) {
        if (lambda <= 1.0 - config.p) {
            if (warnings) {
                *warnings << "warning: skipping lambda=" << format_double(lambda) << " (not above 1 - p = "
                          << format_double(1.0 - config.p) << ")\n";
            }
            continue;
        }
        out.push_back(lambda);
    }
    return out;
}

namespace {

struct Cell {
    std::size_t lambda_index = 0;
    double lambda = 0.0;
    double c = 0.0;
    std::string rule;
    double window = 0.0;
    std::string policy;
};

SweepRow run_cell_seed(const RunConfig& config, const Cell& cell, std::int64_t seed) {
    const ModelParams params{cell.lambda, config.p, cell.window};
    params.validate();
    // streams shared across policies and window rules for a given (lambda, seed)
    const auto stream_seed = derive_seed(derive_seed(config.master_seed, cell.lambda_index), static_cast<std::uint64_t>(seed));
    const auto stream = generate_stream(params, config.horizon + cell.window, stream_seed);
    auto policy = make_policy(cell.policy, params);
    SimOptions options;
    options.q0 = config.q0;
    options.burn_in_fraction = config.burn_in;
    options.until = config.horizon;
    const auto run = run_simulation(stream, *policy, options);
    SweepRow row;
    row.lambda = cell.lambda;
    row.p = config.p;
    row.window_rule = cell.rule;
    row.c = cell.c;
    row.window = cell.window;
    row.policy = cell.policy;
    row.seed = seed;
    row.n_events = run.metrics.n_events;
    row.mean_queue_event = run.metrics.mean_queue;
    row.mean_queue_time = run.metrics.mean_queue_time;
    row.diversion_rate = run.metrics.diversion_rate;
    row.wasted_rate = run.metrics.wasted_rate;
    return row;
}

SweepRow aggregate(std::span<const SweepRow> rows) {
    SweepRow agg = rows.front();
    agg.seed.reset();
    agg.aggregate = true;
    agg.n_events = 0;
    std::vector<double> q;
    double qt = 0.0, div = 0.0, wasted = 0.0;
    for (const auto& r : rows) {
        agg.n_events += r.n_events;
        q.push_back(r.mean_queue_event);
        qt += r.mean_queue_time;
        div += r.diversion_rate;
        wasted += r.wasted_rate;
    }
    const double n = static_cast<double>(rows.size());
    const auto est = estimate_mean(q);
    agg.mean_queue_event = est.mean;
    agg.ci_halfwidth = est.ci_halfwidth();
    agg.mean_queue_time = qt / n;
    agg.diversion_rate = div / n;
    agg.wasted_rate = wasted / n;
    return agg;
}

std::vector<SweepRow> run_cells(const RunConfig& config, const std::vector<Cell>& cells) {
    const auto seeds = static_cast<std::size_t>(config.seeds);
    auto rows = parallel_map(cells.size() * seeds, config.workers, [&](std::size_t task) {
        return run_cell_seed(config, cells[task / seeds], static_cast<std::int64_t>(task % seeds));
    });
    std::vector<SweepRow> out;
    out.reserve(rows.size() + cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::span<const SweepRow> block(rows.data() + c * seeds, seeds);
        out.insert(out.end(), block.begin(), block.end());
        out.push_back(aggregate(block));
    }
    return out;
}

std::size_t lambda_index(const RunConfig& config, double lambda) {
    return static_cast<std::size_t>(std::find(config.lambdas.begin(), config.lambdas.end(), lambda) -
                                    config.lambdas.begin());
}

}  // namespace

std::vector<SweepRow> phase_sweep(const RunConfig& config, std::ostream* warnings) {
    std::vector<Cell> cells;
    for (double lambda : feasible_lambdas(config, warnings)) {
        for (const auto& policy : config.policies) {
            cells.push_back({lambda_index(config, lambda), lambda, config.window_rule.c,
                             config.window_rule.to_string(), config.window_rule.window(lambda), policy});
        }
    }
    return run_cells(config, cells);
}

std::vector<SweepRow> conservation_sweep(const RunConfig& config, std::ostream* warnings) {
    std::vector<Cell> cells;
    for (double lambda : feasible_lambdas(config, warnings)) {
        for (double c : config.c_values) {
            const WindowRule rule = c == 0.0 ? WindowRule{} : WindowRule{WindowRule::Kind::log, c};
            const double w = rule.window(lambda);
            cells.push_back({lambda_index(config, lambda), lambda, c, rule.to_string(), w,
                             w == 0.0 ? config.online_policy : config.policies.front()});
        }
    }
    return run_cells(config, cells);
}

double conservation_ratio(const SweepRow& row) {
    return (row.mean_queue_event + row.window) / (-std::log1p(-row.lambda));
}

std::vector<ConservationMin> conservation_minima(const std::vector<SweepRow>& rows) {
    std::map<double, ConservationMin> by_lambda;
    for (const auto& r : rows) {
        if (!r.aggregate) {
            continue;
        }
        const double ratio = conservation_ratio(r);
        auto [it, inserted] = by_lambda.try_emplace(r.lambda, ConservationMin{r.lambda, ratio, r.c});
        if (!inserted && ratio < it->second.min_ratio) {
            it->second.min_ratio = ratio;
            it->second.argmin_c = r.c;
        }
    }
    std::vector<ConservationMin> out;
    for (const auto& [lambda, m] : by_lambda) {
        out.push_back(m);
    }
    return out;
}

namespace {

std::string seed_field(const SweepRow& r) { return r.seed ? std::to_string(*r.seed) : std::string("*"); }

}  // namespace

void write_phase_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "lambda,p,window_rule,window,policy,seed,n_events,mean_queue_event,mean_queue_time,"
           "diversion_rate,wasted_rate,ci_halfwidth,aggregate_flag\n";
    for (const auto& r : rows) {
        out << format_double(r.lambda) << ',' << format_double(r.p) << ',' << r.window_rule << ','
            << format_double(r.window) << ',' << r.policy << ',' << seed_field(r) << ',' << r.n_events << ','
            << format_double(r.mean_queue_event) << ',' << format_double(r.mean_queue_time) << ','
            << format_double(r.diversion_rate) << ',' << format_double(r.wasted_rate) << ','
            << format_double(r.ci_halfwidth) << ',' << (r.aggregate ? 1 : 0) << '\n';
    }
}

void write_conservation_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "lambda,p,c,window,policy,seed,n_events,mean_queue_event,q_plus_w,ratio,ci_halfwidth,aggregate_flag\n";
    for (const auto& r : rows) {
        out << format_double(r.lambda) << ',' << format_double(r.p) << ',' << format_double(r.c) << ','
            << format_double(r.window) << ',' << r.policy << ',' << seed_field(r) << ',' << r.n_events << ','
            << format_double(r.mean_queue_event) << ',' << format_double(r.mean_queue_event + r.window) << ','
            << format_double(conservation_ratio(r)) << ',' << format_double(r.ci_halfwidth) << ','
            << (r.aggregate ? 1 : 0) << '\n';
    }
}

void write_conservation_min_csv(std::ostream& out, const std::vector<ConservationMin>& minima) {
    out << "lambda,min_ratio,argmin_c\n";
    for (const auto& m : minima) {
        out << format_double(m.lambda) << ',' << format_double(m.min_ratio) << ',' << format_double(m.argmin_c)
            << '\n';
    }
}

namespace {

json proportion_json(const ProportionEstimate& e) {
    return {{"estimate", e.estimate}, {"std_error", e.std_error}, {"hits", e.hits}, {"count", e.count},
            {"wilson_low", e.wilson_low}, {"wilson_high", e.wilson_high}};
}

json mean_json(const MeanEstimate& e) {
    return {{"mean", e.mean}, {"std_error", e.std_error}, {"count", e.count}, {"ci_halfwidth", e.ci_halfwidth()}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

const char* kPlotStub = R"py(# Plot stub for phase.csv: aggregate mean queue against log2(1/(1-lambda)).
import sys

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else "phase.csv")
agg = df[df.aggregate_flag == 1]
for (rule, policy), g in agg.groupby(["window_rule", "policy"]):
    x = np.log2(1.0 / (1.0 - g["lambda"]))
    plt.errorbar(x, g.mean_queue_event, yerr=g.ci_halfwidth, marker="o", label=f"{policy} W={rule}")
plt.xlabel("log2 1/(1-lambda)")
plt.ylabel("mean queue")
plt.legend()
plt.savefig("phase.png", dpi=150)
)py";

ExcursionConfig excursion_config(const RunConfig& config, double q_ref) {
    return ExcursionConfig{{config.lambdas.front(), config.p, config.window}, config.k, config.epsilon,
                           config.zeta, config.phi, q_ref};
}

}  // namespace

std::vector<std::filesystem::path> run_experiment(const RunConfig& config, std::ostream* warnings) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    std::vector<fs::path> written;
    auto emit = [&](const std::string& name) {
        written.push_back(config.output_dir / name);
        return open_output(written.back());
    };
    json manifest_extra = json::object();

    if (config.experiment == "simulate") {
        for (std::size_t li = 0; li < config.lambdas.size(); ++li) {
            const ModelParams params{config.lambdas[li], config.p, config.window_rule.window(config.lambdas[li])};
            for (std::size_t pi = 0; pi < config.policies.size(); ++pi) {
                for (std::int64_t s = 0; s < config.seeds; ++s) {
                    const auto seed = derive_seed(derive_seed(config.master_seed, li), static_cast<std::uint64_t>(s));
                    const auto stream = generate_stream(params, config.horizon + params.window, seed);
                    auto policy = make_policy(config.policies[pi], params);
                    SimOptions options;
                    options.q0 = config.q0;
                    options.burn_in_fraction = config.burn_in;
                    options.until = config.horizon;
                    const auto run = run_simulation(stream, *policy, options);
                    const auto& m = run.metrics;
                    const std::string stem =
                        "run_l" + std::to_string(li) + "_p" + std::to_string(pi) + "_s" + std::to_string(s);
                    json summary{{"lambda", params.lambda},
                                 {"p", params.p},
                                 {"window", params.window},
                                 {"policy", config.policies[pi]},
                                 {"seed", s},
                                 {"n_events", m.n_events},
                                 {"mean_queue_event", m.mean_queue},
                                 {"mean_queue_time", m.mean_queue_time},
                                 {"diversion_rate", m.diversion_rate},
                                 {"wasted_rate", m.wasted_rate},
                                 {"q0", config.q0}};
                    emit(stem + ".json") << summary.dump(2) << '\n';
                    if (config.trajectory_csv) {
                        auto out = emit(stem + "_trajectory.csv");
                        write_trajectory_csv(out, stream, run);
                    }
                }
            }
        }
    } else if (config.experiment == "analytic") {
        const auto rows = online_scaling_table(config.p, config.lambdas);
        auto out = emit("scaling.csv");
        out << "lambda,x_star,q_opt,log_term,ratio,diversion_rate\n";
        for (const auto& r : rows) {
            out << format_double(r.lambda) << ',' << r.x_star << ',' << format_double(r.q_opt) << ','
                << format_double(r.log_term) << ',' << format_double(r.ratio) << ','
                << format_double(r.diversion_rate) << '\n';
        }
    } else if (config.experiment == "excursion") {
        const auto ec = excursion_config(config, config.q_ref.value_or(0.0));
        const auto report = estimate_event_probs(ec, config.n_samples, config.master_seed, config.workers,
                                                 config.per_sample_csv);
        const char* names[4] = {"e1", "e3", "e4", "e5"};
        json events = json::object();
        for (std::size_t e = 0; e < 4; ++e) {
            events[names[e]] = proportion_json(report.events[e]);
        }
        json corr = json::object();
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = a + 1; b < 4; ++b) {
                corr[std::string(names[a]) + "_" + names[b]] = report.correlation[a][b];
            }
        }
        json j{{"n_samples", report.n_samples},
               {"events", events},
               {"correlations", corr},
               {"max_abs_correlation", report.max_abs_correlation()},
               {"e5_log_prob_per_window", finite_or_null(report.e5_log_prob_per_window)},
               {"markers", {{"U1", ec.u1()}, {"U2", ec.u2()}, {"U3", ec.u3()}, {"B", ec.segment()}}},
               {"barrier", ec.barrier()},
               {"q_ref", ec.q_ref},
               {"q_ref_source", config.q_ref ? "configured" : "zero"}};
        if (!config.e5_windows.empty()) {
            const auto fit = e5_rate_fit(ec, config.e5_windows, config.n_samples, config.master_seed, config.workers);
            json points = json::array();
            for (std::size_t i = 0; i < fit.windows.size(); ++i) {
                points.push_back({{"window", fit.windows[i]},
                                  {"e5", proportion_json(fit.probabilities[i])},
                                  {"used", static_cast<bool>(fit.used[i])}});
            }
            j["e5_fit"] = {{"slope", fit.slope},
                           {"intercept", fit.intercept},
                           {"r_squared", fit.r_squared},
                           {"dropped_points", fit.dropped_points},
                           {"points", points}};
        }
        emit("excursion.json") << j.dump(2) << '\n';
        if (config.per_sample_csv) {
            auto out = emit("excursion_samples.csv");
            write_excursion_samples_csv(out, report);
        }
    } else if (config.experiment == "phase") {
        const auto rows = phase_sweep(config, warnings);
        {
            auto out = emit("phase.csv");
            write_phase_csv(out, rows);
        }
        emit("plot_phase.py") << kPlotStub;
    } else if (config.experiment == "conserve") {
        const auto rows = conservation_sweep(config, warnings);
        {
            auto out = emit("conserve.csv");
            write_conservation_csv(out, rows);
        }
        auto out = emit("conserve_min.csv");
        write_conservation_min_csv(out, conservation_minima(rows));
    } else if (config.experiment == "diagnostic") {
        const auto spec = PolicySpec::parse(config.policies.front());
        const ModelParams params{config.lambdas.front(), config.p, config.window};
        const double q_ref = config.q_ref ? *config.q_ref
                                          : reference_mean_queue(spec, params, derive_seed(config.master_seed, ~0ULL));
        const auto ec = excursion_config(config, q_ref);
        DiagnosticOptions options;
        options.workers = config.workers;
        options.check_warmup_sensitivity = config.warmup_check;
        options.warmup_events = config.warmup_events;
        const auto report = diversion_idling_diagnostic(ec, spec, config.n_samples, config.master_seed, options);
        if (report.too_few_conditioned && warnings) {
            *warnings << "warning: only " << report.conditioned
                      << " samples satisfied E1 and E2; widen the sample budget\n";
        }
        json j{{"policy", report.policy},
               {"q_ref", report.q_ref},
               {"q_ref_source", config.q_ref ? "configured" : "measured stationary mean queue"},
               {"warmup_time", report.warmup_time},
               {"n_samples", report.n_samples},
               {"e1", proportion_json(report.e1)},
               {"e2", proportion_json(report.e2)},
               {"conditioned", report.conditioned},
               {"too_few_conditioned", report.too_few_conditioned},
               {"y_over_b", mean_json(report.y_over_b)},
               {"v", mean_json(report.v)},
               {"wasted", mean_json(report.wasted)},
               {"l0_conditional", mean_json(report.l0)},
               {"l0_overall", proportion_json(report.l0_overall)}};
        if (report.warmup_stable) {
            j["warmup_sensitivity"] = {{"shift_e2", *report.warmup_shift_e2},
                                       {"shift_y_over_b", *report.warmup_shift_y},
                                       {"stable", *report.warmup_stable}};
        }
        emit("diagnostic.json") << j.dump(2) << '\n';
        if (config.per_sample_csv) {
            auto out = emit("diagnostic_samples.csv");
            write_diagnostic_samples_csv(out, report);
        }
    }

    json manifest{{"config", config.source},
                  {"version", version_string()},
                  {"master_seed", config.master_seed},
                  {"experiment", config.experiment}};
    json outputs = json::array();
    for (const auto& p : written) {
        outputs.push_back(p.filename().string());
    }
    manifest["outputs"] = outputs;
    written.push_back(config.output_dir / "manifest.json");
    open_output(written.back()) << manifest.dump(2) << '\n';
    return written;
}

namespace {

void report_error(std::ostream& err, const char* kind, const std::string& message, const std::string& field = {}) {
    json e{{"error", kind}, {"message", message}};
    if (!field.empty()) {
        e["field"] = field;
    }
    err << e.dump() << '\n';
}

}  // namespace

int run_from_json(json config, std::ostream& err, const json& overrides) {
    if (!config.is_object()) {
        report_error(err, "validation", "configuration must be a JSON object");
        return kExitValidation;
    }
    if (overrides.is_object()) {
        config.update(overrides);
        // a null override clears the field
        for (auto it = config.begin(); it != config.end();) {
            it = it->is_null() ? config.erase(it) : std::next(it);
        }
    }
    RunConfig parsed;
    try {
        parsed = parse_run_config(config);
    } catch (const ConfigError& e) {
        report_error(err, "validation", e.what(), e.field());
        return kExitValidation;
    }
    try {
        run_experiment(parsed, &err);
    } catch (const ConfigError& e) {
        report_error(err, "validation", e.what(), e.field());
        return kExitValidation;
    } catch (const std::exception& e) {
        report_error(err, "runtime", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}

int run_from_config(const std::filesystem::path& path, std::ostream& err, const json& overrides) {
    std::ifstream in(path);
    if (!in) {
        report_error(err, "parse", "cannot open config file " + path.string());
        return kExitParse;
    }
    json config;
    try {
        config = json::parse(in);
    } catch (const json::exception& e) {
        report_error(err, "parse", e.what());
        return kExitParse;
    }
    return run_from_json(std::move(config), err, overrides);
}

}  // namespace admitlab
