#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "admitlab/analytic.hpp"
#include "admitlab/errors.hpp"
#include "admitlab/experiments.hpp"
#include "admitlab/stats.hpp"

using namespace admitlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("admitlab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_sweep() {
    RunConfig c;
    c.experiment = "phase";
    c.p = 0.5;
    c.lambdas = {0.875, 0.9375};
    c.window_rule = WindowRule::parse("log:2");
    c.policies = {"windowed-drain", "threshold:auto"};
    c.horizon = 2000.0;
    c.seeds = 8;
    c.master_seed = 3;
    return c;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

TEST_CASE("window rules") {
    CHECK(WindowRule::parse("zero").window(0.9) == 0.0);
    CHECK(WindowRule::parse("constant:3").window(0.9) == 3.0);
    CHECK(WindowRule::parse("log:8").window(0.875) == doctest::Approx(8.0 * std::log(8.0)));
    CHECK(WindowRule::parse("log:8").to_string() == "log:8");
    CHECK(WindowRule::parse("constant:2.5").to_string() == "constant:2.5");
    for (const char* bad : {"", "log", "log:", "log:-1", "const:3", "constant:x", "zero:1"}) {
        CHECK_THROWS_AS(WindowRule::parse(bad), ConfigError);
    }
}

TEST_CASE("config parsing and validation") {
    const auto c = parse_run_config(json{{"experiment", "phase"}, {"p", 0.5}, {"k_range", {3, 7}}});
    REQUIRE(c.lambdas.size() == 5);
    CHECK(c.lambdas.front() == 0.875);
    CHECK(c.seeds == 8);
    CHECK(parse_run_config(json{{"experiment", "simulate"}, {"p", 0.5}, {"lambda", 0.9}}).seeds == 1);
    CHECK(parse_run_config(json{{"experiment", "conserve"}, {"p", 0.5}, {"lambda", 0.9}}).policies ==
          std::vector<std::string>{"windowed-drain"});

    auto field_of = [](const json& j) {
        try {
            parse_run_config(j);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    CHECK(field_of(json{{"experiment", "phase"}, {"lambda", 0.9}}) == "p");
    CHECK(field_of(json{{"experiment", "bogus"}, {"p", 0.5}, {"lambda", 0.9}}) == "experiment");
    CHECK(field_of(json{{"p", 0.5}, {"lambda", 0.9}}) == "experiment");
    CHECK(field_of(json{{"experiment", "phase"}, {"p", 0.5}}) == "lambdas");
    CHECK(field_of(json{{"experiment", "phase"}, {"p", 0.5}, {"lambda", 0.9}, {"seeds", 4}}) == "seeds");
    CHECK(field_of(json{{"experiment", "phase"}, {"p", 0.5}, {"lambda", 0.9}, {"policy", "fifo"}}) == "policy");
    CHECK(field_of(json{{"experiment", "phase"}, {"p", "half"}, {"lambda", 0.9}}) == "p");
    CHECK(field_of(json{{"experiment", "simulate"}, {"p", 0.5}, {"lambda", 0.3}}) == "lambda");
    CHECK(field_of(json{{"experiment", "phase"}, {"p", 0.5}, {"lambda", 0.9}, {"window_rule", "log:x"}}) ==
          "window_rule");
    CHECK(field_of(json{{"experiment", "excursion"}, {"p", 0.5}, {"lambda", 0.95}, {"epsilon", 0.9}}) == "epsilon");
}

TEST_CASE("infeasible cells are skipped with a warning") {
    auto c = small_sweep();
    c.lambdas = {0.3, 0.875};
    std::ostringstream warn;
    const auto ok = feasible_lambdas(c, &warn);
    CHECK(ok == std::vector<double>{0.875});
    CHECK(warn.str().find("0.3") != std::string::npos);
    const auto rows = phase_sweep(c, &warn);
    for (const auto& r : rows) CHECK(r.lambda == 0.875);
}

TEST_CASE("sweeps are reproducible and worker-count independent") {
    auto c = small_sweep();
    c.workers = 1;
    const auto a = phase_sweep(c);
    c.workers = 3;
    const auto b = phase_sweep(c);
    std::ostringstream sa, sb;
    write_phase_csv(sa, a);
    write_phase_csv(sb, b);
    CHECK(sa.str() == sb.str());
    // 2 lambdas x 2 policies x (8 seeds + aggregate)
    CHECK(a.size() == 36);
    CHECK(sa.str().starts_with(
        "lambda,p,window_rule,window,policy,seed,n_events,mean_queue_event,mean_queue_time,diversion_rate,"
        "wasted_rate,ci_halfwidth,aggregate_flag\n"));
}

TEST_CASE("aggregates recompute from per-seed rows") {
    const auto rows = phase_sweep(small_sweep());
    std::vector<double> q;
    double div = 0.0;
    std::int64_t events = 0;
    for (const auto& r : rows) {
        if (!r.aggregate) {
            q.push_back(r.mean_queue_event);
            div += r.diversion_rate;
            events += r.n_events;
            continue;
        }
        REQUIRE(q.size() == 8);
        const auto est = estimate_mean(q);
        CHECK(r.mean_queue_event == est.mean);
        CHECK(r.ci_halfwidth == est.ci_halfwidth());
        CHECK(r.diversion_rate == doctest::Approx(div / 8.0));
        CHECK(r.n_events == events);
        CHECK_FALSE(r.seed.has_value());
        q.clear();
        div = 0.0;
        events = 0;
    }
}

TEST_CASE("CSV numbers round-trip exactly") {
    const auto rows = phase_sweep(small_sweep());
    std::ostringstream out;
    write_phase_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    std::size_t i = 0;
    while (std::getline(in, line)) {
        const auto cells = split(line);
        REQUIRE(cells.size() == 13);
        CHECK(std::stod(cells[0]) == rows[i].lambda);
        CHECK(std::stod(cells[3]) == rows[i].window);
        CHECK(std::stod(cells[7]) == rows[i].mean_queue_event);
        CHECK(cells[5] == (rows[i].aggregate ? "*" : std::to_string(*rows[i].seed)));
        CHECK(cells[12] == (rows[i].aggregate ? "1" : "0"));
        ++i;
    }
    CHECK(i == rows.size());
}

TEST_CASE("conservation sweep") {
    RunConfig c;
    c.experiment = "conserve";
    c.p = 0.5;
    c.lambdas = {0.9375};
    c.c_values = {0.0, 1.0, 16.0};
    c.policies = {"windowed-drain"};
    c.horizon = 2e4;
    c.seeds = 8;
    const auto rows = conservation_sweep(c);
    std::vector<SweepRow> agg;
    for (const auto& r : rows) {
        if (r.aggregate) agg.push_back(r);
    }
    REQUIRE(agg.size() == 3);
    CHECK(agg[0].policy == "threshold:auto");
    CHECK(agg[0].window == 0.0);
    CHECK(agg[1].policy == "windowed-drain");
    const double ln = std::log(16.0);
    const double online = bd_stationary(make_params(0.9375, 0.5), min_feasible_threshold(make_params(0.9375, 0.5))).mean_queue;
    CHECK(conservation_ratio(agg[0]) == doctest::Approx(online / ln).epsilon(0.1));
    // the W term dominates for large c
    CHECK(conservation_ratio(agg[2]) >= 16.0);
    const auto minima = conservation_minima(rows);
    REQUIRE(minima.size() == 1);
    CHECK(minima[0].argmin_c == 0.0);
    std::ostringstream out;
    write_conservation_csv(out, rows);
    CHECK(out.str().starts_with(
        "lambda,p,c,window,policy,seed,n_events,mean_queue_event,q_plus_w,ratio,ci_halfwidth,aggregate_flag\n"));
    std::ostringstream mout;
    write_conservation_min_csv(mout, minima);
    CHECK(mout.str().starts_with("lambda,min_ratio,argmin_c\n"));
}

TEST_CASE("run_from_json exit codes and outputs") {
    std::ostringstream err;
    CHECK(run_from_json(json{{"experiment", "simulate"}, {"lambda", 0.9}}, err) == kExitValidation);
    const auto e = json::parse(err.str().substr(0, err.str().find('\n')));
    CHECK(e["error"] == "validation");
    CHECK(e["field"] == "p");

    err.str("");
    CHECK(run_from_json(json{{"experiment", "nope"}, {"p", 0.5}, {"lambda", 0.9}}, err) == kExitValidation);

    err.str("");
    const auto missing = scratch("missing") / "none.json";
    CHECK(run_from_config(missing, err) == kExitParse);
    const auto badfile = scratch("badjson");
    fs::create_directories(badfile);
    std::ofstream(badfile / "c.json") << "{ not json";
    CHECK(run_from_config(badfile / "c.json", err) == kExitParse);

    const auto dir = scratch("simulate");
    err.str("");
    const json cfg{{"experiment", "simulate"}, {"p", 0.5}, {"lambda", 0.9}, {"horizon", 1000.0}};
    REQUIRE(run_from_json(cfg, err, json{{"output_dir", dir.string()}}) == kExitOk);
    int summaries = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        summaries += entry.path().filename().string().starts_with("run_");
    }
    CHECK(summaries == 1);
    const auto summary = json::parse(slurp(dir / "run_l0_p0_s0.json"));
    for (const char* key : {"lambda", "p", "window", "policy", "seed", "n_events", "mean_queue_event",
                            "mean_queue_time", "diversion_rate", "wasted_rate", "q0"}) {
        CHECK(summary.contains(key));
    }
    const auto manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["config"]["experiment"] == "simulate");
    CHECK(manifest["config"]["output_dir"] == dir.string());
    CHECK(manifest["master_seed"] == 1);
    CHECK(manifest["version"].get<std::string>() == version_string());

    // a null override clears a field, so the default applies
    const auto dir2 = scratch("simulate_null");
    err.str("");
    REQUIRE(run_from_json(cfg, err, json{{"output_dir", dir2.string()}, {"horizon", nullptr}}) == kExitOk);
    CHECK(json::parse(slurp(dir2 / "run_l0_p0_s0.json"))["n_events"].get<std::int64_t>() > 100000);
}

TEST_CASE("experiment outputs") {
    const auto dir = scratch("analytic");
    RunConfig c = parse_run_config(json{{"experiment", "analytic"}, {"p", 0.5}, {"k_range", {4, 6}}});
    c.output_dir = dir;
    const auto written = run_experiment(c);
    CHECK(written.size() == 2);
    const auto csv = slurp(dir / "scaling.csv");
    CHECK(csv.starts_with("lambda,x_star,q_opt,log_term,ratio,diversion_rate\n0.9375,3,"));

    const auto pdir = scratch("phase");
    auto sweep = small_sweep();
    sweep.output_dir = pdir;
    run_experiment(sweep);
    const auto first = slurp(pdir / "phase.csv");
    CHECK(fs::exists(pdir / "plot_phase.py"));
    run_experiment(sweep);
    CHECK(slurp(pdir / "phase.csv") == first);

    const auto edir = scratch("excursion");
    auto ex = parse_run_config(json{{"experiment", "excursion"},
                                    {"p", 0.5},
                                    {"lambda", 0.9},
                                    {"window", 2.0},
                                    {"k", 1.0},
                                    {"epsilon", 0.2},
                                    {"zeta", 1.0},
                                    {"phi", 10.0},
                                    {"n_samples", 2000},
                                    {"e5_windows", {1.0, 1.5, 2.0}},
                                    {"per_sample_csv", true}});
    ex.output_dir = edir;
    run_experiment(ex);
    const auto rep = json::parse(slurp(edir / "excursion.json"));
    CHECK(rep["n_samples"] == 2000);
    CHECK(rep["events"].contains("e5"));
    CHECK(rep.contains("e5_fit"));
    CHECK(slurp(edir / "excursion_samples.csv").starts_with("sample,e1,e3,e4,e5,z,Y,V,J,L0\n"));

    const auto ddir = scratch("diagnostic");
    auto dg = parse_run_config(json{{"experiment", "diagnostic"},
                                    {"p", 0.5},
                                    {"lambda", 0.9},
                                    {"window", 2.0},
                                    {"k", 2.0},
                                    {"zeta", 2.0},
                                    {"policy", "threshold:auto"},
                                    {"n_samples", 100},
                                    {"warmup_events", 5000}});
    dg.output_dir = ddir;
    run_experiment(dg);
    const auto diag = json::parse(slurp(ddir / "diagnostic.json"));
    CHECK(diag["q_ref"].get<double>() == doctest::Approx(bd_stationary(make_params(0.9, 0.5), 2).mean_queue));
    CHECK(diag["n_samples"] == 100);
}
