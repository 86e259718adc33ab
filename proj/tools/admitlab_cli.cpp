// admitlab command-line entry point: one subcommand per experiment kind.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "admitlab/experiments.hpp"

namespace {

struct Overrides {
    std::optional<double> p;
    std::vector<double> lambdas;
    std::vector<std::string> policies;
    std::optional<std::string> window_rule;
    std::optional<double> horizon;
    std::optional<std::int64_t> seeds;
    std::optional<std::uint64_t> master_seed;
    std::optional<unsigned> workers;
    std::optional<std::string> output_dir;
    std::optional<std::int64_t> n_samples;
    std::optional<double> window;
    std::optional<double> q_ref;
    std::optional<std::int64_t> q0;
    bool trajectory_csv = false;
    bool per_sample_csv = false;

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        if (p) j["p"] = *p;
        if (!lambdas.empty()) {
            j["lambdas"] = lambdas;
            j.erase("lambda");
        }
        if (!policies.empty()) j["policies"] = policies;
        if (window_rule) j["window_rule"] = *window_rule;
        if (horizon) j["horizon"] = *horizon;
        if (seeds) j["seeds"] = *seeds;
        if (master_seed) j["master_seed"] = *master_seed;
        if (workers) j["workers"] = *workers;
        if (output_dir) j["output_dir"] = *output_dir;
        if (n_samples) j["n_samples"] = *n_samples;
        if (window) j["window"] = *window;
        if (q_ref) j["q_ref"] = *q_ref;
        if (q0) j["q0"] = *q0;
        if (trajectory_csv) j["trajectory_csv"] = true;
        if (per_sample_csv) j["per_sample_csv"] = true;
        return j;
    }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--p", o.p, "Diversion budget rate in (0,1)");
    cmd->add_option("--lambda", o.lambdas, "Arrival rate(s); repeat or comma-separate")->delimiter(',');
    cmd->add_option("--policy", o.policies, "threshold:x=<int> | threshold:auto | windowed-drain | admit-all");
    cmd->add_option("--window-rule", o.window_rule, "constant:c | log:c | zero");
    cmd->add_option("--horizon", o.horizon, "Simulated time per replication");
    cmd->add_option("--seeds", o.seeds, "Replications per cell");
    cmd->add_option("--master-seed", o.master_seed, "Master seed");
    cmd->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
    cmd->add_option("--output-dir", o.output_dir, "Output directory");
    cmd->add_option("--n-samples", o.n_samples, "Monte Carlo samples");
    cmd->add_option("--window", o.window, "Lookahead W for excursion experiments");
    cmd->add_option("--q-ref", o.q_ref, "Reference queue scale");
    cmd->add_option("--q0", o.q0, "Initial queue length");
    cmd->add_flag("--trajectory-csv", o.trajectory_csv, "Write per-event trajectory CSV");
    cmd->add_flag("--per-sample-csv", o.per_sample_csv, "Write per-sample CSV");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"admitlab: admission control with lookahead, heavy-traffic experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", admitlab::version_string());

    const char* kinds[] = {"simulate", "analytic", "excursion", "phase", "conserve", "diagnostic"};
    std::string config_path;
    Overrides overrides;
    for (const char* kind : kinds) {
        auto* cmd = app.add_subcommand(kind, std::string("Run the ") + kind + " experiment");
        cmd->add_option("--config", config_path, "JSON configuration file");
        add_overrides(cmd, overrides);
    }
    auto* run = app.add_subcommand("run", "Run whatever experiment the config file names");
    run->add_option("--config", config_path, "JSON configuration file")->required();
    add_overrides(run, overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : admitlab::kExitParse;
    }

    const auto* chosen = app.get_subcommands().front();
    nlohmann::json ov = overrides.to_json();
    if (chosen->get_name() != "run") {
        ov["experiment"] = chosen->get_name();
    }
    if (!overrides.lambdas.empty()) {
        // an explicit list replaces any lambda specification in the file
        ov["k_range"] = nullptr;
        ov["lambda"] = nullptr;
    }

    if (config_path.empty()) {
        return admitlab::run_from_json(nlohmann::json::object(), std::cerr, ov);
    }
    return admitlab::run_from_config(config_path, std::cerr, ov);
}
