#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "admitlab/stream.hpp"

namespace admitlab {

// Lookahead length as a function of lambda: `constant:c`, `log:c`
// (W = c ln 1/(1-lambda)) or `zero`.
struct WindowRule {
    enum class Kind { constant, log, zero };
    Kind kind = Kind::zero;
    double c = 0.0;

    static WindowRule parse(const std::string& text);
    std::string to_string() const;
    double window(double lambda) const;
};

struct RunConfig {
    std::string experiment;
    double p = 0.5;
    std::vector<double> lambdas;
    WindowRule window_rule;
    std::vector<double> c_values;
    std::vector<std::string> policies{"threshold:auto"};
    // Used by the conservation sweep whenever W = 0.
    std::string online_policy = "threshold:auto";
    // Simulated time per replication.
    double horizon = 1e5;
    std::int64_t seeds = 8;
    std::uint64_t master_seed = 1;
    unsigned workers = 0;
    double burn_in = 0.1;
    std::int64_t q0 = 0;
    std::filesystem::path output_dir = "out";
    bool trajectory_csv = false;

    // excursion / diagnostic
    double window = 200.0;
    double k = 24.0;
    double epsilon = 0.1;
    double zeta = 40.0;
    double phi = 1.0;
    std::optional<double> q_ref;
    std::int64_t n_samples = 10000;
    std::vector<double> e5_windows;
    bool per_sample_csv = false;
    bool warmup_check = false;
    double warmup_events = 1e5;

    // Effective configuration as JSON, echoed into the manifest.
    nlohmann::json source;
};

// Throws ConfigError naming the field on any schema or range violation.
RunConfig parse_run_config(const nlohmann::json& j);

// Lambdas below the overload boundary are skipped with a warning.
std::vector<double> feasible_lambdas(const RunConfig& config, std::ostream* warnings);

struct SweepRow {
    double lambda = 0.0;
    double p = 0.0;
    std::string window_rule;
    double c = 0.0;
    double window = 0.0;
    std::string policy;
    // Replication index; empty for aggregate rows.
    std::optional<std::int64_t> seed;
    std::int64_t n_events = 0;
    double mean_queue_event = 0.0;
    double mean_queue_time = 0.0;
    double diversion_rate = 0.0;
    double wasted_rate = 0.0;
    double ci_halfwidth = 0.0;
    bool aggregate = false;
};

// One row per (lambda, policy, seed) plus an aggregate row per
// (lambda, policy) with across-seed means and a 95% CI on the mean queue.
std::vector<SweepRow> phase_sweep(const RunConfig& config, std::ostream* warnings = nullptr);

// Per (lambda, c) with W = c ln 1/(1-lambda); the online policy runs when W = 0.
std::vector<SweepRow> conservation_sweep(const RunConfig& config, std::ostream* warnings = nullptr);

struct ConservationMin {
    double lambda = 0.0;
    double min_ratio = 0.0;
    double argmin_c = 0.0;
};

// (q + W) / ln(1/(1-lambda)) for a sweep row.
double conservation_ratio(const SweepRow& row);
std::vector<ConservationMin> conservation_minima(const std::vector<SweepRow>& rows);

void write_phase_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_conservation_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_conservation_min_csv(std::ostream& out, const std::vector<ConservationMin>& minima);

// Runs the configured experiment, writing outputs and a manifest under
// output_dir. Returns the paths written.
std::vector<std::filesystem::path> run_experiment(const RunConfig& config, std::ostream* warnings = nullptr);

// Exit codes of run_from_config.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitValidation = 3;

// Loads, overrides, validates and runs. Errors are printed to `err` as one
// JSON object per line.
int run_from_config(const std::filesystem::path& path, std::ostream& err,
                    const nlohmann::json& overrides = nlohmann::json::object());
int run_from_json(nlohmann::json config, std::ostream& err,
                  const nlohmann::json& overrides = nlohmann::json::object());

std::string version_string();

}  // namespace admitlab
