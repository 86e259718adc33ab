#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "admitlab/analytic.hpp"
#include "admitlab/errors.hpp"
#include "admitlab/excursion.hpp"
#include "admitlab/experiments.hpp"
#include "admitlab/policy.hpp"
#include "admitlab/sim.hpp"
#include "admitlab/stream.hpp"

namespace py = pybind11;
using namespace admitlab;

namespace {

py::dict simulate(const EventStream& stream, const std::string& policy, std::int64_t q0, double burn_in,
                  std::optional<double> until, bool trajectory) {
    auto handle = make_policy(policy, stream.params());
    SimOptions options;
    options.q0 = q0;
    options.burn_in_fraction = burn_in;
    options.until = until;
    auto run = run_simulation(stream, *handle, options);
    py::dict out;
    out["metrics"] = run.metrics;
    out["policy"] = handle->name();
    if (trajectory) {
        out["q_pre"] = run.trajectory.pre;
        out["q_post"] = run.trajectory.post;
        out["decisions"] = run.trace.decisions;
        out["flow_residuals"] = flow_identity_residuals(run.trajectory, run.trace, stream);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_admitlab, m) {
    m.doc() = "admitlab core bindings";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<RangeError>(m, "RangeError", PyExc_IndexError);
    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<EstimationError>(m, "EstimationError", PyExc_RuntimeError);

    m.def("version", &version_string);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double lambda, double p, double window) { return make_params(lambda, p, window); }),
             py::arg("lambda_"), py::arg("p"), py::arg("window") = 0.0)
        .def_readonly("lambda_", &ModelParams::lambda)
        .def_readonly("p", &ModelParams::p)
        .def_readonly("window", &ModelParams::window)
        .def_property_readonly("drift", &ModelParams::drift)
        .def_property_readonly("event_rate", &ModelParams::event_rate);

    py::class_<EventStream>(m, "EventStream")
        .def(py::init<std::vector<double>, std::vector<std::int8_t>, double, ModelParams>(), py::arg("times"),
             py::arg("marks"), py::arg("horizon"), py::arg("params") = ModelParams{})
        .def("__len__", &EventStream::size)
        .def_property_readonly("horizon", &EventStream::horizon)
        .def_property_readonly("times",
                               [](const EventStream& s) { return std::vector<double>(s.times().begin(), s.times().end()); })
        .def_property_readonly("marks",
                               [](const EventStream& s) {
                                   return std::vector<int>(s.marks().begin(), s.marks().end());
                               })
        .def("count_events", &EventStream::count_events, py::arg("t"))
        .def("net_input", [](const EventStream& s, double a, double b) { return s.net_input(a, b).value; },
             py::arg("s"), py::arg("t"));

    m.def("generate_stream", &generate_stream, py::arg("params"), py::arg("horizon"), py::arg("seed"));

    py::class_<SimMetrics>(m, "SimMetrics")
        .def_readonly("mean_queue", &SimMetrics::mean_queue)
        .def_readonly("mean_queue_time", &SimMetrics::mean_queue_time)
        .def_readonly("diversion_rate", &SimMetrics::diversion_rate)
        .def_readonly("diversions", &SimMetrics::diversions)
        .def_readonly("wasted_count", &SimMetrics::wasted_count)
        .def_readonly("wasted_rate", &SimMetrics::wasted_rate)
        .def_readonly("n_events", &SimMetrics::n_events);

    m.def("run_simulation", &simulate, py::arg("stream"), py::arg("policy"), py::arg("q0") = 0,
          py::arg("burn_in") = 0.1, py::arg("until") = std::nullopt, py::arg("trajectory") = false,
          "Simulate a policy handle (e.g. 'threshold:auto') on a stream.");

    py::class_<BirthDeathSolution>(m, "BirthDeathSolution")
        .def_readonly("threshold", &BirthDeathSolution::threshold)
        .def_readonly("rho", &BirthDeathSolution::rho)
        .def_readonly("probs", &BirthDeathSolution::probs)
        .def_readonly("mean_queue", &BirthDeathSolution::mean_queue)
        .def_readonly("diversion_rate", &BirthDeathSolution::diversion_rate);

    py::class_<ScalingRow>(m, "ScalingRow")
        .def_readonly("lambda_", &ScalingRow::lambda)
        .def_readonly("x_star", &ScalingRow::x_star)
        .def_readonly("q_opt", &ScalingRow::q_opt)
        .def_readonly("log_term", &ScalingRow::log_term)
        .def_readonly("ratio", &ScalingRow::ratio)
        .def_readonly("diversion_rate", &ScalingRow::diversion_rate);

    m.def("bd_stationary", &bd_stationary, py::arg("params"), py::arg("x"));
    m.def("min_feasible_threshold", &min_feasible_threshold, py::arg("params"));
    m.def("online_scaling_table",
          [](double p, const std::vector<double>& lambdas) { return online_scaling_table(p, lambdas); },
          py::arg("p"), py::arg("lambdas"));
    m.def("poisson_tail", &poisson_tail, py::arg("mean"), py::arg("threshold"));
    m.def(
        "ldp_rate_estimate",
        [](double c1, const std::vector<double>& xs) {
            const auto est = ldp_rate_estimate(c1, xs);
            py::dict d;
            d["slope"] = est.slope;
            d["intercept"] = est.intercept;
            d["pointwise_rates"] = est.pointwise_rates;
            d["relative_change"] = est.relative_change;
            return d;
        },
        py::arg("c1"), py::arg("xs"));

    py::class_<ExcursionConfig>(m, "ExcursionConfig")
        .def(py::init([](const ModelParams& params, double k, double epsilon, double zeta, double phi, double q_ref) {
                 ExcursionConfig c{params, k, epsilon, zeta, phi, q_ref};
                 c.validate();
                 return c;
             }),
             py::arg("params"), py::arg("k") = 24.0, py::arg("epsilon") = 0.1, py::arg("zeta") = 40.0,
             py::arg("phi") = 1.0, py::arg("q_ref") = 0.0)
        .def_property_readonly("u1", &ExcursionConfig::u1)
        .def_property_readonly("u2", &ExcursionConfig::u2)
        .def_property_readonly("u3", &ExcursionConfig::u3)
        .def_property_readonly("barrier", &ExcursionConfig::barrier);

    m.def(
        "estimate_event_probs",
        [](const ExcursionConfig& config, std::int64_t n, std::uint64_t seed, unsigned workers) {
            const auto r = estimate_event_probs(config, n, seed, workers);
            py::dict d;
            const char* names[4] = {"e1", "e3", "e4", "e5"};
            for (std::size_t i = 0; i < 4; ++i) {
                d[names[i]] = r.events[i].estimate;
            }
            d["max_abs_correlation"] = r.max_abs_correlation();
            d["n_samples"] = r.n_samples;
            return d;
        },
        py::arg("config"), py::arg("n_samples"), py::arg("seed"), py::arg("workers") = 0);

    m.def(
        "e5_rate_fit",
        [](const ExcursionConfig& config, const std::vector<double>& windows, std::int64_t n, std::uint64_t seed,
           unsigned workers) {
            const auto f = e5_rate_fit(config, windows, n, seed, workers);
            py::dict d;
            d["slope"] = f.slope;
            d["intercept"] = f.intercept;
            d["r_squared"] = f.r_squared;
            d["dropped_points"] = f.dropped_points;
            std::vector<double> probs;
            for (const auto& p : f.probabilities) {
                probs.push_back(p.estimate);
            }
            d["probabilities"] = probs;
            return d;
        },
        py::arg("config"), py::arg("windows"), py::arg("n_samples"), py::arg("seed"), py::arg("workers") = 0);
}
