#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "admitlab/stream.hpp"

namespace admitlab {

// Stationary law of the threshold-x policy: a birth-death chain on {0..x}
// with birth rate lambda and death rate 1 - p.
struct BirthDeathSolution {
    std::int64_t threshold = 0;
    double rho = 0.0;
    std::vector<double> probs;
    double mean_queue = 0.0;
    // lambda * pi_x, the long-run rate at which arrivals are diverted.
    double diversion_rate = 0.0;

    // Stationary mass on {q <= level}.
    double mass_at_or_below(std::int64_t level) const;
};

BirthDeathSolution bd_stationary(const ModelParams& params, std::int64_t x);

// Closed-form lambda * pi_x(x) without building the vector.
double bd_diversion_rate(const ModelParams& params, std::int64_t x);

// Smallest x >= 0 whose threshold policy diverts at rate <= p.
std::int64_t min_feasible_threshold(const ModelParams& params);

struct ScalingRow {
    double lambda = 0.0;
    std::int64_t x_star = 0;
    double q_opt = 0.0;
    // log_{1/(1-p)} 1/(1-lambda)
    double log_term = 0.0;
    double ratio = 0.0;
    double diversion_rate = 0.0;
};

// One row per lambda, sorted by lambda. Throws ConfigError unless every
// lambda is in (1 - p, 1).
std::vector<ScalingRow> online_scaling_table(double p, std::span<const double> lambdas);

// P(D >= threshold) for D ~ Poisson(mean).
double poisson_tail(double mean, double threshold);
// ln P(D >= threshold), finite far past the range where the tail underflows.
double log_poisson_tail(double mean, double threshold);
// ln P(D = k) via the saddle-point (Loader) expansion.
double log_poisson_pmf(double mean, std::int64_t k);

struct RateEstimate {
    // Least-squares slope of -ln P(D_x >= c1 x) against x.
    double slope = 0.0;
    double intercept = 0.0;
    // -ln tail / x at each input x.
    std::vector<double> pointwise_rates;
    // |r_last - r_prev| / r_last over the two largest x.
    double relative_change = 0.0;
};

RateEstimate ldp_rate_estimate(double c1, std::span<const double> xs);

}  // namespace admitlab
