#pragma once

#include <cstdint>
#include <span>

namespace admitlab {

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t count = 0;

    // Normal-approximation 95% halfwidth.
    double ci_halfwidth() const noexcept { return 1.96 * std_error; }
};

MeanEstimate estimate_mean(std::span<const double> values);

struct ProportionEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::int64_t count = 0;
    std::int64_t hits = 0;
    // 95% Wilson score interval.
    double wilson_low = 0.0;
    double wilson_high = 0.0;
};

ProportionEstimate estimate_proportion(std::int64_t hits, std::int64_t count);

// Pearson correlation; 0 when either input has zero variance.
double correlation(std::span<const double> a, std::span<const double> b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace admitlab
