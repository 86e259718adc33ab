#include "admitlab/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "admitlab/errors.hpp"
#include "admitlab/format.hpp"
#include "admitlab/stats.hpp"

namespace admitlab {

double BirthDeathSolution::mass_at_or_below(std::int64_t level) const {
    if (level < 0) {
        return 0.0;
    }
    const auto end = std::min<std::size_t>(probs.size(), static_cast<std::size_t>(level) + 1);
    double s = 0.0;
    for (std::size_t q = 0; q < end; ++q) {
        s += probs[q];
    }
    return std::min(s, 1.0);
}

BirthDeathSolution bd_stationary(const ModelParams& params, std::int64_t x) {
    params.validate();
    if (x < 0) {
        throw ArgumentError("threshold must be >= 0");
    }
    BirthDeathSolution sol;
    sol.threshold = x;
    sol.rho = params.lambda / (1.0 - params.p);
    const double log_rho = std::log(sol.rho);

    // weights rho^(q - x) are <= 1 since rho > 1; normalizing these is the
    // log-sum-exp with the top state as the maximum
    sol.probs.resize(static_cast<std::size_t>(x) + 1);
    double total = 0.0;
    for (std::int64_t q = x; q >= 0; --q) {
        const double w = std::exp(static_cast<double>(q - x) * log_rho);
        sol.probs[static_cast<std::size_t>(q)] = w;
        total += w;
    }
    double mean = 0.0;
    for (std::size_t q = 0; q < sol.probs.size(); ++q) {
        sol.probs[q] /= total;
        mean += static_cast<double>(q) * sol.probs[q];
    }
    sol.mean_queue = mean;
    sol.diversion_rate = bd_diversion_rate(params, x);
    return sol;
}

double bd_diversion_rate(const ModelParams& params, std::int64_t x) {
    // pi_x = (1 - 1/rho) / (1 - rho^-(x+1)); expm1 keeps both factors exact as rho -> 1+
    const double log_rho = std::log(params.lambda / (1.0 - params.p));
    const double num = -std::expm1(-log_rho);
    const double den = -std::expm1(-static_cast<double>(x + 1) * log_rho);
    return params.lambda * (num / den);
}

std::int64_t min_feasible_threshold(const ModelParams& params) {
    params.validate();
    // lambda * pi_x <= p  <=>  rho^-(x+1) <= (1 - lambda) / p, so the scan
    // must stop by ceil(ln(p / (1 - lambda)) / ln rho)
    const double log_rho = std::log(params.lambda / (1.0 - params.p));
    const double bound =
        std::max(0.0, std::ceil(std::log(params.p / (1.0 - params.lambda)) / log_rho)) + 1.0;
    constexpr std::int64_t kScanCap = 1'000'000;
    for (std::int64_t x = 0; x < kScanCap; ++x) {
        if (bd_diversion_rate(params, x) <= params.p) {
            return x;
        }
        if (static_cast<double>(x) > bound) {
            throw EstimationError("threshold scan passed its analytic bound " + format_double(bound));
        }
    }
    throw EstimationError("threshold scan hit the iteration cap");
}

std::vector<ScalingRow> online_scaling_table(double p, std::span<const double> lambdas) {
    std::vector<double> sorted(lambdas.begin(), lambdas.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<ScalingRow> rows;
    rows.reserve(sorted.size());
    for (double lambda : sorted) {
        const ModelParams params{lambda, p, 0.0};
        params.validate();
        ScalingRow row;
        row.lambda = lambda;
        row.x_star = min_feasible_threshold(params);
        const auto sol = bd_stationary(params, row.x_star);
        row.q_opt = sol.mean_queue;
        row.diversion_rate = sol.diversion_rate;
        row.log_term = std::log1p(-lambda) / std::log1p(-p);
        row.ratio = row.q_opt / row.log_term;
        rows.push_back(row);
    }
    return rows;
}

namespace {

// lgamma(n + 1) - (n + 1/2) ln n + n - ln sqrt(2 pi), for n = 0..15
constexpr double kStirlingError[16] = {
    0.0,
    0.08106146679532725821967026,
    0.04134069595540929409382208,
    0.02767792568499833914878929,
    0.02079067210376509311152277,
    0.01664469118982119216319487,
    0.01387612882307074799874573,
    0.01189670994589177009505572,
    0.01041126526197209649747857,
    0.009255462182712732917728637,
    0.008330563433362871256469319,
    0.007573675487951840794972024,
    0.006942840107209529865664153,
    0.006408994188004207068439631,
    0.005951370112758847735624416,
    0.00555473355196280137103869,
};

double stirling_error(std::int64_t n) {
    if (n <= 15) {
        return kStirlingError[n];
    }
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;
    const double x = static_cast<double>(n);
    const double nn = x * x;
    if (n > 500) return (s0 - s1 / nn) / x;
    if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / x;
    if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / x;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / x;
}

// x ln(x / m) + m - x without cancellation near x = m
double deviance_term(double x, double m) {
    if (std::abs(x - m) < 0.1 * (x + m)) {
        double v = (x - m) / (x + m);
        double s = (x - m) * v;
        double ej = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double next = s + ej / (2 * j + 1);
            if (next == s) {
                return next;
            }
            s = next;
        }
        return s;
    }
    return x * std::log(x / m) + m - x;
}

double log_sum_terms(double log_first, std::int64_t k, double mean, bool upward) {
    // sum_j t_j / t_0 with t_{j+1}/t_j = mean/(k+1) going up, k/mean going down
    double term = 1.0;
    double sum = 1.0;
    std::int64_t i = k;
    for (;;) {
        if (upward) {
            ++i;
            term *= mean / static_cast<double>(i);
        } else {
            if (i == 0) break;
            term *= static_cast<double>(i) / mean;
            --i;
        }
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return log_first + std::log(sum);
}

}  // namespace

double log_poisson_pmf(double mean, std::int64_t k) {
    if (k < 0) {
        return -std::numeric_limits<double>::infinity();
    }
    if (k == 0) {
        return -mean;
    }
    const double x = static_cast<double>(k);
    return -stirling_error(k) - deviance_term(x, mean) - 0.5 * std::log(2.0 * std::numbers::pi * x);
}

double log_poisson_tail(double mean, double threshold) {
    if (!(mean > 0.0) || !std::isfinite(mean)) {
        throw ArgumentError("poisson mean must be finite and > 0");
    }
    if (threshold <= 0.0) {
        return 0.0;
    }
    if (!std::isfinite(threshold)) {
        return -std::numeric_limits<double>::infinity();
    }
    const auto k0 = static_cast<std::int64_t>(std::ceil(threshold));
    const auto mode = static_cast<std::int64_t>(std::floor(mean));
    if (k0 > mode) {
        return log_sum_terms(log_poisson_pmf(mean, k0), k0, mean, true);
    }
    // the upper tail holds at least half the mass here; sum the lower side
    const double log_lower = log_sum_terms(log_poisson_pmf(mean, k0 - 1), k0 - 1, mean, false);
    return std::log1p(-std::exp(log_lower));
}

double poisson_tail(double mean, double threshold) {
    return std::exp(log_poisson_tail(mean, threshold));
}

RateEstimate ldp_rate_estimate(double c1, std::span<const double> xs) {
    if (!(c1 > 0.0)) {
        throw ArgumentError("c1 must be > 0");
    }
    if (xs.size() < 2) {
        throw ArgumentError("ldp_rate_estimate needs at least two x values");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || (i > 0 && !(xs[i] > xs[i - 1]))) {
            throw ArgumentError("xs must be positive and strictly increasing");
        }
    }
    RateEstimate est;
    std::vector<double> ys;
    ys.reserve(xs.size());
    for (double x : xs) {
        const double lt = log_poisson_tail(x, c1 * x);
        if (!std::isfinite(lt)) {
            throw EstimationError("Poisson tail underflows at x = " + format_double(x) +
                                  "; lower x or raise precision");
        }
        ys.push_back(-lt);
        est.pointwise_rates.push_back(-lt / x);
    }
    const auto fit = fit_line(xs, ys);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    const double r_last = est.pointwise_rates.back();
    const double r_prev = est.pointwise_rates[est.pointwise_rates.size() - 2];
    est.relative_change = r_last != 0.0 ? std::abs(r_last - r_prev) / std::abs(r_last) : 0.0;
    return est;
}

}  // namespace admitlab
