#include "admitlab/stats.hpp"

#include <cmath>

#include "admitlab/errors.hpp"

namespace admitlab {

MeanEstimate estimate_mean(std::span<const double> values) {
    MeanEstimate est;
    est.count = static_cast<std::int64_t>(values.size());
    if (values.empty()) {
        return est;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    est.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - est.mean) * (v - est.mean);
        }
        const double var = ss / static_cast<double>(values.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    return est;
}

ProportionEstimate estimate_proportion(std::int64_t hits, std::int64_t count) {
    ProportionEstimate est;
    est.hits = hits;
    est.count = count;
    if (count <= 0) {
        return est;
    }
    const double n = static_cast<double>(count);
    const double phat = static_cast<double>(hits) / n;
    est.estimate = phat;
    est.std_error = std::sqrt(phat * (1.0 - phat) / n);
    constexpr double z = 1.959963984540054;
    const double denom = 1.0 + z * z / n;
    const double centre = (phat + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
    est.wilson_low = std::max(0.0, centre - half);
    est.wilson_high = std::min(1.0, centre + half);
    return est;
}

double correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ArgumentError("correlation inputs differ in length");
    }
    if (a.size() < 2) {
        return 0.0;
    }
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ArgumentError("fit_line needs two equal-length inputs with at least two points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) {
        throw ArgumentError("fit_line needs distinct x values");
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace admitlab
