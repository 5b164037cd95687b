#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

namespace qergo::stats {

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;        ///< unbiased sample variance
    double mean_std_error = 0.0;
    double variance_std_error = 0.0; ///< sqrt((m4 - m2^2) / n), large-sample
    double min = 0.0;
    double max = 0.0;
};

/// Two-pass summary; ordering of the input fixes the floating-point result.
inline Summary summarize(std::span<const double> xs)
{
    Summary s;
    s.count = xs.size();
    if(xs.empty()) {
        return s;
    }
    double sum = 0.0;
    s.min = xs.front();
    s.max = xs.front();
    for(double x : xs) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    const double n = static_cast<double>(xs.size());
    s.mean = sum / n;
    if(xs.size() < 2) {
        return s;
    }
    double m2 = 0.0;
    double m4 = 0.0;
    for(double x : xs) {
        const double d = x - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    s.variance = m2 / (n - 1.0);
    s.mean_std_error = std::sqrt(s.variance / n);
    const double c2 = m2 / n;
    const double c4 = m4 / n;
    s.variance_std_error = std::sqrt(std::max(0.0, c4 - c2 * c2) / n);
    return s;
}

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Sample covariance with the standard error of the centered-product mean.
inline Estimate covariance(std::span<const double> a, std::span<const double> b)
{
    if(a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("covariance needs two equal-length samples of size >= 2");
    }
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for(std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sp = 0.0;
    for(std::size_t i = 0; i < a.size(); ++i) {
        sp += (a[i] - ma) * (b[i] - mb);
    }
    const double cov = sp / (n - 1.0);
    const double mean_p = sp / n;
    double ss = 0.0;
    for(std::size_t i = 0; i < a.size(); ++i) {
        const double d = (a[i] - ma) * (b[i] - mb) - mean_p;
        ss += d * d;
    }
    return {cov, std::sqrt(ss / (n - 1.0) / n)};
}

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval; z = 1.96 gives 95%.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054)
{
    if(trials == 0) {
        return {0.0, 1.0};
    }
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Estimate compared against a target at a fixed number of standard errors.
struct GatedEstimate {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    bool gated = true;
    bool pass = false;
};

inline constexpr double default_sigma_gate = 5.0;

inline GatedEstimate gate(std::string name, double estimate, double std_error, double target,
                          double sigmas = default_sigma_gate)
{
    GatedEstimate g{std::move(name), estimate, std_error, target, true, false};
    g.pass = std::abs(estimate - target) <= sigmas * std_error;
    return g;
}

} // namespace qergo::stats
