#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "slelab/errors.hpp"
#include "slelab/special.hpp"

namespace slelab {

// Point estimate with a 99% confidence interval. Bernoulli outcomes carry the
// binomial stderr; score-valued outcomes (conditional closures in [0,1]) carry
// the sample stderr. The interval is Wilson's in both cases, which is
// conservative for scores since conditioning only shrinks the variance.
struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::int64_t n = 0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

inline Estimate wilson_estimate(double mean, double sample_var, std::int64_t n) {
    Estimate e;
    e.value = mean;
    e.n = n;
    e.stderr_ = n > 0 ? std::sqrt(std::max(0.0, sample_var) / static_cast<double>(n)) : 0.0;
    if (n > 0) {
        const double z2 = z_99 * z_99;
        const double nn = static_cast<double>(n);
        const double denom = 1.0 + z2 / nn;
        const double center = (mean + z2 / (2.0 * nn)) / denom;
        const double half =
            z_99 * std::sqrt(mean * (1.0 - mean) / nn + z2 / (4.0 * nn * nn)) / denom;
        e.ci_lo = std::max(0.0, center - half);
        e.ci_hi = std::min(1.0, center + half);
    }
    return e;
}

// Bernoulli estimate from a hit count.
inline Estimate bernoulli_estimate(std::int64_t hits, std::int64_t n) {
    const double p = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
    return wilson_estimate(p, p * (1.0 - p), n);
}

// Estimate from per-sample scores in [0, 1].
inline Estimate score_estimate(const std::vector<double>& scores) {
    const auto n = static_cast<std::int64_t>(scores.size());
    if (n == 0) return {};
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= std::max<std::int64_t>(1, n - 1);
    return wilson_estimate(mean, var, n);
}

struct KsReport {
    double statistic = 0.0;
    double p_value = 1.0;
    std::int64_t n1 = 0, n2 = 0;
    std::int64_t excluded = 0; // censored pairs dropped before testing
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
inline KsReport ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw domain_error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0, fa = 0.0, fb = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        fa = static_cast<double>(i) / na;
        fb = static_cast<double>(j) / nb;
        d = std::max(d, std::abs(fa - fb));
    }
    KsReport r;
    r.statistic = d;
    r.n1 = static_cast<std::int64_t>(a.size());
    r.n2 = static_cast<std::int64_t>(b.size());
    const double ne = std::sqrt(na * nb / (na + nb));
    r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
    return r;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::vector<double> residuals;
};

// Ordinary least squares y = slope*x + intercept. When per-point standard
// errors are supplied the slope stderr propagates them through the normal
// equations; otherwise it comes from the residual variance.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& y_se = {}) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw domain_error("fit_line: need at least two points");
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xbar += x[i];
        ybar += y[i];
    }
    xbar /= static_cast<double>(n);
    ybar /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx == 0.0) throw domain_error("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    f.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.residuals[i] = y[i] - (f.slope * x[i] + f.intercept);
    if (!y_se.empty()) {
        if (y_se.size() != n) throw domain_error("fit_line: stderr vector length mismatch");
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = (x[i] - xbar) / sxx;
            var += c * c * y_se[i] * y_se[i];
        }
        f.slope_stderr = std::sqrt(var);
    } else if (n > 2) {
        double rss = 0.0;
        for (double r : f.residuals) rss += r * r;
        f.slope_stderr = std::sqrt(rss / (static_cast<double>(n) - 2.0) / sxx);
    }
    return f;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw domain_error("median_of: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace slelab
