#pragma once

#include <cmath>
#include <numbers>

#include "slelab/errors.hpp"

namespace slelab {

// Lanczos approximation (g = 7, 9 terms). Implemented here so gamma values
// do not depend on the platform's libm. Relative error is below 1e-13 on the
// arguments this project uses (positive reals up to ~5).
inline double gamma_fn(double x) {
    static constexpr double coeff[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };
    if (!(x > 0.0 && std::isfinite(x)))
        throw domain_error("gamma_fn: argument must be positive and finite");
    if (x < 0.5) {
        // reflection keeps the Lanczos core on arguments >= 0.5
        return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_fn(1.0 - x));
    }
    const double z = x - 1.0;
    double acc = coeff[0];
    for (int k = 1; k < 9; ++k) acc += coeff[k] / (z + k);
    const double t = z + 7.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * acc;
}

// Kolmogorov distribution tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::min(1.0, std::max(0.0, 2.0 * sum));
}

inline constexpr double z_99 = 2.5758293035489004; // normal quantile for 99% two-sided

} // namespace slelab
