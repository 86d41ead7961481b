#pragma once

#include <cmath>
#include <string>

#include "slelab/errors.hpp"

namespace slelab {

// Parameters of chordal SLE(kappa) in the a = 2/kappa time parametrization.
//   s    = 2 - 4a   target dimension of the curve's trace on the real line
//   beta = 4a - 1   boundary hitting exponent
struct SleParams {
    double kappa = 0.0;
    double a = 0.0;
    double s = 0.0;
    double beta = 0.0;

    // true when the interval-hitting formulas apply (4 < kappa < 8)
    bool in_hitting_regime() const { return a > 0.25 && a < 0.5; }
};

inline SleParams sle_params(double kappa) {
    if (!(kappa > 0.0 && kappa <= 8.0))
        throw validation_error("kappa must lie in (0, 8], got " + std::to_string(kappa));
    SleParams p;
    p.kappa = kappa;
    p.a = 2.0 / kappa;
    p.s = 2.0 - 4.0 * p.a;
    p.beta = 4.0 * p.a - 1.0;
    return p;
}

// Variant for operations that require the hitting regime kappa in (4, 8).
inline SleParams sle_params_hitting(double kappa) {
    if (!(kappa > 4.0 && kappa < 8.0))
        throw validation_error("hitting experiments require kappa in (4, 8), got " +
                               std::to_string(kappa));
    return sle_params(kappa);
}

} // namespace slelab
