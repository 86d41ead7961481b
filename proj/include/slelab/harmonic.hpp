#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>

#include "slelab/errors.hpp"
#include "slelab/rng.hpp"

namespace slelab {

// Harmonic measure of [x1, x2] from z in the upper half-plane (Poisson
// kernel integral): (arg(z - x2) - arg(z - x1)) / pi.
inline double hm_halfplane_interval(std::complex<double> z, double x1, double x2) {
    if (!(z.imag() > 0.0)) throw domain_error("hm_halfplane_interval: need Im z > 0");
    if (!(x1 < x2)) throw domain_error("hm_halfplane_interval: need x1 < x2");
    return (std::arg(z - x2) - std::arg(z - x1)) / std::numbers::pi;
}

// Exit probability on the bottom boundary R of the strip R x [0, pi i],
// started at i theta.
inline double hm_strip_bottom(double theta) {
    if (!(theta >= 0.0 && theta <= std::numbers::pi))
        throw domain_error("hm_strip_bottom: theta must lie in [0, pi]");
    return (std::numbers::pi - theta) / std::numbers::pi;
}

struct ArgIntervalBound {
    double lhs = 0.0; // arg(1 - eps/(z - y))
    double rhs = 0.0; // (16/3) eps Im z / (x - y)^2
};

// The explicit angle bound used for points on the left arc: valid for
// |z - x| <= (x-y)/4 and eps <= (x-y)/2, where |z - y| >= 3(x-y)/4 keeps the
// displaced ray's real part above 1/3.
inline ArgIntervalBound arg_interval_bound(std::complex<double> z, double y, double eps,
                                           double x) {
    if (!(z.imag() > 0.0)) throw regime_error("arg_interval_bound: need Im z > 0");
    if (!(y < x)) throw regime_error("arg_interval_bound: need y < x");
    if (!(std::abs(z - x) <= (x - y) / 4.0 + 1e-12))
        throw regime_error("arg_interval_bound: need |z - x| <= (x-y)/4");
    if (!(eps > 0.0 && eps <= (x - y) / 2.0 + 1e-12))
        throw regime_error("arg_interval_bound: need 0 < eps <= (x-y)/2");
    ArgIntervalBound b;
    b.lhs = std::arg(1.0 - eps / (z - y));
    b.rhs = (16.0 / 3.0) * eps * z.imag() / ((x - y) * (x - y));
    return b;
}

// --- Brownian exit sampler -------------------------------------------------

enum class ExitDomain { halfplane, strip, strip_with_slit };

enum class ExitLabel {
    halfplane_real,   // exited the half-plane on R
    halfplane_far,    // capped at the far-field radius (counted off-target)
    strip_bottom,     // exited the strip on R
    strip_top,        // exited on R + pi i
    slit_left,        // hit the left side of the vertical slit [0, i phi]
    slit_right,       // hit the right side
};

struct ExitSample {
    ExitLabel label = ExitLabel::halfplane_real;
    std::complex<double> point{0.0, 0.0};
    std::int64_t steps = 0;
};

struct ExitSamplerOptions {
    double step = 1e-3;             // per-move Gaussian standard deviation
    double slit_height = 0.0;       // phi for strip_with_slit
    double far_radius = 12.0;       // half-plane cap; escapes it count off-target
    std::int64_t step_budget = 400'000'000;
};

// Fixed-step Gaussian walk; a move that crosses the boundary exits at the
// crossing point and a walk passing within half a step of the slit is snapped
// onto it. The half-plane walk is capped at |z| = far_radius: the chance such
// a walk would still land in a bounded target is O(1/far_radius^2), far below
// the statistical resolution the sampler is used at.
inline ExitSample brownian_exit(ExitDomain domain, std::complex<double> z,
                                const ExitSamplerOptions& opt, std::uint64_t seed) {
    const double h = opt.step;
    if (!(h > 0.0)) throw domain_error("brownian_exit: step must be positive");
    if (!(z.imag() > 0.0)) throw domain_error("brownian_exit: start must be interior");
    if (domain != ExitDomain::halfplane && !(z.imag() < std::numbers::pi))
        throw domain_error("brownian_exit: start outside the strip");
    const double phi = opt.slit_height;
    if (domain == ExitDomain::strip_with_slit &&
        !(phi > 0.0 && phi < std::numbers::pi))
        throw domain_error("brownian_exit: slit height must lie in (0, pi)");

    Xoshiro256pp rng(seed);
    ExitSample out;
    double xr = z.real(), xi = z.imag();
    for (std::int64_t s = 1; s <= opt.step_budget; ++s) {
        const double nr = xr + h * rng.next_normal();
        const double ni = xi + h * rng.next_normal();
        out.steps = s;
        if (ni <= 0.0) {
            // crossing point of the segment with the real axis
            const double f = xi / (xi - ni);
            const double cx = xr + f * (nr - xr);
            out.point = {cx, 0.0};
            out.label = domain == ExitDomain::halfplane ? ExitLabel::halfplane_real
                                                        : ExitLabel::strip_bottom;
            return out;
        }
        if (domain != ExitDomain::halfplane && ni >= std::numbers::pi) {
            const double f = (std::numbers::pi - xi) / (ni - xi);
            out.point = {xr + f * (nr - xr), std::numbers::pi};
            out.label = ExitLabel::strip_top;
            return out;
        }
        if (domain == ExitDomain::strip_with_slit) {
            // crossing of the vertical segment [0, i phi]
            if ((xr > 0.0) != (nr > 0.0)) {
                const double f = xr / (xr - nr);
                const double cy = xi + f * (ni - xi);
                if (cy <= phi) {
                    out.point = {0.0, cy};
                    out.label = xr > 0.0 ? ExitLabel::slit_right : ExitLabel::slit_left;
                    return out;
                }
            }
            if (std::abs(nr) <= 0.5 * h && ni <= phi) { // snap within half a step
                out.point = {0.0, ni};
                out.label = nr >= 0.0 ? ExitLabel::slit_right : ExitLabel::slit_left;
                return out;
            }
        }
        if (domain == ExitDomain::halfplane && nr * nr + ni * ni >= opt.far_radius * opt.far_radius) {
            out.point = {nr, ni};
            out.label = ExitLabel::halfplane_far;
            return out;
        }
        xr = nr;
        xi = ni;
    }
    throw sampler_error("brownian_exit: step budget of " + std::to_string(opt.step_budget) +
                        " exhausted");
}

} // namespace slelab
