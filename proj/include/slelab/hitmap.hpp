#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "slelab/errors.hpp"
#include "slelab/params.hpp"
#include "slelab/quadrature.hpp"
#include "slelab/special.hpp"

namespace slelab {

using cplx = std::complex<double>;

// Triangle map for the hitting probabilities. The map sends the closed upper
// half-plane onto the isosceles triangle with vertices
//   F(0) = 1,  F(1) = 0,  F(inf) = exp(i (4a-1) pi),
// interior angle (4a-1) pi at the origin vertex, via
//   F(z) = c_F * integral of xi^(4a-2) (1-xi)^(-2a) d xi from 0 to 1-z,
//   c_F  = Gamma(2a) / (Gamma(1-2a) Gamma(4a-1)).
// The contour is the straight segment; the kernel branch is fixed by
// continuity from the positive real axis, oriented so the image triangle
// lies in the upper half-plane.
class HitMap {
  public:
    explicit HitMap(double a, QuadratureOptions quad = {}) : a_(a), quad_(quad) {
        if (!(a > 0.25 && a < 0.5))
            throw validation_error("HitMap requires a in (1/4, 1/2), i.e. kappa in (4, 8); got a = " +
                                   std::to_string(a));
        c_f_ = gamma_fn(2.0 * a) / (gamma_fn(1.0 - 2.0 * a) * gamma_fn(4.0 * a - 1.0));
        if (!(c_f_ > 0.0)) throw numeric_error("HitMap: normalization must be positive");
    }

    explicit HitMap(const SleParams& p, QuadratureOptions quad = {}) : HitMap(p.a, quad) {}

    double a() const { return a_; }
    double normalization() const { return c_f_; }
    const QuadratureOptions& quadrature() const { return quad_; }

    // Fast exact evaluation on the real interval [0, 1] by the two power
    // series of the incomplete beta integral (radius of convergence 1; both
    // are used only at arguments <= 1/2).
    double eval_real(double v) const {
        if (!(v >= 0.0 && v <= 1.0))
            throw domain_error("HitMap::eval_real: argument must lie in [0, 1]");
        if (v == 0.0) return 1.0;
        if (v == 1.0) return 0.0;
        if (v > 0.5) {
            const double u = 1.0 - v;
            return c_f_ * std::pow(u, 4.0 * a_ - 1.0) * tail_series(u);
        }
        return 1.0 - c_f_ * std::pow(v, 1.0 - 2.0 * a_) * head_series(v);
    }

    // Contour quadrature evaluation on the closed upper half-plane.
    cplx eval(cplx z) const {
        if (z.imag() < -1e-12)
            throw domain_error("HitMap::eval: argument must lie in the closed upper half-plane");
        if (z.imag() <= 0.0) z = {z.real(), 0.0};
        if (z.imag() == 0.0) {
            const double x = z.real();
            if (x >= 0.0 && x <= 1.0) return {eval_unit_segment(x), 0.0};
            if (x > 1.0) return eval_right_ray(x);
            return eval_left_ray(x);
        }
        return eval_interior(z);
    }

    // F(infinity) along 1 - z -> -R with the analytic tail of the integral
    // appended, so the truncation error is far below the quadrature tolerance.
    cplx f_infinity(double big_r = 1e8) const {
        const cplx val_at_r = eval_right_ray(1.0 + big_r);
        const double phase_angle = (4.0 * a_ - 1.0) * std::numbers::pi;
        const cplx phase{std::cos(phase_angle), std::sin(phase_angle)};
        return val_at_r + c_f_ * phase * tail_integral(big_r);
    }

  private:
    // sum_k (2a)_k/k! * u^k / (4a-1+k); F(v) = c_F (1-v)^(4a-1) tail_series(1-v)
    double tail_series(double u) const {
        double coeff = 1.0, sum = 0.0;
        for (int k = 0; k < 400; ++k) {
            const double term = coeff / (4.0 * a_ - 1.0 + k);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
            coeff *= u * (2.0 * a_ + k) / (k + 1.0);
        }
        return sum;
    }

    // sum_k (2-4a)_k/k! * v^k / (1-2a+k); F(v) = 1 - c_F v^(1-2a) head_series(v)
    double head_series(double v) const {
        double coeff = 1.0, sum = 0.0;
        for (int k = 0; k < 400; ++k) {
            const double term = coeff / (1.0 - 2.0 * a_ + k);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
            coeff *= v * (2.0 - 4.0 * a_ + k) / (k + 1.0);
        }
        return sum;
    }

    // integral of xi^(4a-2)(1-xi)^(-2a) over [0, w] for w in [0, 1]; both
    // endpoint singularities removed by power substitutions.
    double beta_segment(double w) const {
        if (w <= 0.0) return 0.0;
        const double p = 4.0 * a_ - 1.0; // xi^(p-1) at 0
        const double q = 1.0 - 2.0 * a_; // (1-xi)^(q-1) at 1
        const double split = std::min(0.5, w);
        // xi = tau^(1/p) on [0, split]
        const double ia = integrate(
                              [&](double tau) {
                                  const double xi = std::pow(tau, 1.0 / p);
                                  return cplx{std::pow(1.0 - xi, -2.0 * a_), 0.0};
                              },
                              0.0, std::pow(split, p), quad_)
                              .real() /
                          p;
        if (w <= 0.5) return ia;
        // 1 - xi = sigma^(1/q) on [split, w]
        const double ib = integrate(
                              [&](double sigma) {
                                  const double xi = 1.0 - std::pow(sigma, 1.0 / q);
                                  return cplx{std::pow(xi, 4.0 * a_ - 2.0), 0.0};
                              },
                              std::pow(1.0 - w, q), std::pow(0.5, q), quad_)
                              .real() /
                          q;
        return ia + ib;
    }

    double eval_unit_segment(double x) const { return c_f_ * beta_segment(1.0 - x); }

    // z = x > 1: contour runs along the negative axis, arg(1-z) = +pi
    cplx eval_right_ray(double x) const {
        const double r = x - 1.0; // = |1-z|
        const double p = 4.0 * a_ - 1.0;
        // integral of u^(4a-2) (1+r u)^(-2a) du over [0,1], u = tau^(1/p) near 0
        const double ia = integrate(
                              [&](double tau) {
                                  const double u = std::pow(tau, 1.0 / p);
                                  return cplx{std::pow(1.0 + r * u, -2.0 * a_), 0.0};
                              },
                              0.0, std::pow(0.5, p), quad_)
                              .real() /
                          p;
        const double ib = integrate(
                              [&](double u) {
                                  return cplx{std::pow(u, 4.0 * a_ - 2.0) *
                                                  std::pow(1.0 + r * u, -2.0 * a_),
                                              0.0};
                              },
                              0.5, 1.0, quad_)
                              .real();
        const double angle = p * std::numbers::pi;
        return c_f_ * std::pow(r, p) * (ia + ib) * cplx{std::cos(angle), std::sin(angle)};
    }

    // z = x < 0: the contour crosses xi = 1; past it the kernel carries the
    // constant phase exp(2 a pi i) (continuity from Im z > 0).
    cplx eval_left_ray(double x) const {
        const double len = -x;
        const double q = 1.0 - 2.0 * a_;
        // J = integral of t^(4a-2) (t-1)^(-2a) dt over [1, 1+len], t = 1 + sigma^(1/q)
        const double j = integrate(
                             [&](double sigma) {
                                 const double t = 1.0 + std::pow(sigma, 1.0 / q);
                                 return cplx{std::pow(t, 4.0 * a_ - 2.0), 0.0};
                             },
                             0.0, std::pow(len, q), quad_)
                             .real() /
                         q;
        const double angle = 2.0 * a_ * std::numbers::pi;
        return 1.0 + c_f_ * j * cplx{std::cos(angle), std::sin(angle)};
    }

    // Im z > 0. Integrates over the straight contour in the variable
    // u in [0,1], xi = (1 - conj z) u; with Im z > 0 the factor 1 - (1-conj z)u
    // stays in the lower half-plane, so principal powers are continuous.
    cplx eval_interior(cplx z) const {
        const cplx v = 1.0 - std::conj(z);
        const double p = 4.0 * a_ - 1.0;
        const cplx expo{-2.0 * a_, 0.0};
        const cplx ia = integrate(
                            [&](double tau) {
                                const double u = std::pow(tau, 1.0 / p);
                                return std::pow(1.0 - v * u, expo);
                            },
                            0.0, std::pow(0.5, p), quad_) /
                        p;
        const cplx ib = integrate(
            [&](double u) {
                return cplx{std::pow(u, 4.0 * a_ - 2.0), 0.0} * std::pow(1.0 - v * u, expo);
            },
            0.5, 1.0, quad_);
        return c_f_ * std::pow(v, cplx{p, 0.0}) * (ia + ib);
    }

    // integral of t^(4a-2) (1+t)^(-2a) dt over [R, infinity), by the
    // descending expansion of (1+1/t)^(-2a); R is huge so few terms matter.
    double tail_integral(double big_r) const {
        double coeff = 1.0, sum = 0.0;
        for (int k = 0; k < 12; ++k) {
            sum += coeff * std::pow(big_r, 2.0 * a_ - 1.0 - k) / (k + 1.0 - 2.0 * a_);
            coeff *= -(2.0 * a_ + k) / (k + 1.0);
        }
        return sum;
    }

    double a_;
    double c_f_;
    QuadratureOptions quad_;
};

// ---------------------------------------------------------------------------
// Triangle geometry and the probability formulas built on the map.

struct Triangle {
    cplx v0{1.0, 0.0};  // image of 0
    cplx v1{0.0, 0.0};  // image of 1
    cplx vinf{0.0, 0.0}; // image of infinity
    double d0 = 0.0, d1 = 0.0, dinf = 0.0; // trilinear constants

    // distance from z to the side opposite vertex j (0, 1, inf)
    double side_distance(cplx z, int j) const {
        cplx p, q;
        switch (j) {
            case 0: p = v1; q = vinf; break;
            case 1: p = v0; q = vinf; break;
            default: p = v0; q = v1; break;
        }
        return std::abs(std::imag((z - p) * std::conj(q - p))) / std::abs(q - p);
    }
};

inline Triangle make_triangle(const HitMap& hm) {
    Triangle tri;
    tri.vinf = hm.f_infinity();
    const double eps = 1e-12;
    if (!(std::abs(tri.vinf - tri.v0) > eps && std::abs(tri.vinf - tri.v1) > eps &&
          tri.vinf.imag() > eps))
        throw geometry_error("make_triangle: degenerate triangle");
    tri.d0 = 1.0 / tri.side_distance(tri.v0, 0);
    tri.d1 = 1.0 / tri.side_distance(tri.v1, 1);
    tri.dinf = 1.0 / tri.side_distance(tri.vinf, 2);
    return tri;
}

struct TrilinearConstants {
    double d0, d1, dinf;
};

inline TrilinearConstants trilinear_constants(const Triangle& tri) {
    if (!(tri.d0 > 0.0 && tri.d1 > 0.0 && tri.dinf > 0.0) || !std::isfinite(tri.d0) ||
        !std::isfinite(tri.d1) || !std::isfinite(tri.dinf))
        throw geometry_error("trilinear_constants: degenerate triangle");
    return {tri.d0, tri.d1, tri.dinf};
}

// Swallowing probabilities of z against the point 1, as the barycentric
// weights of F(z) in the triangle: c0 = P(T_z < T_1), c1 = P(T_z = T_1),
// cinf = P(T_z > T_1).
struct Barycentric {
    double c0 = 0.0, c1 = 0.0, cinf = 0.0;
};

inline Barycentric barycentric(cplx z, const Triangle& tri, const HitMap& hm,
                               double tolerance = 1e-6) {
    if (std::abs(z) < 1e-14 || std::abs(z - 1.0) < 1e-14)
        throw domain_error("barycentric: z must differ from the vertices 0 and 1");
    const cplx f = hm.eval(z);
    const cplx e0 = tri.v0 - tri.v1;
    const cplx einf = tri.vinf - tri.v1;
    const cplx rhs = f - tri.v1;
    const double det = e0.real() * einf.imag() - e0.imag() * einf.real();
    if (std::abs(det) < 1e-14) throw geometry_error("barycentric: collapsed triangle");
    Barycentric b;
    b.c0 = (rhs.real() * einf.imag() - rhs.imag() * einf.real()) / det;
    b.cinf = (e0.real() * rhs.imag() - e0.imag() * rhs.real()) / det;
    b.c1 = 1.0 - b.c0 - b.cinf;
    const double low = -tolerance, high = 1.0 + tolerance;
    if (b.c0 < low || b.c0 > high || b.c1 < low || b.c1 > high || b.cinf < low || b.cinf > high)
        throw consistency_error("barycentric: F(z) falls outside the numerical triangle");
    return b;
}

// P(curve hits [y, x]) = P(T_x > T_y) = F(y/x) for 0 < y < x.
inline double hit_prob_interval(double y, double x, const HitMap& hm) {
    if (!(y > 0.0 && x > 0.0 && y <= x))
        throw domain_error("hit_prob_interval: need 0 < y <= x");
    if (y == x) return 0.0; // degenerate interval
    return hm.eval_real(y / x);
}

// Conditional form after mapping out a stopped hull: with u the driver value
// and g_y < g_x the mapped images, the not-yet-swallowed configuration is a
// fresh one with the interval ends at g_y - u and g_x - u, and
//   P(hit | configuration) = F((g_y - u)/(g_x - u)).
// A vanishing interval (g_y -> g_x) gives F(1) = 0.
inline double conditional_hit_prob(double g_x, double g_y, double u, const HitMap& hm) {
    if (!(u < g_y && g_y <= g_x))
        throw domain_error("conditional_hit_prob: need u < g_y <= g_x");
    return hm.eval_real((g_y - u) / (g_x - u));
}

// Exact probability of hitting both adjacent intervals [x1,x2] and [x2,x3]
// in order: hitting either interval is the same as hitting their union.
inline double adjacent_two_interval(double x1, double x2, double x3, const HitMap& hm) {
    if (!(0.0 < x1 && x1 < x2 && x2 < x3))
        throw domain_error("adjacent_two_interval: need 0 < x1 < x2 < x3");
    const double v = hm.eval_real(x1 / x2) + hm.eval_real(x2 / x3) - hm.eval_real(x1 / x3);
    return std::min(1.0, std::max(0.0, v));
}

// Shape of P(T_{x + r e^{i theta}} < T_y) for r <= (x-y)/4, without the
// unspecified multiplicative constant.
inline double near_point_asymptote(double x, double y, double r, double theta,
                                   const SleParams& params) {
    if (!(0.0 < y && y < x)) throw domain_error("near_point_asymptote: need 0 < y < x");
    if (!(theta >= 0.0 && theta <= std::numbers::pi))
        throw domain_error("near_point_asymptote: theta must lie in [0, pi]");
    if (!(r <= (x - y) / 4.0))
        throw regime_error("near_point_asymptote: r exceeds (x-y)/4");
    const double a = params.a;
    return std::pow(y, 1.0 - 2.0 * a) / std::pow(x, 2.0 * a) *
           std::pow(x - y, 4.0 * a - 2.0) * r * std::sin(theta);
}

// lim_{v->1} F(v)/(1-v)^(4a-1) = Gamma(2a) / ((4a-1) Gamma(1-2a) Gamma(4a-1))
inline double asympt_const(double a) {
    if (!(a > 0.25 && a < 0.5)) throw validation_error("asympt_const: a must lie in (1/4, 1/2)");
    return gamma_fn(2.0 * a) / ((4.0 * a - 1.0) * gamma_fn(1.0 - 2.0 * a) * gamma_fn(4.0 * a - 1.0));
}

} // namespace slelab
