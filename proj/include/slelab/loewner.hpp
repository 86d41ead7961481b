#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "slelab/driver.hpp"
#include "slelab/errors.hpp"

namespace slelab {

// A point whose re-based gap falls below this is declared swallowed at the
// end of the step; below the diffusive scale the next increment swallows it
// with probability near 1. The bias shrinks as dt -> 0.
inline double swallow_tol(double a, double dt) { return 0.1 * std::sqrt(a * dt); }

inline constexpr std::int64_t alive_step = -1;

struct SwallowTime {
    std::int64_t step = alive_step; // -1 when the point survived the horizon
    double time = 0.0;              // step*dt, or the horizon when survived
    bool survived = false;
};

// Forward-flow state of one real boundary point x0 > 0. `gap` is
// g_t(x0) - U_t and `deriv` is g_t'(x0); both evolve by the exact
// constant-driver solution within each step.
struct TrackedPoint {
    double x0 = 0.0;
    double gap = 0.0;
    double deriv = 1.0;
    std::int64_t swallowed_step = alive_step;

    bool alive() const { return swallowed_step == alive_step; }
};

inline TrackedPoint make_tracked(double x0) {
    if (!(x0 > 0.0)) throw domain_error("tracked points must start on the positive real axis");
    return TrackedPoint{x0, x0, 1.0, alive_step};
}

// One step of the point flow. The driver is frozen at u_before inside the
// step and the jump to u_after is applied at the boundary:
//   gap' = sqrt(gap^2 + 2 a dt),  gap_new = gap' + u_before - u_after,
//   deriv *= gap/gap'   (the same separable solution, differentiated in x0).
inline TrackedPoint advance_step(TrackedPoint p, double u_before, double u_after, double dt,
                                 double a, std::int64_t step = 0, double tol = -1.0) {
    if (!p.alive()) throw domain_error("advance_step: point already swallowed");
    if (tol < 0.0) tol = swallow_tol(a, dt);
    const double lifted = std::sqrt(p.gap * p.gap + 2.0 * a * dt);
    p.deriv *= p.gap / lifted;
    p.gap = lifted + u_before - u_after;
    if (p.gap <= tol) p.swallowed_step = step;
    return p;
}

// Result of a shared-driver forward sweep over a sorted batch of points.
// `death_gap` holds the gap at the start of the swallowing step (recovered by
// inverting the step map), which is what conditional closures of same-step
// ties evaluate; survivors keep their final gap there instead.
struct SweepResult {
    std::vector<std::int64_t> step; // swallow step per point, -1 = survived
    std::vector<double> final_gap;  // gap at the end for survivors, NaN otherwise
    std::vector<double> death_gap;  // pre-step gap at swallowing, final gap for survivors
    std::int64_t steps_run = 0;
    std::int64_t horizon_steps = 0;
    double dt = 0.0;

    bool swallowed(std::size_t i) const { return step[i] != alive_step; }
    SwallowTime swallow_time(std::size_t i) const {
        if (swallowed(i)) return {step[i], static_cast<double>(step[i]) * dt, false};
        return {alive_step, static_cast<double>(horizon_steps) * dt, true};
    }
};

// Forward sweep of every point through one driver realization. Points are
// sorted ascending, so the alive set is always a suffix and the hot loop is a
// branch-free map over contiguous gaps.
template <class Stream>
SweepResult sweep_points(const std::vector<double>& points, double a, double dt,
                         std::int64_t horizon_steps, Stream& driver, double tol = -1.0) {
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(points[i] > 0.0)) throw domain_error("sweep_points: points must be positive");
        if (i > 0 && points[i] < points[i - 1])
            throw domain_error("sweep_points: points must be sorted ascending");
    }
    if (tol < 0.0) tol = swallow_tol(a, dt);

    SweepResult res;
    res.dt = dt;
    res.horizon_steps = horizon_steps;
    res.step.assign(n, alive_step);
    res.final_gap = points;
    res.death_gap.assign(n, std::numeric_limits<double>::quiet_NaN());

    double* g = res.final_gap.data();
    const double c = 2.0 * a * dt;
    std::size_t lo = 0;
    std::int64_t s = 0;
    while (s < horizon_steps && lo < n) {
        ++s;
        const double du = driver.next_increment();
        for (std::size_t i = lo; i < n; ++i) g[i] = std::sqrt(g[i] * g[i] + c) - du;
        // order is preserved, so only the frontier can cross the tolerance
        while (lo < n && g[lo] <= tol) {
            res.step[lo] = s;
            // invert the step map for the gap at the start of this step
            const double lifted = g[lo] + du;
            res.death_gap[lo] = std::sqrt(std::max(0.0, lifted * lifted - c));
            g[lo] = std::numeric_limits<double>::quiet_NaN();
            ++lo;
        }
    }
    res.steps_run = s;
    for (std::size_t i = lo; i < n; ++i) res.death_gap[i] = g[i];

    // monotone swallowing: K_t meets R+ in an interval, so steps are sorted
    for (std::size_t i = 1; i < n; ++i) {
        const auto a_ = res.step[i - 1], b_ = res.step[i];
        if (a_ == alive_step && b_ != alive_step)
            throw consistency_error("sweep_points: swallow order violates monotonicity");
        if (a_ != alive_step && b_ != alive_step && b_ < a_)
            throw consistency_error("sweep_points: swallow steps not nondecreasing");
    }
    return res;
}

// --- martingale closures at the diffusive danger zone -----------------------
//
// Binary order comparisons at step resolution misread interval hits: a curve
// touch inside a narrow interval usually kills both endpoints within one
// driver increment, so "same step" ties swallow most of the signal. Instead,
// a pair event {T(hi) > T(lo)} is closed the first time lo's gap ends a step
// at or below theta*sqrt(dt), while the order is still trustworthy: the
// closure value is the conditional hitting probability of the surviving
// configuration, so the score is exact by optional stopping and only the
// pre-closure discretization of the flow remains.

struct PairRequest {
    std::size_t lo = 0, hi = 0;
};

struct PairedSweep {
    SweepResult sweep;
    std::vector<double> score;             // closure value per requested pair
    std::vector<std::int64_t> closed_step; // -1 when closed at the horizon
};

inline constexpr double default_dip_theta = 8.0;

// `closure(gap_lo, gap_hi)` maps a stopped configuration to the conditional
// probability of {T(hi) > T(lo)}; pairs need lo < hi and ascending lo order.
template <class Stream, class Closure>
PairedSweep sweep_with_closures(const std::vector<double>& points,
                                const std::vector<PairRequest>& pairs, double a, double dt,
                                std::int64_t horizon_steps, Stream& driver,
                                const Closure& closure, double theta = default_dip_theta,
                                double tol = -1.0) {
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(points[i] > 0.0)) throw domain_error("sweep_with_closures: points must be positive");
        if (i > 0 && points[i] < points[i - 1])
            throw domain_error("sweep_with_closures: points must be sorted ascending");
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (!(pairs[p].lo < pairs[p].hi) || pairs[p].hi >= n)
            throw domain_error("sweep_with_closures: bad pair indices");
        if (p > 0 && pairs[p].lo < pairs[p - 1].lo)
            throw domain_error("sweep_with_closures: pairs must be sorted by lo");
    }
    if (tol < 0.0) tol = swallow_tol(a, dt);
    const double dip = theta * std::sqrt(dt);

    PairedSweep out;
    SweepResult& res = out.sweep;
    res.dt = dt;
    res.horizon_steps = horizon_steps;
    res.step.assign(n, alive_step);
    res.final_gap = points;
    res.death_gap.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.score.assign(pairs.size(), -1.0);
    out.closed_step.assign(pairs.size(), alive_step);

    double* g = res.final_gap.data();
    const double c = 2.0 * a * dt;
    std::size_t lo = 0;   // death frontier
    std::size_t d = 0;    // dip frontier
    std::size_t next = 0; // first pair not yet closed
    std::int64_t s = 0;
    while (s < horizon_steps && lo < n) {
        ++s;
        const double du = driver.next_increment();
        for (std::size_t i = lo; i < n; ++i) g[i] = std::sqrt(g[i] * g[i] + c) - du;
        while (lo < n && g[lo] <= tol) {
            res.step[lo] = s;
            const double lifted = g[lo] + du;
            res.death_gap[lo] = std::sqrt(std::max(0.0, lifted * lifted - c));
            g[lo] = std::numeric_limits<double>::quiet_NaN();
            ++lo;
        }
        // gaps are ordered, so the dipped set is a prefix; close every pair
        // whose lower endpoint has just entered the danger zone
        while (d < n && (d < lo || g[d] <= dip)) {
            while (next < pairs.size() && pairs[next].lo == d) {
                const std::size_t h = pairs[next].hi;
                // a death in this very step fell straight through the zone;
                // its recorded start-of-step gap stands in (mass ~ Phi(-theta))
                const double gl = d < lo ? res.death_gap[d] : g[d];
                const double gh = h < lo ? res.death_gap[h] : g[h];
                out.score[next] = gh > 0.0 ? closure(std::min(gl, gh), gh) : 0.0;
                out.closed_step[next] = s;
                ++next;
            }
            ++d;
        }
    }
    res.steps_run = s;
    for (std::size_t i = lo; i < n; ++i) res.death_gap[i] = g[i];
    // pairs still pending close on the horizon state (both endpoints alive)
    for (; next < pairs.size(); ++next) {
        const double gl = res.final_gap[pairs[next].lo];
        const double gh = res.final_gap[pairs[next].hi];
        out.score[next] = closure(gl, gh);
    }
    for (std::size_t i = 1; i < n; ++i)
        if (res.step[i] != alive_step && res.step[i - 1] == alive_step)
            throw consistency_error("sweep_with_closures: monotone swallowing violated");
    return out;
}

inline SwallowTime swallow_time(const DrivingPath& path, double x, double a) {
    PathStream stream(path);
    auto res = sweep_points({x}, a, path.dt, static_cast<std::int64_t>(path.steps()), stream);
    return res.swallow_time(0);
}

inline constexpr int default_grid_level_cap = 16;

// Swallowing times of the dyadic grid k 2^-n, k = 1..2^n, one shared sweep.
inline std::vector<SwallowTime> swallow_times_grid(const DrivingPath& path, int n, double a,
                                                   int level_cap = default_grid_level_cap) {
    if (n < 1 || n > level_cap)
        throw resource_error("swallow_times_grid: level " + std::to_string(n) +
                             " outside [1, " + std::to_string(level_cap) + "]");
    const std::size_t count = std::size_t{1} << n;
    std::vector<double> pts(count);
    const double h = std::ldexp(1.0, -n);
    for (std::size_t k = 0; k < count; ++k) pts[k] = static_cast<double>(k + 1) * h;
    PathStream stream(path);
    auto res = sweep_points(pts, a, path.dt, static_cast<std::int64_t>(path.steps()), stream);
    std::vector<SwallowTime> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = res.swallow_time(k);
    return out;
}

// Flows a single real point to `upto_step`, keeping the derivative.
inline TrackedPoint flow_real_point(const DrivingPath& path, double x, double a,
                                    std::int64_t upto_step) {
    TrackedPoint p = make_tracked(x);
    const auto m = std::min<std::int64_t>(upto_step, static_cast<std::int64_t>(path.steps()));
    for (std::int64_t k = 0; k < m && p.alive(); ++k)
        p = advance_step(p, path.values[k], path.values[k + 1], path.dt, a, k + 1);
    return p;
}

// square root with values in the closed upper half-plane
inline std::complex<double> sqrt_upper(std::complex<double> z) {
    std::complex<double> r = std::sqrt(z);
    return r.imag() < 0.0 ? -r : r;
}

// Forward flow of a point of the closed upper half-plane in gap coordinates
// w = g_t(z) - U_t. A point is declared swallowed once w enters the box
// Re <= tol, Im <= sqrt(a dt /2): past that the discrete flow has collapsed
// it onto the real axis at the driver's location.
struct ComplexFlowResult {
    std::complex<double> w{0.0, 0.0}; // gap at the stop step (swallow or horizon)
    double driver_value = 0.0;        // U at the stop step
    std::int64_t swallowed_step = alive_step;
    std::int64_t steps_run = 0;

    bool alive() const { return swallowed_step == alive_step; }
    std::complex<double> map_value() const { return w + driver_value; } // g_t(z)
};

template <class Stream>
ComplexFlowResult flow_complex_point(std::complex<double> z, double a, double dt,
                                     std::int64_t horizon_steps, Stream& driver) {
    if (z.imag() < 0.0) throw domain_error("flow_complex_point: need Im z >= 0");
    const double c = 2.0 * a * dt;
    const double tol = swallow_tol(a, dt);
    const double im_tol = 0.5 * std::sqrt(c);
    ComplexFlowResult res;
    res.w = z;
    double u = 0.0;
    std::int64_t s = 0;
    while (s < horizon_steps) {
        ++s;
        const double du = driver.next_increment();
        res.w = sqrt_upper(res.w * res.w + c) - du;
        u += du;
        if (!std::isfinite(res.w.real()) || !std::isfinite(res.w.imag()))
            throw solver_error("flow_complex_point: non-finite state at step " + std::to_string(s));
        if (res.w.imag() <= im_tol && res.w.real() <= tol) {
            res.swallowed_step = s;
            break;
        }
    }
    res.steps_run = s;
    res.driver_value = u;
    return res;
}

// Approximate curve point at time t: seed U_t + i delta and run the reversed
// per-step slit maps back to time zero.
struct TracePoint {
    double time = 0.0;
    std::complex<double> point{0.0, 0.0};
    double mesh = 0.0;
};

inline TracePoint trace_point(const DrivingPath& path, double t, double delta, double a) {
    if (!(delta > 0.0)) throw domain_error("trace_point: delta must be positive");
    if (t < 0.0 || t > path.horizon() + 0.5 * path.dt)
        throw domain_error("trace_point: time outside the driver horizon");
    const auto m = static_cast<std::int64_t>(std::llround(t / path.dt));
    const double c = 2.0 * a * path.dt;
    std::complex<double> z{path.values[static_cast<std::size_t>(m)], delta};
    for (std::int64_t k = m - 1; k >= 0; --k) {
        const double u = path.values[static_cast<std::size_t>(k)];
        const std::complex<double> shifted = z - u;
        z = u + sqrt_upper(shifted * shifted - c);
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw solver_error("trace_point: reverse flow lost finiteness at step " +
                               std::to_string(k));
    }
    return TracePoint{t, z, delta};
}

inline constexpr double trace_seed_height = 1e-9;

// Curve points at many times from one driver in a single backward pass.
// Walker j seeds at U(m_j) + i delta when the pass reaches its start time and
// then shares every earlier inverse slit map with the walkers already active,
// so the total cost is sum_j m_j inverse steps amortized over a flat array.
inline std::vector<std::complex<double>> trace_points_batch(const DrivingPath& path,
                                                            const std::vector<std::int64_t>& at,
                                                            double delta, double a) {
    const std::size_t count = at.size();
    std::vector<std::complex<double>> out(count);
    if (count == 0) return out;
    for (std::size_t j = 1; j < at.size(); ++j)
        if (at[j] < at[j - 1]) throw domain_error("trace_points_batch: steps must be sorted");
    if (at.front() < 0 || at.back() > static_cast<std::int64_t>(path.steps()))
        throw domain_error("trace_points_batch: step outside the driver");

    std::vector<double> re(count), im(count);
    const double c = 2.0 * a * path.dt;
    std::size_t active = 0;                      // walkers occupy [0, active)
    std::size_t next = count;                    // walkers activate from the back of `at`
    for (std::int64_t k = at.back() - 1; k >= 0; --k) {
        while (next > 0 && at[next - 1] == k + 1) {
            --next;
            re[active] = path.values[static_cast<std::size_t>(k + 1)];
            im[active] = delta;
            ++active;
        }
        const double u = path.values[static_cast<std::size_t>(k)];
        for (std::size_t w = 0; w < active; ++w) {
            const double wr = re[w] - u;
            const double wi = im[w];
            const double zr = wr * wr - wi * wi - c;
            const double zi = 2.0 * wr * wi;
            const double r = std::sqrt(zr * zr + zi * zi);
            const double sr = std::sqrt(std::max(0.0, 0.5 * (r + zr)));
            const double si = std::sqrt(std::max(0.0, 0.5 * (r - zr)));
            re[w] = u + (zi == 0.0 ? sr : std::copysign(sr, zi));
            im[w] = si;
        }
    }
    while (next > 0) { // walkers seeded at step 0 never move
        --next;
        re[active] = path.values[0];
        im[active] = delta;
        ++active;
    }
    // walkers were activated in reverse order of `at`
    for (std::size_t j = 0; j < count; ++j)
        out[count - 1 - j] = {re[j], im[j]};
    return out;
}

// dist(x, boundary of K_t), approximated as the minimum of
//   (i)  |x - gamma(t_j)| over trace points at time resolution `mesh`, and
//   (ii) x - s_t, with s_t the largest swallowed point of a `mesh`-spaced
//        real grid (only when something was swallowed).
inline double hull_distance_at_step(const DrivingPath& path, std::int64_t at_step, double x,
                                    double a, double mesh) {
    if (at_step <= 0) return x;
    const double t = static_cast<double>(at_step) * path.dt;

    std::vector<double> grid;
    for (double p = mesh; p < x; p += mesh) grid.push_back(p);
    double best = std::numeric_limits<double>::infinity();

    if (!grid.empty()) {
        PathStream stream(path);
        auto res = sweep_points(grid, a, path.dt, at_step, stream);
        double s_t = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (res.swallowed(i)) s_t = grid[i];
        if (s_t > 0.0) best = x - s_t;
    }

    std::vector<std::int64_t> steps;
    const auto mesh_steps = std::max<std::int64_t>(1, std::llround(mesh / path.dt));
    for (std::int64_t s = mesh_steps; s < at_step; s += mesh_steps) steps.push_back(s);
    steps.push_back(at_step);
    for (const auto& p : trace_points_batch(path, steps, trace_seed_height, a))
        best = std::min(best, std::abs(p - x));
    return best;
}

inline double hull_distance(const DrivingPath& path, double t, double x, double a, double mesh) {
    if (!(x > 0.0)) throw domain_error("hull_distance: x must be positive");
    if (!(mesh > 0.0)) throw domain_error("hull_distance: mesh must be positive");
    if (t == 0.0) return x;
    const auto m = static_cast<std::int64_t>(std::llround(t / path.dt));
    const auto px = flow_real_point(path, x, a, m);
    if (!px.alive()) throw domain_error("hull_distance: x swallowed before t");
    return hull_distance_at_step(path, m, x, a, mesh);
}

// Minimum of |x - gamma(t_j)| over [0, t] by a coarse trace scan followed by
// fine re-tracing of every window that could contain the true minimum. The
// curve wanders about 4 sqrt(2 a m) between samples spaced m apart; that
// margin decides which coarse windows get refined.
inline double closest_approach(const DrivingPath& path, std::int64_t upto_step, double x, double a,
                               double coarse_mesh, double fine_mesh) {
    if (upto_step <= 0) return x;
    const auto coarse_steps =
        std::max<std::int64_t>(1, std::llround(std::max(coarse_mesh, path.dt) / path.dt));
    const auto fine_steps =
        std::max<std::int64_t>(1, std::llround(std::max(fine_mesh, path.dt) / path.dt));

    std::vector<std::int64_t> steps;
    for (std::int64_t s = coarse_steps; s < upto_step; s += coarse_steps) steps.push_back(s);
    steps.push_back(upto_step);
    const auto pts = trace_points_batch(path, steps, trace_seed_height, a);
    std::vector<double> dist(pts.size());
    double best = x; // gamma(0) = 0
    for (std::size_t j = 0; j < pts.size(); ++j) {
        dist[j] = std::abs(pts[j] - x);
        best = std::min(best, dist[j]);
    }
    if (fine_steps >= coarse_steps) return best;
    const double wander = 4.0 * std::sqrt(2.0 * a * static_cast<double>(coarse_steps) * path.dt);
    std::vector<std::int64_t> refine;
    for (std::size_t j = 0; j < steps.size(); ++j) {
        if (dist[j] > best + wander) continue;
        const std::int64_t lo = std::max<std::int64_t>(1, steps[j] - coarse_steps);
        const std::int64_t hi = std::min(upto_step, steps[j] + coarse_steps);
        for (std::int64_t s = lo; s <= hi; s += fine_steps)
            if (refine.empty() || s > refine.back()) refine.push_back(s);
    }
    for (const auto& p : trace_points_batch(path, refine, trace_seed_height, a))
        best = std::min(best, std::abs(p - x));
    return best;
}

} // namespace slelab
