#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "slelab/driver.hpp"
#include "slelab/errors.hpp"
#include "slelab/hitmap.hpp"
#include "slelab/loewner.hpp"
#include "slelab/params.hpp"
#include "slelab/rng.hpp"
#include "slelab/stats.hpp"

namespace slelab {

// How hitting events whose deciding swallow times run past the horizon are
// closed.
//   conditional: score the unresolved event with the exact conditional
//     hitting formula evaluated on the surviving gaps. Swallow times have the
//     tail P(T_x > t) ~ t^{-(1-2a)/2}, so at any affordable horizon a large
//     share of runs is censored; the conditional closure keeps the estimator
//     unbiased at finite horizon instead of biased by O(censored mass).
//   bits: censored times order above every finite time ("hit"), equal or
//     jointly censored times break to "no hit". Kept for comparison runs.
enum class CensorPolicy { conditional, bits };

inline const char* to_string(CensorPolicy p) {
    return p == CensorPolicy::conditional ? "conditional" : "bits";
}

struct ExperimentConfig {
    SleParams params;
    double dt = 1e-4;
    std::int64_t samples = 20000;
    int level = 8;             // dyadic grid level n
    double delta_margin = 0.125;
    std::vector<std::pair<double, double>> intervals;
    std::uint64_t seed = 1;

    double horizon_factor = 4.0; // horizon = factor * (max tracked point)^2
    double dt_coeff = 0.1;       // level dt = min(dt, dt_coeff * 4^-n)
    CensorPolicy policy = CensorPolicy::conditional;
    int threads = 0;             // 0 = hardware concurrency
    std::int64_t step_cap = default_step_cap;
    int level_cap = default_grid_level_cap;

    void validate() const {
        if (samples < 1) throw validation_error("config: samples must be >= 1");
        if (!(dt > 0.0)) throw validation_error("config: dt must be positive");
        if (!(delta_margin > 0.0 && delta_margin < 0.5))
            throw validation_error("config: delta_margin must lie in (0, 1/2)");
        if (level < 1 || level > level_cap)
            throw resource_error("config: level outside [1, " + std::to_string(level_cap) + "]");
        if (!(horizon_factor > 0.0) || !(dt_coeff > 0.0))
            throw validation_error("config: horizon_factor and dt_coeff must be positive");
    }
};

// temporal resolution tracking the spatial grid: ties scale diffusively
inline double level_dt(const ExperimentConfig& cfg, int n) {
    return std::min(cfg.dt, cfg.dt_coeff * std::pow(4.0, -n));
}

inline std::int64_t horizon_steps_for(const ExperimentConfig& cfg, double max_point, double dt) {
    const double horizon = cfg.horizon_factor * max_point * max_point;
    const double steps = std::ceil(horizon / dt);
    if (steps > static_cast<double>(cfg.step_cap))
        throw resource_error("horizon of " + std::to_string(steps) + " steps exceeds the cap");
    return static_cast<std::int64_t>(steps);
}

// Static block partition over sample indices; per-sample RNG streams derive
// from (seed, index), so results do not depend on the thread count.
template <class Fn>
void parallel_samples(std::int64_t n, int threads, Fn&& fn) {
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = static_cast<int>(std::min<std::int64_t>(workers, n));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const std::int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

// --- interval scoring ----------------------------------------------------

namespace detail {

// closure functor handed to sweep_with_closures: the conditional hitting
// probability of the stopped configuration
struct HitClosure {
    const HitMap* hm;
    double operator()(double gap_lo, double gap_hi) const {
        if (!(gap_hi > 0.0)) return 0.0;
        return hm->eval_real(std::min(1.0, gap_lo / gap_hi));
    }
};

// binary score under the bits policy: strict step order with censored times
// ordered above all finite ones, equal steps break to "no hit"
inline double bits_pair_score(const SweepResult& sw, std::size_t lo, std::size_t hi) {
    const bool lo_done = sw.swallowed(lo);
    const bool hi_done = sw.swallowed(hi);
    if (lo_done && hi_done) return sw.step[hi] > sw.step[lo] ? 1.0 : 0.0;
    if (lo_done) return 1.0;
    return 0.0; // jointly censored tie
}

inline double bits_triple_score(const SweepResult& sw, std::size_t i1, std::size_t i2,
                                std::size_t i3) {
    const bool d2 = sw.swallowed(i2), d3 = sw.swallowed(i3);
    if (d3) return (sw.step[i1] < sw.step[i2] && sw.step[i2] < sw.step[i3]) ? 1.0 : 0.0;
    if (d2) return sw.step[i1] < sw.step[i2] ? 1.0 : 0.0;
    return sw.swallowed(i1) ? 1.0 : 0.0;
}

} // namespace detail

// --- one interval ----------------------------------------------------------

struct OneIntervalResult {
    Estimate estimate;
    double exact = 0.0;
    double censored_fraction = 0.0;
    bool reliability_warning = false;
};

// MC estimate of P(T_x > T_y) paired with the exact value F(y/x).
inline OneIntervalResult one_interval_experiment(const ExperimentConfig& cfg, double y, double x) {
    cfg.validate();
    if (!(0.0 < y && y <= x)) throw domain_error("one_interval: need 0 < y <= x");
    const HitMap hm(sle_params_hitting(cfg.params.kappa));
    OneIntervalResult out;
    out.exact = hit_prob_interval(y, x, hm);
    if (y == x) {
        out.estimate = wilson_estimate(0.0, 0.0, cfg.samples);
        return out;
    }
    const double a = cfg.params.a;
    const std::int64_t hsteps = horizon_steps_for(cfg, x, cfg.dt);
    const std::vector<PairRequest> pairs{{0, 1}};
    const detail::HitClosure closure{&hm};
    std::vector<double> scores(static_cast<std::size_t>(cfg.samples));
    std::vector<std::uint8_t> censored(static_cast<std::size_t>(cfg.samples));
    parallel_samples(cfg.samples, cfg.threads, [&](std::int64_t i) {
        BrownianStream drv(cfg.dt, derive_stream(cfg.seed, static_cast<std::uint64_t>(i)));
        if (cfg.policy == CensorPolicy::bits) {
            auto sw = sweep_points({y, x}, a, cfg.dt, hsteps, drv);
            scores[static_cast<std::size_t>(i)] = detail::bits_pair_score(sw, 0, 1);
            censored[static_cast<std::size_t>(i)] = !sw.swallowed(1);
        } else {
            auto ps = sweep_with_closures({y, x}, pairs, a, cfg.dt, hsteps, drv, closure);
            scores[static_cast<std::size_t>(i)] = ps.score[0];
            censored[static_cast<std::size_t>(i)] = ps.closed_step[0] == alive_step;
        }
    });
    out.estimate = score_estimate(scores);
    double frac = 0.0;
    for (auto c : censored) frac += c;
    out.censored_fraction = frac / static_cast<double>(cfg.samples);
    out.reliability_warning = cfg.policy == CensorPolicy::bits && out.censored_fraction > 0.01;
    return out;
}

// --- adjacent two-interval ---------------------------------------------------

struct AdjacentIntervalResult {
    Estimate estimate;
    double exact = 0.0;
    double censored_fraction = 0.0; // samples that needed any conditional closure
};

// MC estimate of P(T_{x1} < T_{x2} < T_{x3}) against the exact identity.
// The ordered-triple event decomposes into three single-interval hits
// (hitting either adjacent interval is hitting the union), and each term is
// scored with its own closure, so the combination is unbiased term by term.
inline AdjacentIntervalResult adjacent_interval_experiment(const ExperimentConfig& cfg, double x1,
                                                           double x2, double x3) {
    cfg.validate();
    if (!(0.0 < x1 && x1 < x2 && x2 < x3))
        throw domain_error("adjacent_interval: need 0 < x1 < x2 < x3");
    const HitMap hm(sle_params_hitting(cfg.params.kappa));
    AdjacentIntervalResult out;
    out.exact = adjacent_two_interval(x1, x2, x3, hm);
    const double a = cfg.params.a;
    const std::int64_t hsteps = horizon_steps_for(cfg, x3, cfg.dt);
    const std::vector<PairRequest> pairs{{0, 1}, {0, 2}, {1, 2}};
    const detail::HitClosure closure{&hm};
    std::vector<double> scores(static_cast<std::size_t>(cfg.samples));
    std::vector<std::uint8_t> closed(static_cast<std::size_t>(cfg.samples));
    parallel_samples(cfg.samples, cfg.threads, [&](std::int64_t i) {
        BrownianStream drv(cfg.dt, derive_stream(cfg.seed, static_cast<std::uint64_t>(i)));
        if (cfg.policy == CensorPolicy::bits) {
            auto sw = sweep_points({x1, x2, x3}, a, cfg.dt, hsteps, drv);
            scores[static_cast<std::size_t>(i)] = detail::bits_triple_score(sw, 0, 1, 2);
            closed[static_cast<std::size_t>(i)] = !sw.swallowed(2);
        } else {
            auto ps = sweep_with_closures({x1, x2, x3}, pairs, a, cfg.dt, hsteps, drv, closure);
            scores[static_cast<std::size_t>(i)] = ps.score[0] + ps.score[2] - ps.score[1];
            closed[static_cast<std::size_t>(i)] = ps.closed_step[0] == alive_step;
        }
    });
    out.estimate = score_estimate(scores);
    double frac = 0.0;
    for (auto c : closed) frac += c;
    out.censored_fraction = frac / static_cast<double>(cfg.samples);
    return out;
}

// --- disjoint two-interval ---------------------------------------------------

struct TwoIntervalResult {
    Estimate estimate;
    double bound_shape = 0.0;      // eps^{2(4a-1)} (x-y)^{1-4a}, constant-free
    double censored_fraction = 0.0; // fraction closed with the product approximation
    bool reliability_warning = false;
};

// MC estimate of P(T_y < T_{y+eps}, T_x < T_{x+eps}). Samples with both
// intervals undecided at the horizon are closed with the product of the two
// conditional one-interval probabilities; the product ignores the residual
// correlation, which is the one approximation in this estimator (there is no
// closed form for the joint). Both factors scale like eps^{4a-1}, so the
// decay exponent in eps is unaffected.
inline TwoIntervalResult two_interval_experiment(const ExperimentConfig& cfg, double y, double x,
                                                 double eps) {
    cfg.validate();
    const double delta = cfg.delta_margin;
    if (!(delta < y && y < x && x < 1.0 - delta))
        throw domain_error("two_interval: need delta < y < x < 1 - delta");
    if (!(eps > 0.0 && eps <= (x - y) / 2.0))
        throw domain_error("two_interval: need 0 < eps <= (x-y)/2");
    const HitMap hm(sle_params_hitting(cfg.params.kappa));
    const double a = cfg.params.a;
    TwoIntervalResult out;
    out.bound_shape = std::pow(eps, 2.0 * (4.0 * a - 1.0)) * std::pow(x - y, 1.0 - 4.0 * a);
    const std::int64_t hsteps = horizon_steps_for(cfg, x + eps, cfg.dt);
    const std::vector<PairRequest> pairs{{0, 1}, {2, 3}};
    const detail::HitClosure closure{&hm};
    std::vector<double> scores(static_cast<std::size_t>(cfg.samples));
    std::vector<std::uint8_t> closed(static_cast<std::size_t>(cfg.samples));
    parallel_samples(cfg.samples, cfg.threads, [&](std::int64_t i) {
        BrownianStream drv(cfg.dt, derive_stream(cfg.seed, static_cast<std::uint64_t>(i)));
        if (cfg.policy == CensorPolicy::bits) {
            auto sw = sweep_points({y, y + eps, x, x + eps}, a, cfg.dt, hsteps, drv);
            scores[static_cast<std::size_t>(i)] =
                detail::bits_pair_score(sw, 0, 1) * detail::bits_pair_score(sw, 2, 3);
            closed[static_cast<std::size_t>(i)] = !sw.swallowed(1) && !sw.swallowed(3);
        } else {
            auto ps =
                sweep_with_closures({y, y + eps, x, x + eps}, pairs, a, cfg.dt, hsteps, drv,
                                    closure);
            scores[static_cast<std::size_t>(i)] = ps.score[0] * ps.score[1];
            closed[static_cast<std::size_t>(i)] =
                ps.closed_step[0] == alive_step && ps.closed_step[1] == alive_step;
        }
    });
    out.estimate = score_estimate(scores);
    double frac = 0.0;
    for (auto c : closed) frac += c;
    out.censored_fraction = frac / static_cast<double>(cfg.samples);
    out.reliability_warning = out.censored_fraction > 0.01;
    return out;
}

// --- hit matrices ------------------------------------------------------------

// Per-level interval-hit indicators. Bits follow the strict-increase
// definition with censored times ordered above all finite ones: the k = 1
// cell compares against T(0) = 0, jointly censored pairs break to "no hit".
// These conventions make the parent-of bit exactly the OR of its children.
struct HitMatrix {
    int level = 0;
    std::vector<std::uint8_t> bits;
    std::vector<std::uint8_t> censored; // upper endpoint ran past the horizon

    std::size_t size() const { return bits.size(); }
};

inline HitMatrix hit_matrix_from_sweep(const SweepResult& sw, int level, int sweep_level) {
    if (sweep_level < level) throw domain_error("hit_matrix_from_sweep: sweep level too coarse");
    const std::size_t count = std::size_t{1} << level;
    const std::size_t stride = std::size_t{1} << (sweep_level - level);
    HitMatrix m;
    m.level = level;
    m.bits.resize(count);
    m.censored.resize(count);
    for (std::size_t k = 1; k <= count; ++k) {
        const std::size_t hi = k * stride - 1;
        const bool hi_done = sw.swallowed(hi);
        bool bit;
        if (k == 1) {
            bit = true; // T(x) > T(0) = 0 whether resolved or censored
        } else {
            const std::size_t lo = (k - 1) * stride - 1;
            const bool lo_done = sw.swallowed(lo);
            if (lo_done && hi_done)
                bit = sw.step[hi] > sw.step[lo];
            else if (lo_done)
                bit = true;
            else
                bit = false; // jointly censored: tie
        }
        m.bits[k - 1] = bit;
        m.censored[k - 1] = !hi_done;
    }
    return m;
}

inline HitMatrix hit_matrix(const DrivingPath& path, int n, const SleParams& params,
                            int level_cap = default_grid_level_cap) {
    if (n < 1 || n > level_cap)
        throw resource_error("hit_matrix: level outside [1, " + std::to_string(level_cap) + "]");
    const std::size_t count = std::size_t{1} << n;
    std::vector<double> pts(count);
    const double h = std::ldexp(1.0, -n);
    for (std::size_t k = 0; k < count; ++k) pts[k] = static_cast<double>(k + 1) * h;
    PathStream stream(path);
    auto sw = sweep_points(pts, params.a, path.dt, static_cast<std::int64_t>(path.steps()), stream);
    return hit_matrix_from_sweep(sw, n, n);
}

// parent bits at level n-1 derived by OR from level n (refinement coherence)
inline HitMatrix coarsen(const HitMatrix& fine) {
    if (fine.level < 2) throw domain_error("coarsen: need level >= 2");
    HitMatrix m;
    m.level = fine.level - 1;
    const std::size_t count = fine.size() / 2;
    m.bits.resize(count);
    m.censored.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        m.bits[k] = fine.bits[2 * k] || fine.bits[2 * k + 1];
        m.censored[k] = fine.censored[2 * k + 1];
    }
    return m;
}

// --- dimension fit -----------------------------------------------------------

struct LevelStat {
    int level = 0;
    double mean_count = 0.0; // mean of N_n over samples
    double se = 0.0;
    std::int64_t samples = 0;
};

struct DimensionFit {
    std::vector<int> levels;
    std::vector<double> mean_counts;
    std::vector<double> ses;
    double slope = 0.0;
    double slope_stderr = 0.0;
    std::vector<double> residuals;
    std::vector<std::string> warnings;
};

// Least-squares slope of log2 E[N_n] against n.
inline DimensionFit dimension_fit(const std::vector<LevelStat>& stats) {
    DimensionFit fit;
    std::vector<double> xs, ys, ses;
    for (const auto& st : stats) {
        if (st.samples < 50)
            throw domain_error("dimension_fit: need >= 50 samples per level, level " +
                               std::to_string(st.level) + " has " + std::to_string(st.samples));
        if (!(st.mean_count > 0.0)) {
            fit.warnings.push_back("level " + std::to_string(st.level) +
                                   " dropped: zero mean count");
            continue;
        }
        xs.push_back(st.level);
        ys.push_back(std::log2(st.mean_count));
        ses.push_back(st.se / (st.mean_count * std::numbers::ln2));
        fit.levels.push_back(st.level);
        fit.mean_counts.push_back(st.mean_count);
        fit.ses.push_back(st.se);
    }
    if (xs.size() < 2) throw domain_error("dimension_fit: need at least two usable levels");
    const LineFit lf = fit_line(xs, ys, ses);
    fit.slope = lf.slope;
    fit.slope_stderr = lf.slope_stderr;
    fit.residuals = lf.residuals;
    return fit;
}

struct DimensionResult {
    std::vector<LevelStat> per_level;
    DimensionFit fit;
};

// One finest-level sweep per sample; every coarser level is read off the same
// flow, which keeps the levels refinement-coherent by construction. Per-level
// counts are the summed closure scores under the default policy.
inline DimensionResult dimension_experiment(const ExperimentConfig& cfg, int level_lo,
                                            int level_hi) {
    cfg.validate();
    if (!(1 <= level_lo && level_lo < level_hi) || level_hi > cfg.level_cap)
        throw resource_error("dimension_experiment: bad level range");
    const HitMap hm(sle_params_hitting(cfg.params.kappa));
    const double a = cfg.params.a;
    const double dt = level_dt(cfg, level_hi);
    const std::int64_t hsteps = horizon_steps_for(cfg, 1.0, dt);
    const std::size_t count = std::size_t{1} << level_hi;
    std::vector<double> pts(count);
    const double h = std::ldexp(1.0, -level_hi);
    for (std::size_t k = 0; k < count; ++k) pts[k] = static_cast<double>(k + 1) * h;

    // every level's cells as pair requests over the shared finest grid
    const int n_levels = level_hi - level_lo + 1;
    std::vector<PairRequest> pairs;
    std::vector<int> pair_level;
    for (int n = level_lo; n <= level_hi; ++n) {
        const std::size_t cells = std::size_t{1} << n;
        const std::size_t stride = std::size_t{1} << (level_hi - n);
        for (std::size_t k = 2; k <= cells; ++k) {
            pairs.push_back({(k - 1) * stride - 1, k * stride - 1});
            pair_level.push_back(n);
        }
    }
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (pairs[l].lo != pairs[r].lo) return pairs[l].lo < pairs[r].lo;
        if (pairs[l].hi != pairs[r].hi) return pairs[l].hi < pairs[r].hi;
        return pair_level[l] < pair_level[r];
    });
    std::vector<PairRequest> sorted_pairs(pairs.size());
    std::vector<int> sorted_level(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted_pairs[i] = pairs[order[i]];
        sorted_level[i] = pair_level[order[i]];
    }
    const detail::HitClosure closure{&hm};

    std::vector<double> counts(static_cast<std::size_t>(cfg.samples) * n_levels);
    parallel_samples(cfg.samples, cfg.threads, [&](std::int64_t i) {
        BrownianStream drv(dt, derive_stream(cfg.seed, static_cast<std::uint64_t>(i)));
        double* slot = counts.data() + static_cast<std::size_t>(i) * n_levels;
        for (int n = 0; n < n_levels; ++n) slot[n] = 1.0; // k = 1: T(x) > T(0) = 0 always
        if (cfg.policy == CensorPolicy::bits) {
            auto sw = sweep_points(pts, a, dt, hsteps, drv);
            for (std::size_t p = 0; p < sorted_pairs.size(); ++p)
                slot[sorted_level[p] - level_lo] +=
                    detail::bits_pair_score(sw, sorted_pairs[p].lo, sorted_pairs[p].hi);
        } else {
            auto ps = sweep_with_closures(pts, sorted_pairs, a, dt, hsteps, drv, closure);
            for (std::size_t p = 0; p < sorted_pairs.size(); ++p)
                slot[sorted_level[p] - level_lo] += ps.score[p];
        }
    });

    DimensionResult out;
    for (int n = level_lo; n <= level_hi; ++n) {
        LevelStat st;
        st.level = n;
        st.samples = cfg.samples;
        double mean = 0.0;
        for (std::int64_t i = 0; i < cfg.samples; ++i)
            mean += counts[static_cast<std::size_t>(i) * n_levels + (n - level_lo)];
        mean /= static_cast<double>(cfg.samples);
        double var = 0.0;
        for (std::int64_t i = 0; i < cfg.samples; ++i) {
            const double d =
                counts[static_cast<std::size_t>(i) * n_levels + (n - level_lo)] - mean;
            var += d * d;
        }
        var /= std::max<std::int64_t>(1, cfg.samples - 1);
        st.mean_count = mean;
        st.se = std::sqrt(var / static_cast<double>(cfg.samples));
        out.per_level.push_back(st);
    }
    out.fit = dimension_fit(out.per_level);
    return out;
}

// --- second moment table -----------------------------------------------------

struct SecondMomentCell {
    int j = 0, k = 0;
    double p_hat = 0.0;
    double se = 0.0;
    double normalized = 0.0; // p_hat * 2^{(1-s)n} * (k-j)^{1-s}
    std::int64_t joint_hits = 0;
    bool low_confidence = false;
};

struct SecondMomentTable {
    int level = 0;
    double delta = 0.0;
    double s_exponent = 0.0;
    std::vector<SecondMomentCell> cells;
    double max_normalized = 0.0; // over confident cells
    std::int64_t samples = 0;
};

namespace detail {

inline void finish_second_moment(SecondMomentTable& table, const std::vector<double>& sums,
                                 const std::vector<double>& sq_sums,
                                 const std::vector<std::int64_t>& hits,
                                 const std::vector<std::pair<int, int>>& pairs,
                                 std::int64_t samples, double s) {
    const double nn = static_cast<double>(samples);
    table.samples = samples;
    table.max_normalized = 0.0;
    for (std::size_t c = 0; c < pairs.size(); ++c) {
        SecondMomentCell cell;
        cell.j = pairs[c].first;
        cell.k = pairs[c].second;
        cell.p_hat = sums[c] / nn;
        const double var = std::max(0.0, sq_sums[c] / nn - cell.p_hat * cell.p_hat);
        cell.se = std::sqrt(var / nn);
        cell.normalized = cell.p_hat * std::pow(2.0, (1.0 - s) * table.level) *
                          std::pow(static_cast<double>(cell.k - cell.j), 1.0 - s);
        cell.joint_hits = hits[c];
        cell.low_confidence = !(cell.p_hat > 0.0) || cell.se > 0.25 * cell.p_hat;
        if (!cell.low_confidence) table.max_normalized = std::max(table.max_normalized, cell.normalized);
        table.cells.push_back(cell);
    }
}

} // namespace detail

// Table of empirical P(D_j and D_k) over the delta-interior cells from bit
// matrices (the plain estimator defined directly on bits).
inline SecondMomentTable second_moment_table(const std::vector<HitMatrix>& samples, int n,
                                             double delta, const SleParams& params) {
    if (samples.empty()) throw domain_error("second_moment_table: no samples");
    if (!(delta > 0.0 && delta < 0.5))
        throw domain_error("second_moment_table: delta must lie in (0, 1/2)");
    const std::size_t cells_n = std::size_t{1} << n;
    for (const auto& m : samples)
        if (m.level != n || m.size() != cells_n)
            throw domain_error("second_moment_table: level mismatch");
    const int k_lo = static_cast<int>(std::ceil(delta * static_cast<double>(cells_n)));
    const int k_hi = static_cast<int>(std::floor((1.0 - delta) * static_cast<double>(cells_n)));
    std::vector<std::pair<int, int>> pairs;
    for (int j = std::max(1, k_lo); j <= k_hi; ++j)
        for (int k = j + 1; k <= k_hi; ++k) pairs.emplace_back(j, k);
    std::vector<double> sums(pairs.size(), 0.0), sq_sums(pairs.size(), 0.0);
    std::vector<std::int64_t> hits(pairs.size(), 0);
    for (const auto& m : samples) {
        for (std::size_t c = 0; c < pairs.size(); ++c) {
            const double v = (m.bits[pairs[c].first - 1] && m.bits[pairs[c].second - 1]) ? 1.0 : 0.0;
            sums[c] += v;
            sq_sums[c] += v * v;
            hits[c] += v > 0.0;
        }
    }
    SecondMomentTable table;
    table.level = n;
    table.delta = delta;
    table.s_exponent = params.s;
    detail::finish_second_moment(table, sums, sq_sums, hits, pairs,
                                 static_cast<std::int64_t>(samples.size()), params.s);
    return table;
}

// Sweep-based campaign version. Cell events D_j carry per-sample closure
// scores; adjacent joint cells (k = j+1) use the exact triple decomposition,
// all other joint cells the product of the two single scores.
inline SecondMomentTable second_moment_experiment(const ExperimentConfig& cfg, int n,
                                                  double delta) {
    cfg.validate();
    const HitMap hm(sle_params_hitting(cfg.params.kappa));
    const double a = cfg.params.a;
    const double dt = level_dt(cfg, n);
    const std::int64_t hsteps = horizon_steps_for(cfg, 1.0, dt);
    const std::size_t count = std::size_t{1} << n;
    std::vector<double> pts(count);
    const double h = std::ldexp(1.0, -n);
    for (std::size_t k = 0; k < count; ++k) pts[k] = static_cast<double>(k + 1) * h;
    const int k_lo = std::max(2, static_cast<int>(std::ceil(delta * static_cast<double>(count))));
    const int k_hi = static_cast<int>(std::floor((1.0 - delta) * static_cast<double>(count)));
    std::vector<std::pair<int, int>> pairs;
    for (int j = k_lo; j <= k_hi; ++j)
        for (int k = j + 1; k <= k_hi; ++k) pairs.emplace_back(j, k);

    // closure requests: the single-cell pair for every D_k plus the long
    // (j-1, j+1) pair feeding the adjacent-cell triple decomposition
    std::vector<PairRequest> requests;
    std::vector<std::size_t> single_at(count + 1, SIZE_MAX), long_at(count + 1, SIZE_MAX);
    for (int k = std::max(2, k_lo - 1); k <= std::min<int>(count, k_hi + 1); ++k) {
        single_at[static_cast<std::size_t>(k)] = requests.size();
        requests.push_back({static_cast<std::size_t>(k) - 2, static_cast<std::size_t>(k) - 1});
        if (k >= k_lo && k < k_hi) {
            long_at[static_cast<std::size_t>(k)] = requests.size();
            requests.push_back({static_cast<std::size_t>(k) - 2, static_cast<std::size_t>(k)});
        }
    }
    const detail::HitClosure closure{&hm};

    int workers = cfg.threads > 0 ? cfg.threads
                                  : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<int>(std::min<std::int64_t>(workers, cfg.samples));
    std::vector<std::vector<double>> sums(workers), sq_sums(workers);
    std::vector<std::vector<std::int64_t>> hits(workers);
    for (int w = 0; w < workers; ++w) {
        sums[w].assign(pairs.size(), 0.0);
        sq_sums[w].assign(pairs.size(), 0.0);
        hits[w].assign(pairs.size(), 0);
    }
    const std::int64_t chunk = (cfg.samples + workers - 1) / workers;
    parallel_samples(cfg.samples, workers, [&](std::int64_t i) {
        const int w = static_cast<int>(i / chunk);
        BrownianStream drv(dt, derive_stream(cfg.seed, static_cast<std::uint64_t>(i)));
        std::vector<double> single(count + 1, 0.0), longer(count + 1, 0.0);
        if (cfg.policy == CensorPolicy::bits) {
            auto sw = sweep_points(pts, a, dt, hsteps, drv);
            for (std::size_t k = 2; k <= count; ++k) {
                single[k] = detail::bits_pair_score(sw, k - 2, k - 1);
                if (k < count) longer[k] = detail::bits_pair_score(sw, k - 2, k);
            }
        } else {
            auto ps = sweep_with_closures(pts, requests, a, dt, hsteps, drv, closure);
            for (std::size_t k = 2; k <= count; ++k) {
                if (single_at[k] != SIZE_MAX) single[k] = ps.score[single_at[k]];
                if (long_at[k] != SIZE_MAX) longer[k] = ps.score[long_at[k]];
            }
        }
        for (std::size_t c = 0; c < pairs.size(); ++c) {
            const auto j = static_cast<std::size_t>(pairs[c].first);
            const auto k = static_cast<std::size_t>(pairs[c].second);
            const double v = k == j + 1 ? single[j] + single[k] - longer[j]
                                        : single[j] * single[k];
            sums[w][c] += v;
            sq_sums[w][c] += v * v;
            hits[w][c] += v > 0.1;
        }
    });
    std::vector<double> sum(pairs.size(), 0.0), sq(pairs.size(), 0.0);
    std::vector<std::int64_t> hit(pairs.size(), 0);
    for (int w = 0; w < workers; ++w)
        for (std::size_t c = 0; c < pairs.size(); ++c) {
            sum[c] += sums[w][c];
            sq[c] += sq_sums[w][c];
            hit[c] += hits[w][c];
        }
    SecondMomentTable table;
    table.level = n;
    table.delta = delta;
    table.s_exponent = cfg.params.s;
    detail::finish_second_moment(table, sum, sq, hit, pairs, cfg.samples, cfg.params.s);
    return table;
}

// --- scaling test --------------------------------------------------------------

struct ScalingResult {
    KsReport ks;
    double x = 0.0;
    std::int64_t censored_pairs = 0;
};

// Two-sample KS test of T_x against x^2 T_1. Each ensemble runs at a dt and
// horizon scaled by its own x^2, so the discretization couples exactly across
// the comparison; censored pairs are excluded pairwise (the thresholds match
// in scaled units, so the exclusion is distributionally symmetric).
inline ScalingResult scaling_test(const ExperimentConfig& cfg, double x,
                                  std::uint64_t seed_b_override = 0) {
    cfg.validate();
    if (!(x > 0.0)) throw domain_error("scaling_test: x must be positive");
    const double a = cfg.params.a;
    const std::uint64_t seed_a = cfg.seed;
    const std::uint64_t seed_b = seed_b_override ? seed_b_override : cfg.seed ^ 0x5bf0'3635'dead'beefULL;

    const double dt_x = cfg.dt * x * x;
    const std::int64_t hx = horizon_steps_for(cfg, x, dt_x);
    const std::int64_t h1 = horizon_steps_for(cfg, 1.0, cfg.dt);

    std::vector<double> tx(static_cast<std::size_t>(cfg.samples)),
        t1(static_cast<std::size_t>(cfg.samples));
    std::vector<std::uint8_t> cx(static_cast<std::size_t>(cfg.samples)),
        c1(static_cast<std::size_t>(cfg.samples));
    parallel_samples(cfg.samples, cfg.threads, [&](std::int64_t i) {
        {
            BrownianStream drv(dt_x, derive_stream(seed_a, static_cast<std::uint64_t>(i)));
            auto sw = sweep_points({x}, a, dt_x, hx, drv);
            const auto st = sw.swallow_time(0);
            tx[static_cast<std::size_t>(i)] = st.time;
            cx[static_cast<std::size_t>(i)] = st.survived;
        }
        {
            BrownianStream drv(cfg.dt, derive_stream(seed_b, static_cast<std::uint64_t>(i)));
            auto sw = sweep_points({1.0}, a, cfg.dt, h1, drv);
            const auto st = sw.swallow_time(0);
            t1[static_cast<std::size_t>(i)] = x * x * st.time;
            c1[static_cast<std::size_t>(i)] = st.survived;
        }
    });
    std::vector<double> kept_x, kept_1;
    std::int64_t dropped = 0;
    for (std::int64_t i = 0; i < cfg.samples; ++i) {
        if (cx[static_cast<std::size_t>(i)] || c1[static_cast<std::size_t>(i)]) {
            ++dropped;
            continue;
        }
        kept_x.push_back(tx[static_cast<std::size_t>(i)]);
        kept_1.push_back(t1[static_cast<std::size_t>(i)]);
    }
    ScalingResult out;
    out.x = x;
    out.censored_pairs = dropped;
    out.ks = ks_two_sample(std::move(kept_x), std::move(kept_1));
    out.ks.excluded = dropped;
    return out;
}

// --- near-miss ----------------------------------------------------------------

struct NearMissRow {
    double radius = 0.0;
    Estimate estimate;
    double asymptote = 0.0; // linear-in-r shape, constant-free
};

struct NearMissResult {
    std::vector<NearMissRow> rows;
    double censored_fraction = 0.0;
};

// MC estimate of P(dist(x, K_{T_y}) <= r) for each radius, from the hull
// distance at the swallowing time of y. All radii are evaluated on the same
// per-sample distance, so the estimates are nested by construction. When T_y
// is censored the event is decided only if the approach already happened; the
// missing mass vanishes relative to the estimate uniformly in r.
inline NearMissResult near_miss_experiment(const ExperimentConfig& cfg, double x, double y,
                                           const std::vector<double>& radii) {
    cfg.validate();
    if (!(0.0 < y && y < x)) throw domain_error("near_miss: need 0 < y < x");
    double r_min = x;
    for (double r : radii) {
        if (!(r > 0.0 && r <= (x - y) / 4.0))
            throw regime_error("near_miss: radii must lie in (0, (x-y)/4]");
        r_min = std::min(r_min, r);
    }
    const SleParams params = sle_params_hitting(cfg.params.kappa);
    const double a = params.a;
    const std::int64_t hsteps = horizon_steps_for(cfg, x, cfg.dt);
    const double horizon = static_cast<double>(hsteps) * cfg.dt;
    // trace resolution fine enough that the curve cannot skip the smallest disk
    const double fine_mesh = std::max(cfg.dt, r_min * r_min / (32.0 * a));
    const double coarse_mesh = std::max(fine_mesh, 1e-3);

    std::vector<double> dists(static_cast<std::size_t>(cfg.samples));
    std::vector<std::uint8_t> censored(static_cast<std::size_t>(cfg.samples));
    parallel_samples(cfg.samples, cfg.threads, [&](std::int64_t i) {
        const auto path =
            sample_driver(horizon, cfg.dt, derive_stream(cfg.seed, static_cast<std::uint64_t>(i)),
                          cfg.step_cap);
        PathStream stream(path);
        auto sw = sweep_points({y}, a, cfg.dt, hsteps, stream);
        const std::int64_t stop = sw.swallowed(0) ? sw.step[0] : hsteps;
        double d = closest_approach(path, stop, x, a, coarse_mesh, fine_mesh);
        censored[static_cast<std::size_t>(i)] = !sw.swallowed(0);
        dists[static_cast<std::size_t>(i)] = d;
    });

    NearMissResult out;
    double frac = 0.0;
    for (auto c : censored) frac += c;
    out.censored_fraction = frac / static_cast<double>(cfg.samples);
    for (double r : radii) {
        NearMissRow row;
        row.radius = r;
        std::int64_t hits = 0;
        for (double d : dists) hits += d <= r;
        row.estimate = bernoulli_estimate(hits, cfg.samples);
        row.asymptote = near_point_asymptote(x, y, r, std::numbers::pi / 2.0, params);
        out.rows.push_back(row);
    }
    return out;
}

// --- Koebe sandwich probe -------------------------------------------------------

struct KoebeSample {
    double ratio = 0.0; // d_t(x) g_t'(x) / (g_t(x) - eta_t)
    double t = 0.0;
    double x = 0.0;
};

// Samples the distance-distortion ratio of the Koebe sandwich on random
// (driver, t, x) configurations. eta_t is approximated by the image of the
// leftmost unswallowed grid point above s_t after one extra bisection.
inline std::vector<KoebeSample> koebe_probe(const ExperimentConfig& cfg, std::int64_t n_configs) {
    cfg.validate();
    const double a = cfg.params.a;
    const double dt = cfg.dt;
    std::vector<KoebeSample> out(static_cast<std::size_t>(n_configs));
    parallel_samples(n_configs, cfg.threads, [&](std::int64_t i) {
        const std::uint64_t key = derive_stream(cfg.seed, static_cast<std::uint64_t>(i));
        Xoshiro256pp pick(key ^ 0xa5a5a5a5a5a5a5a5ULL); // samples (t, x) for this config
        const auto path = sample_driver(1.0, dt, key, cfg.step_cap);
        KoebeSample ks;
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double x = 0.3 + 0.9 * pick.next_unit();
            const double t = 0.05 + 0.75 * pick.next_unit();
            const auto m = static_cast<std::int64_t>(std::llround(t / dt));
            const auto px = flow_real_point(path, x, a, m);
            if (!px.alive()) continue;

            // s_t and the leftmost unswallowed grid point above it
            const std::size_t cells = 256;
            std::vector<double> grid(cells);
            for (std::size_t g = 0; g < cells; ++g)
                grid[g] = x * static_cast<double>(g + 1) / static_cast<double>(cells + 1);
            PathStream stream(path);
            auto sw = sweep_points(grid, a, dt, m, stream);
            std::size_t first_alive = 0;
            while (first_alive < cells && sw.swallowed(first_alive)) ++first_alive;
            if (first_alive == cells) continue;
            const double s_t = first_alive > 0 ? grid[first_alive - 1] : 0.0;
            double probe = grid[first_alive];
            const double mid = 0.5 * (s_t + probe);
            if (mid > 0.0) {
                const auto pm = flow_real_point(path, mid, a, m);
                if (pm.alive()) probe = mid;
            }
            const auto peta = flow_real_point(path, probe, a, m);
            if (!peta.alive() || !(px.gap > peta.gap)) continue;

            const double coarse = std::max(4.0 * dt, t / 256.0);
            double d = closest_approach(path, m, x, a, coarse, coarse / 64.0);
            if (s_t > 0.0) d = std::min(d, x - s_t);
            if (d < 0.04) continue; // below the trace resolution floor
            ks.ratio = d * px.deriv / (px.gap - peta.gap);
            ks.t = t;
            ks.x = x;
            break;
        }
        out[static_cast<std::size_t>(i)] = ks;
    });
    std::vector<KoebeSample> kept;
    for (const auto& ks : out)
        if (ks.ratio > 0.0) kept.push_back(ks);
    return kept;
}

} // namespace slelab
