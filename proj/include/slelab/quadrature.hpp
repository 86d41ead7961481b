#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "slelab/errors.hpp"

namespace slelab {

struct QuadratureOptions {
    double abs_tol = 1e-12;
    int max_panels = 4000;
};

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1]
inline constexpr double gk_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0,
};
inline constexpr double gk_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
};
inline constexpr double gk_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
};

template <class F>
void gk15(const F& f, double lo, double hi, std::complex<double>& kron, double& err) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    std::complex<double> resk = gk_wk[7] * f(c);
    std::complex<double> resg = gk_wg[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        const double dx = h * gk_nodes[i];
        const std::complex<double> pair = f(c - dx) + f(c + dx);
        resk += gk_wk[i] * pair;
        if (i % 2 == 1) resg += gk_wg[i / 2] * pair;
    }
    kron = resk * h;
    err = std::abs(resk - resg) * h;
}

} // namespace detail

// Adaptive Gauss-Kronrod integration of a complex integrand over [lo, hi].
// Bisects the worst panel until the summed error estimate clears abs_tol.
template <class F>
std::complex<double> integrate(const F& f, double lo, double hi, const QuadratureOptions& opt = {}) {
    if (lo == hi) return {0.0, 0.0};
    struct Panel {
        double lo, hi, err;
        std::complex<double> val;
    };
    std::vector<Panel> panels;
    panels.reserve(64);
    std::complex<double> v;
    double e;
    detail::gk15(f, lo, hi, v, e);
    panels.push_back({lo, hi, e, v});
    double total_err = e;
    while (total_err > opt.abs_tol) {
        if (static_cast<int>(panels.size()) >= opt.max_panels)
            throw numeric_error("quadrature: panel budget exhausted, achieved tolerance " +
                                std::to_string(total_err));
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].err > panels[worst].err) worst = i;
        Panel p = panels[worst];
        const double mid = 0.5 * (p.lo + p.hi);
        if (mid == p.lo || mid == p.hi)
            throw numeric_error("quadrature: interval collapsed below machine resolution");
        Panel left{p.lo, mid, 0.0, {}}, right{mid, p.hi, 0.0, {}};
        detail::gk15(f, left.lo, left.hi, left.val, left.err);
        detail::gk15(f, right.lo, right.hi, right.val, right.err);
        total_err += left.err + right.err - p.err;
        panels[worst] = left;
        panels.push_back(right);
    }
    std::complex<double> sum{0.0, 0.0};
    for (const auto& p : panels) sum += p.val;
    return sum;
}

} // namespace slelab
