#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>

#include "tomo/errors.hpp"

namespace tomo {

// Derivative-free local minimization: Powell's direction-set method with a
// bracketing + Brent line search. Written for smooth objectives of modest
// dimension (the 16-parameter likelihood fit); no gradients required.

struct OptimizerOptions {
    double rel_tol = 1e-10;    // stop when the per-sweep decrease of f falls below
                               // rel_tol * (|f_before| + |f_after|) ...
    double param_tol = 1e-8;   // ... and the per-sweep max parameter displacement
                               // falls below param_tol
    std::size_t max_evals = 100000;
    double initial_step = 0.1;   // first bracketing step of each line search
    double line_tol = 1e-10;     // relative x tolerance of the Brent search
    int reset_every = 0;         // re-orthogonalize directions every k sweeps
                                 // (0 -> dimension of the problem)
    // Called once per completed sweep with (sweep index, best f, best x).
    std::function<void(int, double, const Eigen::VectorXd&)> callback;
};

struct OptimizerResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_evals = 0;
    int n_sweeps = 0;
    bool converged = false;
};

namespace detail {

inline double sign_of(double magnitude, double sign_source) {
    return sign_source >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude);
}

// Minimize g on a bracketed interval by Brent's method: parabolic steps when
// they behave, golden-section steps otherwise. (a, b, c) must satisfy
// a < b < c (or reversed) with g(b) below both ends.
template <class G>
double brent_minimize(G&& g, double ax, double bx, double cx, double fbx, double tol,
                      std::size_t& evals, std::size_t max_evals, double& fmin) {
    constexpr double golden = 0.3819660112501051;
    constexpr double tiny = 1e-11;
    double a = std::min(ax, cx), b = std::max(ax, cx);
    double x = bx, w = bx, v = bx;
    double fx = fbx, fw = fbx, fv = fbx;
    double d = 0.0, e = 0.0;

    for (int iter = 0; iter < 200 && evals < max_evals; ++iter) {
        const double m = 0.5 * (a + b);
        const double tol1 = tol * std::abs(x) + tiny;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;

        bool take_golden = true;
        if (std::abs(e) > tol1) {
            // Parabola through x, w, v.
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double e_prev = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = sign_of(tol1, m - x);
                take_golden = false;
            }
        }
        if (take_golden) {
            e = (x >= m) ? a - x : b - x;
            d = golden * e;
        }

        const double u = (std::abs(d) >= tol1) ? x + d : x + sign_of(tol1, d);
        const double fu = g(u);
        ++evals;
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    fmin = fx;
    return x;
}

// Minimize f along x + t*dir starting from t = 0. Updates x and fx in place.
template <class F>
void line_minimize(F& f, Eigen::VectorXd& x, double& fx, const Eigen::VectorXd& dir,
                   double initial_step, double tol, std::size_t& evals, std::size_t max_evals) {
    auto g = [&](double t) { return f(Eigen::VectorXd(x + t * dir)); };

    // Bracket a minimum: walk downhill with golden-ratio expansion.
    double ta = 0.0, fa = fx;
    double tb = initial_step;
    double fb = g(tb);
    ++evals;
    if (fb > fa) {
        // Try the other side; if both ascend, the minimum is bracketed by
        // (-step, 0, +step) already.
        const double tc0 = -initial_step;
        const double fc0 = g(tc0);
        ++evals;
        if (fc0 > fa) {
            double fmin;
            const double tmin =
                brent_minimize(g, tc0, ta, tb, fa, tol, evals, max_evals, fmin);
            if (fmin < fx) { x += tmin * dir; fx = fmin; }
            return;
        }
        tb = tc0;
        fb = fc0;
    }
    double tc = tb + 1.618033988749895 * (tb - ta);
    double fc = g(tc);
    ++evals;
    while (fc < fb && evals < max_evals && std::isfinite(fc)) {
        ta = tb; fa = fb;
        tb = tc; fb = fc;
        tc = tb + 1.618033988749895 * (tb - ta);
        fc = g(tc);
        ++evals;
    }

    double fmin;
    const double tmin = brent_minimize(g, ta, tb, tc, fb, tol, evals, max_evals, fmin);
    if (fmin < fx) {
        x += tmin * dir;
        fx = fmin;
    }
}

} // namespace detail

// Powell's method: sweep line searches over a direction set, then replace the
// direction of largest single gain by the sweep's net displacement when the
// standard acceptance test favors it. Directions are reset to the coordinate
// axes periodically to stop the set from collapsing into a subspace. The
// objective value never increases. A hit of the evaluation budget reports
// converged = false with the best point found.
template <class F>
OptimizerResult powell_minimize(F&& f, const Eigen::VectorXd& x0,
                                const OptimizerOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    if (n == 0) throw error(errc::invalid_dimension, "powell_minimize: empty start point");
    const int reset_every = opt.reset_every > 0 ? opt.reset_every : static_cast<int>(n);

    OptimizerResult res;
    res.x = x0;
    res.f = f(res.x);
    res.n_evals = 1;

    Eigen::MatrixXd dirs = Eigen::MatrixXd::Identity(n, n);

    for (int sweep = 0;; ++sweep) {
        res.n_sweeps = sweep + 1;
        const Eigen::VectorXd x_start = res.x;
        const double f_start = res.f;

        Eigen::Index i_big = 0;
        double delta_big = 0.0;
        for (Eigen::Index i = 0; i < n && res.n_evals < opt.max_evals; ++i) {
            const double f_before = res.f;
            detail::line_minimize(f, res.x, res.f, Eigen::VectorXd(dirs.col(i)),
                                  opt.initial_step, opt.line_tol, res.n_evals, opt.max_evals);
            if (f_before - res.f > delta_big) {
                delta_big = f_before - res.f;
                i_big = i;
            }
        }

        const double decrease = f_start - res.f;
        const double displacement = (res.x - x_start).cwiseAbs().maxCoeff();
        if (opt.callback) opt.callback(sweep, res.f, res.x);

        if (decrease <= opt.rel_tol * (std::abs(f_start) + std::abs(res.f) + 1e-300) &&
            displacement <= opt.param_tol) {
            res.converged = true;
            return res;
        }
        if (res.n_evals >= opt.max_evals) return res;  // budget exhausted, not converged

        // Powell's direction-replacement test on the extrapolated point.
        Eigen::VectorXd net = res.x - x_start;
        if (net.norm() > 0.0) {
            const Eigen::VectorXd x_ext = res.x + net;
            const double f_ext = f(x_ext);
            ++res.n_evals;
            if (f_ext < f_start) {
                const double t = 2.0 * (f_start - 2.0 * res.f + f_ext) *
                                     (f_start - res.f - delta_big) * (f_start - res.f - delta_big) -
                                 delta_big * (f_start - f_ext) * (f_start - f_ext);
                if (t < 0.0) {
                    Eigen::VectorXd new_dir = net.normalized();
                    detail::line_minimize(f, res.x, res.f, new_dir, opt.initial_step,
                                          opt.line_tol, res.n_evals, opt.max_evals);
                    dirs.col(i_big) = dirs.col(n - 1);
                    dirs.col(n - 1) = new_dir;
                }
            }
        }

        if ((sweep + 1) % reset_every == 0) dirs.setIdentity();
    }
}

} // namespace tomo
