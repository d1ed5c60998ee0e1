#pragma once

#include <cmath>

#include "tomo/density.hpp"
#include "tomo/linalg.hpp"
#include "tomo/measures.hpp"
#include "tomo/tomography.hpp"
#include "tomo/types.hpp"

namespace tomo {

// Which probabilities feed the error model: the raw count fractions, or the
// projection probabilities of the fitted state. Error bars quoted on a fitted
// estimate conventionally use the latter.
enum class SPath { linear, mle };

inline const char* s_path_name(SPath p) { return p == SPath::linear ? "linear" : "mle"; }

struct ErrorOptions {
    double delta_theta = deg2rad(0.25);  // RMS wave-plate setting error, radians
    bool exact_covariance = false;       // keep the O(1/N^3) count-covariance term
    double fd_step = 1e-5;               // s-space step for fallback derivatives
    double r_floor = 1e-8;               // smallest r_a the analytic concurrence path accepts
};

// s_nu as measured: the count fractions n_nu / N.
inline Vector16 s_parameters(const Vector16& counts) {
    return counts / total_flux(counts);
}

// s_nu recomputed from an estimated state: <psi_nu| rho |psi_nu>.
inline Vector16 s_parameters(const DensityMatrix& rho, const TomographySet& set) {
    Vector16 s;
    for (int nu = 0; nu < 16; ++nu)
        s(nu) = projection_probability(rho.matrix(), set.states[nu]);
    return s;
}

// Per-parameter variance budget: Var(s_nu) = Lambda_nu, split into the Poisson
// count term and the wave-plate angle term. Off-diagonal covariances are
// dropped (they are O(1/N) smaller once the flux normalization is fixed).
struct ErrorBudget {
    Vector16 lambda;      // count_term + angle_term
    Vector16 count_term;  // s_nu / N  (exact variant adds s_nu^2 (1 - 2 D_nu) / N)
    Vector16 angle_term;  // (d_theta)^2 sum_i (sum_mu f[i](nu,mu) s_mu)^2
    Vector16 s;           // the probabilities the budget was built from
    double n_total = 0.0;
    double delta_theta = 0.0;
    bool exact_covariance = false;
};

inline ErrorBudget lambda_variances(const Vector16& s, double n_total,
                                    const TomographySet& set, const ErrorOptions& opt = {}) {
    ErrorBudget b;
    b.s = s;
    b.n_total = n_total;
    b.delta_theta = opt.delta_theta;
    b.exact_covariance = opt.exact_covariance;

    for (int nu = 0; nu < 16; ++nu) {
        double term = s(nu) / n_total;
        // The diagonal of the exact count covariance: normalizing by the
        // (itself fluctuating) sum of the first four counts correlates s_nu
        // with the flux, subtracting variance from the normalization bins and
        // adding it everywhere else.
        if (opt.exact_covariance)
            term += s(nu) * s(nu) / n_total * (set.d[nu] ? -1.0 : 1.0);
        b.count_term(nu) = term;
    }

    b.angle_term.setZero();
    for (int i = 0; i < 4; ++i) {
        const Vector16 g = set.f[i] * s;  // g(nu) = d s_nu / d theta_(nu,i)
        b.angle_term += g.cwiseProduct(g);
    }
    b.angle_term *= opt.delta_theta * opt.delta_theta;

    b.lambda = b.count_term + b.angle_term;
    return b;
}

inline ErrorBudget lambda_variances(const Vector16& counts, const Vector16& s,
                                    const TomographySet& set, const ErrorOptions& opt = {}) {
    return lambda_variances(s, total_flux(counts), set, opt);
}

// Elementwise one-sigma errors of the linearly reconstructed density matrix:
// (d rho_ij)^2 = sum_nu |m[nu](i,j)|^2 Lambda_nu.
inline Eigen::Matrix4d rho_element_errors(const ErrorBudget& budget, const TomographySet& set) {
    Eigen::Matrix4d out = Eigen::Matrix4d::Zero();
    for (int nu = 0; nu < 16; ++nu)
        out += budget.lambda(nu) * Eigen::Matrix4d(set.m[nu].cwiseAbs2());
    return out.cwiseSqrt();
}

// --- Gradients of the scalar measures with respect to s ---------------------
//
// Throughout, the state is the linear functional rho(s) = sum_nu m[nu] s_nu,
// differentiated without renormalization; the measure errors follow as
// (dF)^2 = sum_nu (dF/ds_nu)^2 Lambda_nu.

// dS/ds_nu = -sum_a <phi_a| m[nu] |phi_a> (1 + ln p_a) / ln 2, restricted to
// the support of rho. The true derivative of -p log p diverges as p -> 0+,
// so zero modes cannot contribute a finite term; clipping them at some tiny
// positive value would instead inject an arbitrary large factor of
// |ln(clip)| per zero eigenvalue into every error bar. Restricting the sum to
// p_a above the shared clip tolerance quotes the sensitivity of the entropy
// carried by the actual spectrum.
inline Vector16 entropy_gradient(const DensityMatrix& rho, const TomographySet& set) {
    detail::require_physical(rho, "entropy_gradient");
    const auto& eig = rho.eig();
    Vector16 g = Vector16::Zero();
    for (int a = 0; a < 4; ++a) {
        const double p = eig.values(a);
        if (p <= kEigenvalueClip) continue;
        const double w = (1.0 + std::log(p)) / std::log(2.0);
        const Vec phi = eig.vectors.col(a);
        for (int nu = 0; nu < 16; ++nu) {
            const cplx v = phi.adjoint() * set.m[nu] * phi;
            g(nu) -= v.real() * w;
        }
    }
    return g;
}

inline double entropy_error(const DensityMatrix& rho, const ErrorBudget& budget,
                            const TomographySet& set) {
    const Vector16 g = entropy_gradient(rho, set);
    return std::sqrt(g.cwiseAbs2().dot(budget.lambda));
}

// dP/ds_nu = -(8/3) sum_mu Tr{m[mu] m[nu]} s_mu  (= -(8/3) Tr{rho m[nu]}).
inline Vector16 linear_entropy_gradient(const ErrorBudget& budget, const TomographySet& set) {
    Vector16 g;
    for (int nu = 0; nu < 16; ++nu) {
        double acc = 0.0;
        for (int mu = 0; mu < 16; ++mu)
            acc += (set.m[mu] * set.m[nu]).trace().real() * budget.s(mu);
        g(nu) = -(8.0 / 3.0) * acc;
    }
    return g;
}

inline double linear_entropy_error(const ErrorBudget& budget, const TomographySet& set) {
    const Vector16 g = linear_entropy_gradient(budget, set);
    return std::sqrt(g.cwiseAbs2().dot(budget.lambda));
}

// dC/ds_nu by non-Hermitian perturbation theory:
//   dC/ds_nu = sum_a sgn(3/2 - a) (1 / 2 sqrt(r_a)) Re <xi_a| dR/ds_nu |zeta_a>,
//   dR/ds_nu = m[nu] Sigma rho^T Sigma + rho Sigma m[nu]^T Sigma.
// Valid only when every r_a is safely positive and the bi-orthogonal system
// of R is well conditioned; otherwise it throws and the caller falls back to
// finite differences.
inline Vector16 concurrence_gradient_analytic(const DensityMatrix& rho,
                                              const ConcurrenceWork& work,
                                              const TomographySet& set,
                                              double r_floor = 1e-8) {
    for (int a = 0; a < 4; ++a)
        if (!(work.r(a) > r_floor))
            throw error(errc::degenerate_concurrence,
                        "spin-flipped eigenvalue r_" + std::to_string(a + 1) +
                            " = " + std::to_string(work.r(a)) +
                            " is too close to zero for the 1/sqrt(r) expansion");

    const BiorthogonalEig eig = biorthogonal_eig(work.r_matrix);
    const Mat4 sigma = spin_flip_matrix();
    const Mat4 rho4 = rho.matrix();
    const Mat4 left_part = sigma * rho4.transpose() * sigma;  // Sigma rho^T Sigma

    Vector16 g;
    for (int nu = 0; nu < 16; ++nu) {
        const Mat4 dr = set.m[nu] * left_part + rho4 * sigma * set.m[nu].transpose() * sigma;
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
            const double sgn = (a == 0) ? 1.0 : -1.0;
            const cplx bil = eig.left.row(a) * dr * eig.right.col(a);
            acc += sgn / (2.0 * std::sqrt(work.r(a))) * bil.real();
        }
        g(nu) = acc;
    }
    return g;
}

// Symmetric finite differences of the (clipped-eigenvalue) concurrence along
// each s_nu, through the same rho(s) = sum m[nu] s_nu functional. This is the
// documented fallback for rank-deficient states, where two r_a are exact
// zeros and the analytic expansion is singular.
inline Vector16 concurrence_gradient_fd(const Vector16& s, const TomographySet& set,
                                        double step = 1e-5) {
    auto value = [&](const Vector16& sv) {
        Mat4 rho = Mat4::Zero();
        for (int mu = 0; mu < 16; ++mu) rho += set.m[mu] * sv(mu);
        return detail::concurrence_value(detail::concurrence_work_unchecked(Mat(rho)).r);
    };
    Vector16 g;
    for (int nu = 0; nu < 16; ++nu) {
        Vector16 up = s, dn = s;
        up(nu) += step;
        dn(nu) -= step;
        g(nu) = (value(up) - value(dn)) / (2.0 * step);
    }
    return g;
}

struct ConcurrenceErrors {
    double concurrence = 0.0;
    double tangle = 0.0;
    double eof = 0.0;
    bool fd_fallback = false;   // analytic expansion was singular; finite differences used
    bool eof_fallback = false;  // dE/dC was singular (C ~ 1); finite differences used
};

inline ConcurrenceErrors concurrence_error(const DensityMatrix& rho, const ConcurrenceWork& work,
                                           const ErrorBudget& budget, const TomographySet& set,
                                           const ErrorOptions& opt = {}) {
    ConcurrenceErrors out;
    const double c = detail::concurrence_value(work.r);

    Vector16 g;
    try {
        g = concurrence_gradient_analytic(rho, work, set, opt.r_floor);
    } catch (const error& e) {
        if (e.code() != errc::degenerate_concurrence && e.code() != errc::degenerate_spectrum)
            throw;
        out.fd_fallback = true;
        g = concurrence_gradient_fd(budget.s, set, opt.fd_step);
    }
    out.concurrence = std::sqrt(g.cwiseAbs2().dot(budget.lambda));
    out.tangle = 2.0 * c * out.concurrence;

    if (c >= 1.0 - 1e-8) {
        // dE/dC is a 0 * inf product at C = 1; the composite derivative stays
        // finite (-> 1/ln 2), so differentiate E(s) directly instead.
        out.eof_fallback = true;
        auto eof_value = [&](const Vector16& sv) {
            Mat4 rho_s = Mat4::Zero();
            for (int mu = 0; mu < 16; ++mu) rho_s += set.m[mu] * sv(mu);
            const double cv =
                detail::concurrence_value(detail::concurrence_work_unchecked(Mat(rho_s)).r);
            return entanglement_of_formation({Measure::concurrence, cv}).value;
        };
        Vector16 ge;
        for (int nu = 0; nu < 16; ++nu) {
            Vector16 up = budget.s, dn = budget.s;
            up(nu) += opt.fd_step;
            dn(nu) -= opt.fd_step;
            ge(nu) = (eof_value(up) - eof_value(dn)) / (2.0 * opt.fd_step);
        }
        out.eof = std::sqrt(ge.cwiseAbs2().dot(budget.lambda));
    } else if (c < 1e-6) {
        // dE/dC ~ C |log(C)| vanishes at C -> 0; below this threshold the
        // half-binary-entropy argument is 1 to machine precision and the
        // factored formula would produce 0 * inf.
        out.eof = 0.0;
    } else {
        const double root = std::sqrt(1.0 - c * c);
        const double x = 0.5 * (1.0 + root);
        const double de_dc = c / (2.0 * root) * std::abs(binary_entropy_deriv(x));
        out.eof = de_dc * out.concurrence;
    }
    return out;
}

// All five measure errors in one pass.
struct MeasureErrors {
    double entropy = 0.0;
    double linear_entropy = 0.0;
    double concurrence = 0.0;
    double tangle = 0.0;
    double eof = 0.0;
    bool concurrence_fd_fallback = false;
    bool eof_fd_fallback = false;
};

inline MeasureErrors propagate_measure_errors(const DensityMatrix& rho,
                                              const ConcurrenceWork& work,
                                              const ErrorBudget& budget,
                                              const TomographySet& set,
                                              const ErrorOptions& opt = {}) {
    MeasureErrors out;
    out.entropy = entropy_error(rho, budget, set);
    out.linear_entropy = linear_entropy_error(budget, set);
    const ConcurrenceErrors ce = concurrence_error(rho, work, budget, set, opt);
    out.concurrence = ce.concurrence;
    out.tangle = ce.tangle;
    out.eof = ce.eof;
    out.concurrence_fd_fallback = ce.fd_fallback;
    out.eof_fd_fallback = ce.eof_fallback;
    return out;
}

} // namespace tomo
