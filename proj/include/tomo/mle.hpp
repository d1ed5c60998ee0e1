#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "tomo/density.hpp"
#include "tomo/linalg.hpp"
#include "tomo/powell.hpp"
#include "tomo/tomography.hpp"
#include "tomo/types.hpp"

namespace tomo {

// 16 real parameters of the positivity-guaranteeing factorization
//   rho_p(t) = T(t)^dag T(t) / Tr{T(t)^dag T(t)}
// with the lower-triangular layout
//   T = ( t1            0             0             0  )
//       ( t5 + i t6     t2            0             0  )
//       ( t11 + i t12   t7 + i t8     t3            0  )
//       ( t15 + i t16   t13 + i t14   t9 + i t10    t4 ).
using TParams = Eigen::Matrix<double, 16, 1>;

inline Mat4 t_matrix(const TParams& t) {
    Mat4 m = Mat4::Zero();
    m(0, 0) = t(0);
    m(1, 0) = cplx(t(4), t(5));
    m(1, 1) = t(1);
    m(2, 0) = cplx(t(10), t(11));
    m(2, 1) = cplx(t(6), t(7));
    m(2, 2) = t(2);
    m(3, 0) = cplx(t(14), t(15));
    m(3, 1) = cplx(t(12), t(13));
    m(3, 2) = cplx(t(8), t(9));
    m(3, 3) = t(3);
    return m;
}

// Hermitian, unit-trace and positive semidefinite for any finite t with a
// nonzero entry -- this is the whole point of the parametrization.
inline DensityMatrix t_to_rho(const TParams& t) {
    const Mat4 tm = t_matrix(t);
    Mat4 rho = tm.adjoint() * tm;
    const double norm = rho.trace().real();
    if (!(norm > 1e-300))
        throw error(errc::zero_parametrization,
                    "all t parameters are (numerically) zero; the state is undefined");
    rho /= norm;
    return DensityMatrix(Mat(rho));
}

// Closed-form inverse via the determinant and minors of rho. For a physical
// full-rank rho this is exact; for a non-physical rho (negative eigenvalues
// make some ratios under the square roots negative) the complex intermediate
// values are truncated to their real parts, which is the standard way to seed
// the fit from a linear-inversion estimate.
inline TParams rho_to_t(const DensityMatrix& rho, double singular_tol = 1e-12) {
    const DetAndMinors mm = det_and_minors(rho.matrix());

    const cplx rho44 = mm.a(3, 3);
    const cplx m1_11 = mm.first(0, 0);
    const cplx m2_1122 = mm.second(0, 0, 1, 1);
    if (std::abs(rho44) < singular_tol || std::abs(m1_11) < singular_tol ||
        std::abs(m2_1122) < singular_tol)
        throw error(errc::singular_inverse,
                    "rho_44 or a required minor is (numerically) zero; "
                    "the factorization is singular");

    const cplx s_rho44 = std::sqrt(rho44);
    const cplx s_m1_11 = std::sqrt(m1_11);
    const cplx s_m2_1122 = std::sqrt(m2_1122);

    const cplx t11 = std::sqrt(mm.det / m1_11);
    const cplx t21 = mm.first(0, 1) / (s_m1_11 * s_m2_1122);
    const cplx t22 = s_m1_11 / s_m2_1122;
    const cplx t31 = mm.second(0, 1, 1, 2) / (s_rho44 * s_m2_1122);
    const cplx t32 = mm.second(0, 0, 1, 2) / (s_rho44 * s_m2_1122);
    const cplx t33 = s_m2_1122 / s_rho44;
    const cplx t41 = mm.a(3, 0) / s_rho44;
    const cplx t42 = mm.a(3, 1) / s_rho44;
    const cplx t43 = mm.a(3, 2) / s_rho44;
    const cplx t44 = s_rho44;

    TParams t;
    t(0) = t11.real();
    t(1) = t22.real();
    t(2) = t33.real();
    t(3) = t44.real();
    t(4) = t21.real();
    t(5) = t21.imag();
    t(6) = t32.real();
    t(7) = t32.imag();
    t(8) = t43.real();
    t(9) = t43.imag();
    t(10) = t31.real();
    t(11) = t31.imag();
    t(12) = t42.real();
    t(13) = t42.imag();
    t(14) = t41.real();
    t(15) = t41.imag();
    return t;
}

// rho_to_t with a graceful path for rank-deficient inputs: blend toward the
// maximally mixed state just enough to clear the singular denominators.
// Returns the t of the blended state -- a starting point, not an identity.
inline TParams rho_to_t_regularized(const DensityMatrix& rho, double singular_tol = 1e-12) {
    try {
        return rho_to_t(rho, singular_tol);
    } catch (const error& e) {
        if (e.code() != errc::singular_inverse) throw;
    }
    for (double delta = 1e-6; delta <= 1e-2 + 1e-15; delta *= 100.0) {
        const Mat blended =
            (1.0 - delta) * rho.matrix() + delta * 0.25 * Mat::Identity(4, 4);
        try {
            return rho_to_t(DensityMatrix(blended), singular_tol);
        } catch (const error& e) {
            if (e.code() != errc::singular_inverse) throw;
        }
    }
    throw error(errc::singular_inverse,
                "factorization stayed singular even after blending toward I/4");
}

// Weighted squared-residual objective: predicted counts vs measured, each
// term normalized by the (approximately Poissonian) variance of the bin,
//   L(t) = sum_nu (nbar_nu - n_nu)^2 / (2 nbar_nu),   nbar_nu = N <psi_nu|rho_p(t)|psi_nu>,
// with the denominator floored at half a count so empty predicted bins stay
// finite. N is the fixed flux from the four basis configurations, not a fit
// parameter.
inline double likelihood(const TParams& t, const Vector16& counts, const TomographySet& set,
                         double n_total) {
    const Mat4 tm = t_matrix(t);
    Mat4 rho = tm.adjoint() * tm;
    const double norm = rho.trace().real();
    if (!(norm > 1e-300))
        throw error(errc::zero_parametrization, "likelihood: all t parameters are zero");
    rho /= norm;

    double l = 0.0;
    for (int nu = 0; nu < 16; ++nu) {
        const cplx p = set.states[nu].adjoint() * rho * set.states[nu];
        const double nbar = n_total * p.real();
        const double resid = nbar - counts(nu);
        l += resid * resid / (2.0 * std::max(nbar, 0.5));
    }
    return l;
}

inline double likelihood(const TParams& t, const Vector16& counts, const TomographySet& set) {
    return likelihood(t, counts, set, total_flux(counts));
}

struct MleResult {
    DensityMatrix rho;
    TParams t;
    double objective = 0.0;              // L at the returned t
    std::size_t n_evals = 0;
    int n_sweeps = 0;
    bool converged = false;              // false when the evaluation budget ran out
    std::vector<double> objective_trace; // L after each optimizer sweep (non-increasing)
};

// Full maximum-likelihood pipeline: linear inversion seeds the t parameters
// (real-truncated when the seed is unphysical), then a derivative-free
// direction-set fit of L over the 16-dimensional t space. The result is
// physical by construction. Non-convergence is reported as a flag with the
// best estimate retained, not as an exception.
inline MleResult mle_reconstruct(const Vector16& counts, const TomographySet& set,
                                 const OptimizerOptions& user_opt = {}) {
    const double n_total = total_flux(counts);
    const DensityMatrix seed_rho = linear_reconstruct(counts, set);
    const TParams t0 = rho_to_t_regularized(seed_rho);

    auto objective = [&](const Eigen::VectorXd& t) {
        return likelihood(TParams(t), counts, set, n_total);
    };

    OptimizerOptions opt = user_opt;
    std::vector<double> trace;
    auto user_callback = user_opt.callback;
    opt.callback = [&](int sweep, double f, const Eigen::VectorXd& x) {
        trace.push_back(f);
        if (user_callback) user_callback(sweep, f, x);
    };

    const OptimizerResult fit = powell_minimize(objective, Eigen::VectorXd(t0), opt);

    MleResult res{t_to_rho(TParams(fit.x)),
                  TParams(fit.x),
                  fit.f,
                  fit.n_evals,
                  fit.n_sweeps,
                  fit.converged,
                  std::move(trace)};
    return res;
}

inline MleResult mle_reconstruct(const Vector16& counts, const OptimizerOptions& opt = {}) {
    return mle_reconstruct(counts, standard_tomography_set(), opt);
}

} // namespace tomo
