#pragma once

#include <array>
#include <cmath>

#include "tomo/density.hpp"
#include "tomo/gamma.hpp"
#include "tomo/types.hpp"
#include "tomo/waveplates.hpp"

namespace tomo {

using Vector16 = Eigen::Matrix<double, 16, 1>;
using Matrix16 = Eigen::Matrix<double, 16, 16>;

// Everything derived from a measurement schedule that the reconstruction and
// error analysis need:
//   states[nu]  projection state |psi_nu>
//   b(nu, mu)   = <psi_nu| Gamma_mu |psi_nu>   (real for Hermitian Gamma)
//   m[nu]       = sum_mu (b^-1)(mu, nu) Gamma_mu, the dual operators with
//                 <psi_mu| m[nu] |psi_mu> = delta_mu_nu
//   f[i](nu,mu) = 2 Re <d psi_nu / d theta_i | m[mu] | psi_nu>, the response
//                 of measured probabilities to the i-th wave-plate angle of
//                 configuration nu, in the order (h1, q1, h2, q2)
struct TomographySet {
    std::array<WaveplateSetting, 16> settings;
    std::array<Vec4, 16> states;
    Matrix16 b;
    Matrix16 binv;
    std::array<Mat4, 16> m;
    std::array<Matrix16, 4> f;
    // True for the configurations whose counts enter the flux normalization
    // (the four basis projections leading the schedule). The exact-covariance
    // option of the error analysis needs to know which these are.
    std::array<bool, 16> d{};
};

inline TomographySet build_tomography_set(const std::array<WaveplateSetting, 16>& settings) {
    TomographySet set;
    set.settings = settings;
    const auto& gamma = gamma_basis();

    for (int nu = 0; nu < 16; ++nu) {
        set.states[nu] = two_photon_state(settings[nu]);
        set.d[nu] = nu < 4;
        for (int mu = 0; mu < 16; ++mu) {
            const cplx v = set.states[nu].adjoint() * gamma[mu] * set.states[nu];
            set.b(nu, mu) = v.real();
        }
    }

    // Invertibility gate on the design: a near-singular B means the 16 states
    // do not usefully span the operator space.
    Eigen::JacobiSVD<Matrix16> svd(set.b);
    const double cond = svd.singularValues()(0) / svd.singularValues()(15);
    if (!std::isfinite(cond) || cond > 1e8)
        throw error(errc::not_tomographically_complete,
                    "projection design is singular or ill-conditioned (condition number " +
                        std::to_string(cond) + ")");
    set.binv = Eigen::FullPivLU<Matrix16>(set.b).inverse();

    for (int nu = 0; nu < 16; ++nu) {
        set.m[nu].setZero();
        for (int mu = 0; mu < 16; ++mu) set.m[nu] += set.binv(mu, nu) * gamma[mu];
    }

    for (int nu = 0; nu < 16; ++nu) {
        const auto dpsi = two_photon_state_derivs(settings[nu]);
        for (int i = 0; i < 4; ++i) {
            for (int mu = 0; mu < 16; ++mu) {
                const cplx v = dpsi[i].adjoint() * set.m[mu] * set.states[nu];
                set.f[i](nu, mu) = 2.0 * v.real();
            }
        }
    }
    return set;
}

inline const TomographySet& standard_tomography_set() {
    static const TomographySet set = build_tomography_set(standard_settings());
    return set;
}

// The first four configurations of a schedule are taken to be the complete
// basis projections whose counts add up to the total flux.
inline double total_flux(const Vector16& counts) {
    const double n = counts.head<4>().sum();
    if (!(n > 0.0))
        throw error(errc::zero_flux,
                    "sum of the four basis-projection counts is not positive");
    return n;
}

// Linear inversion: rho = sum_nu m[nu] * n_nu / N. Exactly reproduces the
// measured probabilities but is not guaranteed positive semidefinite.
//
// Unit trace fixes the normalization at N = sum_nu Tr{m[nu]} n_nu. For the
// standard schedule Tr{m[nu]} is 1 on the four basis projections and 0
// elsewhere, so this is the usual sum of the first four counts; the weighted
// form keeps the inversion exact when the leading four states of a custom
// schedule are not an orthonormal basis (e.g. misaligned plates).
inline DensityMatrix linear_reconstruct(const Vector16& counts, const TomographySet& set) {
    double n_total = 0.0;
    for (int nu = 0; nu < 16; ++nu) n_total += set.m[nu].trace().real() * counts(nu);
    if (!(n_total > 0.0))
        throw error(errc::zero_flux, "inferred total flux is not positive");
    Mat4 rho = Mat4::Zero();
    for (int nu = 0; nu < 16; ++nu) rho += set.m[nu] * (counts(nu) / n_total);
    return DensityMatrix(Mat(rho));
}

inline DensityMatrix linear_reconstruct(const Vector16& counts) {
    return linear_reconstruct(counts, standard_tomography_set());
}

// Probability that state rho passes the analyzer projecting onto |psi>.
inline double projection_probability(const Mat& rho, const Vec& psi) {
    const cplx v = psi.adjoint() * rho * psi;
    return v.real();
}

// Expected counts for a state at total flux n_total.
inline Vector16 expected_counts(const Mat& rho, const TomographySet& set, double n_total) {
    Vector16 out;
    for (int nu = 0; nu < 16; ++nu)
        out(nu) = n_total * projection_probability(rho, set.states[nu]);
    return out;
}

// --- Count-based single-qubit reconstruction --------------------------------

struct StokesVector {
    Eigen::Vector4d s;       // S_0..S_3
    Eigen::Vector4d counts;  // the raw counts they came from
};

struct SingleQubitReconstruction {
    StokesVector stokes;
    DensityMatrix rho;
};

// Schedule: n_0 behind a 50% filter, then projections onto |H>,
// (|H>-|V>)/sqrt2 and |R>. Stokes parameters follow directly:
//   S_0 = 2 n_0,  S_i = 2 (n_i - n_0),  rho = (1/2) sum_i (S_i/S_0) sigma_i.
inline SingleQubitReconstruction stokes_single_qubit(const Eigen::Vector4d& counts) {
    const double s0 = 2.0 * counts(0);
    if (!(s0 > 0.0))
        throw error(errc::zero_flux, "filter count n_0 must be positive");
    StokesVector sv;
    sv.counts = counts;
    sv.s(0) = s0;
    Mat2 rho = 0.5 * sigma_rl(0);
    for (int i = 1; i < 4; ++i) {
        sv.s(i) = 2.0 * (counts(i) - counts(0));
        rho += 0.5 * (sv.s(i) / s0) * sigma_rl(i);
    }
    return {sv, DensityMatrix(Mat(rho))};
}

// --- Count-based n-qubit reconstruction (n = 1, 2, 3) -----------------------
//
// Measurement tuples (i_1, ..., i_n), i_k in 0..3, enumerate all combinations
// of the single-qubit schedule on each photon; the flattened index treats i_1
// as the most significant base-4 digit (last qubit varies fastest). Each
// index-0 slot is realized as a 50% filter, so its operator carries a factor
// 1/2; scaling the raw count by 2 per zero digit undoes that, after which the
// per-qubit inverse of the mu->sigma map applied as a Kronecker power yields
// the joint Stokes parameters directly:
//   T = (Upsilon^-1)^(x)n  (2^{#zeros} n),   rho = 2^-n sum_t (T_t/T_0) sigma_t.
// For n = 1 this reduces term by term to stokes_single_qubit.
inline DensityMatrix nqubit_reconstruct(const Eigen::VectorXd& counts, int n_qubits) {
    if (n_qubits < 1 || n_qubits > 3)
        throw error(errc::unsupported_size,
                    "nqubit_reconstruct handles 1 to 3 qubits, got " + std::to_string(n_qubits));
    const Eigen::Index n_tuples = Eigen::Index(1) << (2 * n_qubits);  // 4^n
    if (counts.size() != n_tuples)
        throw error(errc::invalid_dimension,
                    "expected " + std::to_string(n_tuples) + " counts for " +
                        std::to_string(n_qubits) + " qubits, got " +
                        std::to_string(counts.size()));

    auto digits_of = [&](Eigen::Index t) {
        std::array<int, 3> d{};
        for (int k = n_qubits - 1; k >= 0; --k) {
            d[static_cast<size_t>(k)] = static_cast<int>(t % 4);
            t /= 4;
        }
        return d;
    };

    Eigen::VectorXd scaled(n_tuples);
    for (Eigen::Index t = 0; t < n_tuples; ++t) {
        const auto d = digits_of(t);
        int zeros = 0;
        for (int k = 0; k < n_qubits; ++k)
            if (d[static_cast<size_t>(k)] == 0) ++zeros;
        scaled(t) = counts(t) * std::ldexp(1.0, zeros);
    }

    Eigen::MatrixXd inv_map = upsilon_inv();
    for (int k = 1; k < n_qubits; ++k) {
        Eigen::MatrixXd next(inv_map.rows() * 4, inv_map.cols() * 4);
        for (Eigen::Index r = 0; r < inv_map.rows(); ++r)
            for (Eigen::Index c = 0; c < inv_map.cols(); ++c)
                next.block<4, 4>(4 * r, 4 * c) = inv_map(r, c) * upsilon_inv();
        inv_map = std::move(next);
    }
    const Eigen::VectorXd stokes = inv_map * scaled;
    if (!(stokes(0) > 0.0))
        throw error(errc::zero_flux, "inferred total flux is not positive");

    const Eigen::Index dim = Eigen::Index(1) << n_qubits;
    Mat rho = Mat::Zero(dim, dim);
    for (Eigen::Index t = 0; t < n_tuples; ++t) {
        const auto d = digits_of(t);
        Mat op = sigma_rl(d[0]);
        for (int k = 1; k < n_qubits; ++k) op = kron(op, sigma_rl(d[static_cast<size_t>(k)]));
        rho += (stokes(t) / stokes(0)) * op;
    }
    rho /= static_cast<double>(dim);
    return DensityMatrix(rho);
}

} // namespace tomo
