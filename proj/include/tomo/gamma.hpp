#pragma once

#include <array>

#include "tomo/types.hpp"

namespace tomo {

// Standard Pauli matrices in the |H>,|V> basis; index 0 is the identity.
inline Mat2 pauli(int i) {
    Mat2 m;
    const cplx I(0.0, 1.0);
    switch (i) {
        case 0: m << 1, 0, 0, 1; break;
        case 1: m << 0, 1, 1, 0; break;
        case 2: m << 0, -I, I, 0; break;
        case 3: m << 1, 0, 0, -1; break;
        default: throw error(errc::invalid_index, "pauli: index must be 0..3");
    }
    return m;
}

// Orthonormal Hermitian basis for two-qubit operators: sixteen matrices
// Gamma_mu = (sigma_i (x) sigma_j)/2 with Tr{Gamma_mu Gamma_nu} = delta_mu_nu.
// The ordering matters downstream (the reconstruction matrices are indexed
// against it), so it is fixed here once:
//   mu 0..2:   I (x) {x,y,z}
//   mu 3..6:   x (x) {I,x,y,z}
//   mu 7..10:  y (x) {I,x,y,z}
//   mu 11..14: z (x) {I,x,y,z}
//   mu 15:     I (x) I
inline const std::array<Mat4, 16>& gamma_basis() {
    static const std::array<Mat4, 16> basis = [] {
        constexpr int pair[16][2] = {
            {0, 1}, {0, 2}, {0, 3},
            {1, 0}, {1, 1}, {1, 2}, {1, 3},
            {2, 0}, {2, 1}, {2, 2}, {2, 3},
            {3, 0}, {3, 1}, {3, 2}, {3, 3},
            {0, 0},
        };
        std::array<Mat4, 16> out;
        for (int mu = 0; mu < 16; ++mu) {
            const Mat2 a = pauli(pair[mu][0]);
            const Mat2 b = pauli(pair[mu][1]);
            Mat4 g;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    g.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
            out[mu] = 0.5 * g;
        }
        return out;
    }();
    return basis;
}

// --- Single-qubit Stokes machinery -----------------------------------------
//
// The Stokes decomposition used here is written in the circular basis
// |R> = (|H> - i|V>)/sqrt2, |L> = (|H> + i|V>)/sqrt2:
//   sigma_0 = |R><R| + |L><L|,   sigma_1 = |R><L| + |L><R|,
//   sigma_2 = i(|L><R| - |R><L|), sigma_3 = |R><R| - |L><L|.
// Expressed back in the |H>,|V> basis these are the matrices below.
inline Mat2 sigma_rl(int i) {
    Mat2 m;
    const cplx I(0.0, 1.0);
    switch (i) {
        case 0: m << 1, 0, 0, 1; break;
        case 1: m << 1, 0, 0, -1; break;
        case 2: m << 0, -1, -1, 0; break;
        case 3: m << 0, I, -I, 0; break;
        default: throw error(errc::invalid_index, "sigma_rl: index must be 0..3");
    }
    return m;
}

// Measurement operators for the canonical single-qubit schedule: a 50%
// filter (passes half the flux regardless of polarization) followed by
// projections onto |H>, (|H>-|V>)/sqrt2 and |R>. As operators:
//   mu_0 = sigma_0,  mu_i = (sigma_0 + sigma_i)/2.
// Counts relate to Stokes parameters by n_i = (flux/2) <mu_i> with the filter
// accounting for the extra factor of two on n_0.
inline Mat2 mu_op(int i) {
    if (i == 0) return sigma_rl(0);
    return 0.5 * (sigma_rl(0) + sigma_rl(i));
}

// mu_i = sum_j Upsilon(i,j) sigma_j. Invertible, so Stokes parameters follow
// from measured expectation values by the inverse map.
inline Eigen::Matrix4d upsilon() {
    Eigen::Matrix4d u;
    u << 1.0, 0.0, 0.0, 0.0,
         0.5, 0.5, 0.0, 0.0,
         0.5, 0.0, 0.5, 0.0,
         0.5, 0.0, 0.0, 0.5;
    return u;
}

inline Eigen::Matrix4d upsilon_inv() {
    Eigen::Matrix4d u;
    u << 1.0, 0.0, 0.0, 0.0,
        -1.0, 2.0, 0.0, 0.0,
        -1.0, 0.0, 2.0, 0.0,
        -1.0, 0.0, 0.0, 2.0;
    return u;
}

// An alternative single-qubit schedule that needs no 50% filter: projections
// onto |H>, |V>, |D> = (|H>+|V>)/sqrt2 and |R>. Provided for reference; the
// count-based reconstruction entry points use the filter schedule above.
inline Mat2 mu_prime_op(int i) {
    Mat2 m;
    const cplx I(0.0, 1.0);
    switch (i) {
        case 0: m << 1, 0, 0, 0; break;
        case 1: m << 0, 0, 0, 1; break;
        case 2: m << 0.5, 0.5, 0.5, 0.5; break;
        case 3: m << 0.5, 0.5 * I, -0.5 * I, 0.5; break;
        default: throw error(errc::invalid_index, "mu_prime_op: index must be 0..3");
    }
    return m;
}

inline Eigen::Matrix4d upsilon_prime() {
    Eigen::Matrix4d u;
    u << 0.5, 0.5, 0.0, 0.0,
         0.5, -0.5, 0.0, 0.0,
         0.5, 0.0, -0.5, 0.0,
         0.5, 0.0, 0.0, 0.5;
    return u;
}

} // namespace tomo
