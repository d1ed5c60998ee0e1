#pragma once

#include <array>
#include <cmath>
#include <string>

#include "tomo/types.hpp"

namespace tomo {

// Jones matrix of a quarter-wave plate with fast axis at angle q from
// horizontal, written in the |H>,|V> basis:
//   U_QWP(q) = (1/sqrt2) [ i - cos 2q,  sin 2q     ]
//              [ sin 2q,      i + cos 2q ]
inline Mat2 qwp_matrix(double q) {
    const double c = std::cos(2.0 * q), s = std::sin(2.0 * q);
    const double r = 1.0 / std::sqrt(2.0);
    Mat2 u;
    u << cplx(-c, 1.0) * r, cplx(s, 0.0) * r,
         cplx(s, 0.0) * r,  cplx(c, 1.0) * r;
    return u;
}

// Half-wave plate at angle h:
//   U_HWP(h) = [ cos 2h, -sin 2h ]
//              [ -sin 2h, -cos 2h ]
inline Mat2 hwp_matrix(double h) {
    const double c = std::cos(2.0 * h), s = std::sin(2.0 * h);
    Mat2 u;
    u << cplx(c, 0.0), cplx(-s, 0.0),
         cplx(-s, 0.0), cplx(-c, 0.0);
    return u;
}

// Angle derivatives of the plates, used for error propagation.
inline Mat2 qwp_matrix_deriv(double q) {
    const double c = std::cos(2.0 * q), s = std::sin(2.0 * q);
    const double r = 1.0 / std::sqrt(2.0);
    Mat2 du;
    du << cplx(2.0 * s, 0.0) * r, cplx(2.0 * c, 0.0) * r,
          cplx(2.0 * c, 0.0) * r, cplx(-2.0 * s, 0.0) * r;
    return du;
}

inline Mat2 hwp_matrix_deriv(double h) {
    const double c = std::cos(2.0 * h), s = std::sin(2.0 * h);
    Mat2 du;
    du << cplx(-2.0 * s, 0.0), cplx(-2.0 * c, 0.0),
          cplx(-2.0 * c, 0.0), cplx(2.0 * s, 0.0);
    return du;
}

// The projection state analyzed in one beam: the wave plates rotate the state
// that the polarizing beam splitter transmits into its V port, so the
// analyzer passes  |psi(h, q)> = U_QWP(q) U_HWP(h) (0, 1)^T.
inline Vec2 single_beam_state(double h, double q) {
    Vec2 v;
    v << cplx(0.0, 0.0), cplx(1.0, 0.0);
    return qwp_matrix(q) * hwp_matrix(h) * v;
}

// The same state written out in closed form,
//   a = (1/sqrt2) (sin 2(h-q) - i sin 2h),
//   b = -(1/sqrt2) (cos 2(h-q) + i cos 2h),
// obtained by multiplying the plate matrices through symbolically. Kept as an
// independent cross-check of the matrix product above.
inline Vec2 single_beam_state_closed_form(double h, double q) {
    const double r = 1.0 / std::sqrt(2.0);
    Vec2 v;
    v << cplx(std::sin(2.0 * (h - q)), -std::sin(2.0 * h)) * r,
        cplx(-std::cos(2.0 * (h - q)), -std::cos(2.0 * h)) * r;
    return v;
}

// d|psi>/dh and d|psi>/dq for the same beam.
inline Vec2 single_beam_state_dh(double h, double q) {
    Vec2 v;
    v << cplx(0.0, 0.0), cplx(1.0, 0.0);
    return qwp_matrix(q) * hwp_matrix_deriv(h) * v;
}

inline Vec2 single_beam_state_dq(double h, double q) {
    Vec2 v;
    v << cplx(0.0, 0.0), cplx(1.0, 0.0);
    return qwp_matrix_deriv(q) * hwp_matrix(h) * v;
}

// One measurement configuration: wave-plate angles for the two analyzers.
// Stored in radians; the _deg factory accepts the degree values that data
// files and tables use.
struct WaveplateSetting {
    double h1 = 0.0, q1 = 0.0, h2 = 0.0, q2 = 0.0;
    std::string label;

    static WaveplateSetting from_degrees(double h1_deg, double q1_deg, double h2_deg,
                                         double q2_deg, std::string label = {}) {
        WaveplateSetting s;
        s.h1 = deg2rad(h1_deg);
        s.q1 = deg2rad(q1_deg);
        s.h2 = deg2rad(h2_deg);
        s.q2 = deg2rad(q2_deg);
        s.label = std::move(label);
        return s;
    }
};

// Two-photon projection state |psi_nu> = |psi(h1,q1)> (x) |psi(h2,q2)> in the
// |HH>,|HV>,|VH>,|VV> basis.
inline Vec4 two_photon_state(const WaveplateSetting& s) {
    const Vec2 a = single_beam_state(s.h1, s.q1);
    const Vec2 b = single_beam_state(s.h2, s.q2);
    Vec4 v;
    v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
    return v;
}

// Partial derivatives of the two-photon state with respect to the four plate
// angles, in the order (h1, q1, h2, q2).
inline std::array<Vec4, 4> two_photon_state_derivs(const WaveplateSetting& s) {
    const Vec2 a = single_beam_state(s.h1, s.q1);
    const Vec2 b = single_beam_state(s.h2, s.q2);
    const Vec2 da_h = single_beam_state_dh(s.h1, s.q1);
    const Vec2 da_q = single_beam_state_dq(s.h1, s.q1);
    const Vec2 db_h = single_beam_state_dh(s.h2, s.q2);
    const Vec2 db_q = single_beam_state_dq(s.h2, s.q2);

    auto kron2 = [](const Vec2& x, const Vec2& y) {
        Vec4 v;
        v << x(0) * y(0), x(0) * y(1), x(1) * y(0), x(1) * y(1);
        return v;
    };
    return {kron2(da_h, b), kron2(da_q, b), kron2(a, db_h), kron2(a, db_q)};
}

// The standard 16-configuration tomography schedule. Angle pairs are chosen
// so the analyzed states run through H/V, the diagonal state D = (H+V)/sqrt2,
// and the circular states L = (H+iV)/sqrt2, R = (H-iV)/sqrt2. The first four
// configurations project onto the computational basis and define the overall
// flux normalization.
inline const std::array<WaveplateSetting, 16>& standard_settings() {
    static const std::array<WaveplateSetting, 16> table = {{
        WaveplateSetting::from_degrees(45.0, 0.0, 45.0, 0.0, "HH"),
        WaveplateSetting::from_degrees(45.0, 0.0, 0.0, 0.0, "HV"),
        WaveplateSetting::from_degrees(0.0, 0.0, 0.0, 0.0, "VV"),
        WaveplateSetting::from_degrees(0.0, 0.0, 45.0, 0.0, "VH"),
        WaveplateSetting::from_degrees(22.5, 0.0, 45.0, 0.0, "RH"),
        WaveplateSetting::from_degrees(22.5, 0.0, 0.0, 0.0, "RV"),
        WaveplateSetting::from_degrees(22.5, 45.0, 0.0, 0.0, "DV"),
        WaveplateSetting::from_degrees(22.5, 45.0, 45.0, 0.0, "DH"),
        WaveplateSetting::from_degrees(22.5, 45.0, 22.5, 0.0, "DR"),
        WaveplateSetting::from_degrees(22.5, 45.0, 22.5, 45.0, "DD"),
        WaveplateSetting::from_degrees(22.5, 0.0, 22.5, 45.0, "RD"),
        WaveplateSetting::from_degrees(45.0, 0.0, 22.5, 45.0, "HD"),
        WaveplateSetting::from_degrees(0.0, 0.0, 22.5, 45.0, "VD"),
        WaveplateSetting::from_degrees(0.0, 0.0, 22.5, 90.0, "VL"),
        WaveplateSetting::from_degrees(45.0, 0.0, 22.5, 90.0, "HL"),
        WaveplateSetting::from_degrees(22.5, 0.0, 22.5, 90.0, "RL"),
    }};
    return table;
}

} // namespace tomo
