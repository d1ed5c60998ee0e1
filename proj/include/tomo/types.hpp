#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>

#include "tomo/errors.hpp"

namespace tomo {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;   // dynamic, used where the qubit count varies
using Vec = Eigen::VectorXcd;
using Mat2 = Eigen::Matrix2cd;  // fixed sizes for the hot two-qubit paths
using Mat4 = Eigen::Matrix4cd;
using Vec2 = Eigen::Vector2cd;
using Vec4 = Eigen::Vector4cd;

inline constexpr double pi = std::numbers::pi;

// Angles cross the API boundary in degrees (data files, CLI); everything
// internal is radians.
inline double deg2rad(double deg) { return deg * pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / pi; }

// Two-qubit computational basis order is fixed everywhere in the kit:
// index 0 = |HH>, 1 = |HV>, 2 = |VH>, 3 = |VV>.
inline constexpr int kBasisHH = 0, kBasisHV = 1, kBasisVH = 2, kBasisVV = 3;

inline double hermiticity_residual(const Mat& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Mat& a, double tol = 1e-9) {
    return a.rows() == a.cols() && hermiticity_residual(a) <= tol;
}

inline void require_square_dim(const Mat& a, const char* who) {
    const auto n = a.rows();
    if (a.cols() != n || (n != 2 && n != 4 && n != 8))
        throw error(errc::invalid_dimension,
                    std::string(who) + ": expected a square matrix of dimension 2, 4 or 8, got " +
                        std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

} // namespace tomo
