#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "tomo/types.hpp"

namespace tomo {

// Eigensystem of a Hermitian matrix, eigenvalues sorted in descending order,
// vectors().col(a) belonging to values()(a).
struct HermitianEig {
    Eigen::VectorXd values;
    Mat vectors;
};

// Eigensystem of a general (non-Hermitian) matrix with biorthonormal left and
// right vectors: right.col(a) is |zeta_a>, left.row(a) is <xi_a|, and
// left.row(a) * right.col(b) = delta_ab. Values sorted by descending real
// part. `residual` measures how well sum_a r_a |zeta_a><xi_a| rebuilds the
// input; it blows up for defective matrices.
struct BiorthogonalEig {
    Vec values;
    Mat right;
    Mat left;
    double residual = 0.0;
};

inline HermitianEig hermitian_eig(const Mat& a, double herm_tol = 1e-9) {
    require_square_dim(a, "hermitian_eig");
    if (!is_hermitian(a, herm_tol))
        throw error(errc::not_hermitian,
                    "hermiticity residual " + std::to_string(hermiticity_residual(a)) +
                        " exceeds tolerance " + std::to_string(herm_tol));

    Eigen::SelfAdjointEigenSolver<Mat> solver((a + a.adjoint()) / 2.0);
    if (solver.info() != Eigen::Success)
        throw error(errc::degenerate_spectrum, "hermitian eigensolver failed to converge");

    // Eigen returns ascending order; flip to descending.
    const auto n = a.rows();
    HermitianEig out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

// Eigenvalues of a general square matrix, sorted by descending real part
// (ties by descending imaginary part). No vectors are computed, so this is
// safe for defective inputs such as the spin-flip product of a rank-deficient
// state.
inline Vec general_eigenvalues(const Mat& a) {
    require_square_dim(a, "general_eigenvalues");
    Eigen::ComplexEigenSolver<Mat> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw error(errc::degenerate_spectrum, "eigenvalue iteration failed to converge");

    Vec vals = solver.eigenvalues();
    std::sort(vals.data(), vals.data() + vals.size(), [](cplx x, cplx y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });
    return vals;
}

inline BiorthogonalEig biorthogonal_eig(const Mat& a, double residual_tol = 1e-6) {
    require_square_dim(a, "biorthogonal_eig");
    Eigen::ComplexEigenSolver<Mat> solver(a);
    if (solver.info() != Eigen::Success)
        throw error(errc::degenerate_spectrum, "eigenvalue iteration failed to converge");

    const auto n = a.rows();
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        const cplx x = solver.eigenvalues()(i), y = solver.eigenvalues()(j);
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });

    BiorthogonalEig out;
    out.values.resize(n);
    out.right.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = solver.eigenvalues()(order[static_cast<size_t>(i)]);
        out.right.col(i) = solver.eigenvectors().col(order[static_cast<size_t>(i)]);
    }

    // Rows of the inverse are automatically biorthonormal to the columns of
    // `right` and carry the <xi_a|zeta_a> = 1 normalization. For a defective
    // input the vector matrix is singular and the reconstruction residual
    // below detects it.
    out.left = out.right.fullPivLu().inverse();

    Mat rebuilt = out.right * out.values.asDiagonal() * out.left;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    out.residual = (rebuilt - a).cwiseAbs().maxCoeff() / scale;
    if (!std::isfinite(out.residual) || out.residual > residual_tol)
        throw error(errc::degenerate_spectrum,
                    "biorthogonality residual " + std::to_string(out.residual) +
                        " exceeds tolerance (matrix is defective or nearly so)");
    return out;
}

inline void require_pair_index(Eigen::Index n, Eigen::Index a, const char* who) {
    if (a < 0 || a >= n)
        throw error(errc::invalid_index,
                    std::string(who) + ": eigenpair index " + std::to_string(a) +
                        " out of range 0.." + std::to_string(n - 1));
}

// First-order shift of a Hermitian eigenvalue under a Hermitian perturbation:
// d lambda_a = <phi_a| dA |phi_a>.
inline double eigenvalue_derivative(const HermitianEig& eig, Eigen::Index a, const Mat& da) {
    require_pair_index(eig.values.size(), a, "eigenvalue_derivative");
    if (da.rows() != eig.vectors.rows() || da.cols() != eig.vectors.rows())
        throw error(errc::invalid_dimension, "eigenvalue_derivative: perturbation shape mismatch");
    const cplx v = eig.vectors.col(a).adjoint() * da * eig.vectors.col(a);
    return v.real();
}

// Non-Hermitian counterpart: d r_a = <xi_a| dA |zeta_a> (complex in general).
inline cplx eigenvalue_derivative(const BiorthogonalEig& eig, Eigen::Index a, const Mat& da) {
    require_pair_index(eig.values.size(), a, "eigenvalue_derivative");
    if (da.rows() != eig.right.rows() || da.cols() != eig.right.rows())
        throw error(errc::invalid_dimension, "eigenvalue_derivative: perturbation shape mismatch");
    return (eig.left.row(a) * da * eig.right.col(a))(0);
}

struct EigenvectorPerturbation {
    Vec delta_right;                 // |d zeta_a>
    Eigen::RowVectorXcd delta_left;  // <d xi_a|
};

// First-order eigenvector response for a non-degenerate eigenpair of a general
// matrix:
//   |d zeta_a> = sum_{b != a} |zeta_b> <xi_b|dA|zeta_a> / (r_a - r_b)
//   <d xi_a|   = sum_{b != a} <xi_a|dA|zeta_b> / (r_a - r_b) <xi_b|
// Gaps below `gap_tol` make the denominators meaningless.
inline EigenvectorPerturbation eigenvector_perturbation(const BiorthogonalEig& eig, Eigen::Index a,
                                                        const Mat& da, double gap_tol = 1e-8) {
    const auto n = eig.values.size();
    require_pair_index(n, a, "eigenvector_perturbation");
    if (da.rows() != n || da.cols() != n)
        throw error(errc::invalid_dimension, "eigenvector_perturbation: perturbation shape mismatch");

    EigenvectorPerturbation out;
    out.delta_right = Vec::Zero(n);
    out.delta_left = Eigen::RowVectorXcd::Zero(n);
    for (Eigen::Index b = 0; b < n; ++b) {
        if (b == a) continue;
        const cplx gap = eig.values(a) - eig.values(b);
        if (std::abs(gap) < gap_tol)
            throw error(errc::degenerate_spectrum,
                        "eigenvalue gap |r_" + std::to_string(a) + " - r_" + std::to_string(b) +
                            "| = " + std::to_string(std::abs(gap)) + " below tolerance");
        const cplx forward = (eig.left.row(b) * da * eig.right.col(a))(0);
        const cplx backward = (eig.left.row(a) * da * eig.right.col(b))(0);
        out.delta_right += eig.right.col(b) * (forward / gap);
        out.delta_left += (backward / gap) * eig.left.row(b);
    }
    return out;
}

// Determinant together with the sub-determinants the Cholesky-style inversion
// needs. Minors here are plain sub-determinants (no cofactor signs):
// first(i,j) deletes row i and column j; second(i,j,k,l) deletes rows i,k and
// columns j,l. Indices are 0-based.
struct DetAndMinors {
    Mat a;
    cplx det;
    Eigen::Matrix4cd first;

    cplx second(int i, int j, int k, int l) const {
        Eigen::Matrix2cd sub;
        int r = 0;
        for (int row = 0; row < 4; ++row) {
            if (row == i || row == k) continue;
            int c = 0;
            for (int col = 0; col < 4; ++col) {
                if (col == j || col == l) continue;
                sub(r, c) = a(row, col);
                ++c;
            }
            ++r;
        }
        return sub.determinant();
    }
};

inline DetAndMinors det_and_minors(const Mat& m) {
    if (m.rows() != 4 || m.cols() != 4)
        throw error(errc::invalid_dimension, "det_and_minors: expected a 4x4 matrix");
    DetAndMinors out;
    out.a = m;
    out.det = Eigen::Matrix4cd(m).determinant();
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            Eigen::Matrix3cd sub;
            int r = 0;
            for (int row = 0; row < 4; ++row) {
                if (row == i) continue;
                int c = 0;
                for (int col = 0; col < 4; ++col) {
                    if (col == j) continue;
                    sub(r, c) = m(row, col);
                    ++c;
                }
                ++r;
            }
            out.first(i, j) = sub.determinant();
        }
    }
    return out;
}

} // namespace tomo
