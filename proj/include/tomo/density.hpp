#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "tomo/linalg.hpp"
#include "tomo/types.hpp"

namespace tomo {

// Spectrum-level diagnosis of a reconstructed matrix. Linear inversion on
// noisy counts routinely produces negative eigenvalues; callers use this to
// decide whether entropy-like quantities are meaningful on the raw estimate.
struct PhysicalityReport {
    Eigen::VectorXd eigenvalues;  // descending
    double min_eigenvalue = 0.0;
    double trace_deviation = 0.0;
    bool physical = false;
};

// A Hermitian, unit-trace matrix of 1-3 qubits. Positivity is *not* enforced
// here -- a linear-inversion result is a legitimate DensityMatrix even when it
// is unphysical. Construction symmetrizes and rescales the trace to absorb
// rounding, but rejects inputs that are wrong beyond tolerance.
class DensityMatrix {
public:
    explicit DensityMatrix(Mat rho, double tol = 1e-9) {
        require_square_dim(rho, "DensityMatrix");
        if (!is_hermitian(rho, tol))
            throw error(errc::not_hermitian,
                        "DensityMatrix: hermiticity residual " +
                            std::to_string(hermiticity_residual(rho)) + " exceeds " +
                            std::to_string(tol));
        const double tr = rho.trace().real();
        if (std::abs(rho.trace() - cplx(1.0, 0.0)) > tol)
            throw error(errc::not_physical,
                        "DensityMatrix: trace " + std::to_string(tr) + " is not 1 within " +
                            std::to_string(tol));
        rho_ = ((rho + rho.adjoint()) / 2.0) / tr;
    }

    const Mat& matrix() const { return rho_; }
    Eigen::Index dim() const { return rho_.rows(); }

    int qubits() const {
        switch (dim()) {
            case 2: return 1;
            case 4: return 2;
            case 8: return 3;
        }
        return 0;  // unreachable: constructor enforces dim in {2,4,8}
    }

    cplx operator()(Eigen::Index i, Eigen::Index j) const { return rho_(i, j); }

    // Spectral decomposition, computed on first use and cached.
    const HermitianEig& eig() const {
        if (!eig_) eig_ = hermitian_eig(rho_);
        return *eig_;
    }

    double purity() const { return (rho_ * rho_).trace().real(); }

    PhysicalityReport physicality(double tol = 1e-9) const {
        PhysicalityReport rep;
        rep.eigenvalues = eig().values;
        rep.min_eigenvalue = rep.eigenvalues(rep.eigenvalues.size() - 1);
        rep.trace_deviation = std::abs(rho_.trace() - cplx(1.0, 0.0));
        rep.physical = rep.min_eigenvalue >= -tol;
        return rep;
    }

private:
    Mat rho_;
    mutable std::optional<HermitianEig> eig_;
};

// Nearest physical state under spectrum clipping: eigenvalues at or below
// `floor` (zero by default) are set to zero and the trace renormalized.
// Useful for estimates that are physical up to rounding before feeding them
// to entropy-like functionals that require positivity. A matrix quoted to k
// decimals carries spurious eigenvalues of order 10^-k of either sign; a
// floor just above that quantization noise restores the original rank, which
// support-restricted derivatives are sensitive to.
inline DensityMatrix clipped_to_physical(const DensityMatrix& rho, double floor = 0.0) {
    const auto& eig = rho.eig();
    Mat out = Mat::Zero(rho.dim(), rho.dim());
    double norm = 0.0;
    for (Eigen::Index a = 0; a < rho.dim(); ++a) {
        const double p = eig.values(a) > floor ? eig.values(a) : 0.0;
        norm += p;
        out += p * (eig.vectors.col(a) * eig.vectors.col(a).adjoint());
    }
    if (!(norm > 0.0))
        throw error(errc::not_physical, "clipped_to_physical: no positive spectral weight");
    return DensityMatrix(Mat(out / norm));
}

} // namespace tomo
