#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "tomo/density.hpp"
#include "tomo/linalg.hpp"
#include "tomo/types.hpp"

namespace tomo {

// Shared eigenvalue clipping tolerance: spectrum entries at or below this are
// treated as exact zeros before logarithms and square roots. The constrained
// fit routinely returns rank-deficient states whose zero eigenvalues come out
// as O(1e-16) noise of either sign; this is the one knob that decides their
// fate, here and in the error propagation.
inline constexpr double kEigenvalueClip = 1e-9;

enum class Measure { entropy, linear_entropy, concurrence, tangle, eof };

inline const char* measure_name(Measure m) {
    switch (m) {
        case Measure::entropy: return "entropy";
        case Measure::linear_entropy: return "linear_entropy";
        case Measure::concurrence: return "concurrence";
        case Measure::tangle: return "tangle";
        case Measure::eof: return "entanglement_of_formation";
    }
    return "?";
}

struct MeasureResult {
    Measure name;
    double value = 0.0;
};

namespace detail {
inline void require_physical(const DensityMatrix& rho, const char* what) {
    const auto rep = rho.physicality(kEigenvalueClip);
    if (!rep.physical)
        throw error(errc::not_physical,
                    std::string(what) + ": state has eigenvalue " +
                        std::to_string(rep.min_eigenvalue) +
                        " below the clip tolerance; fit a physical estimate first");
}
} // namespace detail

// Von Neumann entropy S = -sum_a p_a log2 p_a, in bits (0 for a pure state,
// log2(d) for the maximally mixed state). Negative eigenvalues within the
// clip tolerance are set to zero and the spectrum is renormalized; exact
// zeros contribute nothing (p log p -> 0).
inline MeasureResult von_neumann_entropy(const DensityMatrix& rho) {
    detail::require_physical(rho, "von_neumann_entropy");
    const auto& eig = rho.eig();
    double total = 0.0;
    for (Eigen::Index a = 0; a < eig.values.size(); ++a)
        total += std::max(eig.values(a), 0.0);
    double s = 0.0;
    for (Eigen::Index a = 0; a < eig.values.size(); ++a) {
        const double p = std::max(eig.values(a), 0.0) / total;
        if (p > 0.0) s -= p * std::log2(p);
    }
    return {Measure::entropy, s};
}

// Linear entropy, normalized to [0, 1]: P = d/(d-1) (1 - Tr{rho^2}).
// For two qubits this is the (4/3)(1 - Tr{rho^2}) form.
inline MeasureResult linear_entropy(const DensityMatrix& rho) {
    const double d = static_cast<double>(rho.dim());
    const double tr2 = (rho.matrix() * rho.matrix()).trace().real();
    return {Measure::linear_entropy, d / (d - 1.0) * (1.0 - tr2)};
}

// Spin-flip matrix in the |HH>,|HV>,|VH>,|VV> basis (= -sigma_y (x) sigma_y).
// The concurrence construction below is tied to this basis choice.
inline Mat4 spin_flip_matrix() {
    Mat4 s = Mat4::Zero();
    s(0, 3) = -1.0;
    s(1, 2) = 1.0;
    s(2, 1) = 1.0;
    s(3, 0) = -1.0;
    return s;
}

// Intermediates of the concurrence computation that the error propagation
// reuses: the non-Hermitian product R = rho Sigma rho^T Sigma and the real,
// descending, clipped eigenvalues r_a. The value path deliberately avoids
// the left/right eigenvector solve -- R is defective precisely for the
// rank-deficient states the fit produces -- so the bi-orthogonal system is
// requested separately by whoever needs derivatives.
struct ConcurrenceWork {
    Mat4 r_matrix;
    Eigen::Vector4d r;  // eigenvalues of r_matrix: real parts, descending, clipped at 0
};

namespace detail {
// Eigenvalues of R for a (possibly slightly unphysical) rho, without the
// physicality gate: used by finite-difference error propagation, where the
// perturbed matrices stray outside the physical set by design.
inline ConcurrenceWork concurrence_work_unchecked(const Mat& rho) {
    ConcurrenceWork work;
    const Mat4 sigma = spin_flip_matrix();
    work.r_matrix = Mat4(rho) * sigma * Mat4(rho).transpose() * sigma;
    const Vec vals = general_eigenvalues(work.r_matrix);  // sorted by descending real part
    for (int a = 0; a < 4; ++a) work.r(a) = std::max(vals(a).real(), 0.0);
    return work;
}

inline double concurrence_value(const Eigen::Vector4d& r) {
    const double c = std::sqrt(r(0)) - std::sqrt(r(1)) - std::sqrt(r(2)) - std::sqrt(r(3));
    return std::max(0.0, c);
}
} // namespace detail

// Wootters concurrence C = max{0, sqrt(r1) - sqrt(r2) - sqrt(r3) - sqrt(r4)}
// with r_a the descending eigenvalues of R = rho Sigma rho^T Sigma. They are
// real and nonnegative for physical rho; real parts below the clip tolerance
// in magnitude are clipped to zero, anything more negative means the input
// was not a physical state.
inline std::pair<MeasureResult, ConcurrenceWork> concurrence(const DensityMatrix& rho) {
    if (rho.dim() != 4)
        throw error(errc::invalid_dimension, "concurrence is defined for two qubits only");
    detail::require_physical(rho, "concurrence");
    ConcurrenceWork work;
    const Mat4 sigma = spin_flip_matrix();
    work.r_matrix = Mat4(rho.matrix()) * sigma * Mat4(rho.matrix()).transpose() * sigma;
    const Vec vals = general_eigenvalues(work.r_matrix);
    for (int a = 0; a < 4; ++a) {
        const double re = vals(a).real();
        if (re < -kEigenvalueClip)
            throw error(errc::not_physical,
                        "concurrence: spin-flipped spectrum has eigenvalue " +
                            std::to_string(re) + "; the input is not a physical state");
        work.r(a) = std::max(re, 0.0);
    }
    return {{Measure::concurrence, detail::concurrence_value(work.r)}, work};
}

// Tangle T = C^2.
inline MeasureResult tangle(const MeasureResult& c) {
    return {Measure::tangle, c.value * c.value};
}

// Binary entropy h(x) = -x log2 x - (1-x) log2(1-x), with h(0) = h(1) = 0.
inline double binary_entropy(double x) {
    double h = 0.0;
    if (x > 0.0) h -= x * std::log2(x);
    if (x < 1.0) h -= (1.0 - x) * std::log2(1.0 - x);
    return h;
}

// d h / d x = log2((1-x)/x), defined on (0, 1).
inline double binary_entropy_deriv(double x) {
    return std::log2((1.0 - x) / x);
}

// Entanglement of formation E = h((1 + sqrt(1 - C^2))/2); 0 for separable
// states, 1 at C = 1.
inline MeasureResult entanglement_of_formation(const MeasureResult& c) {
    const double c2 = std::min(c.value * c.value, 1.0);
    const double x = 0.5 * (1.0 + std::sqrt(1.0 - c2));
    return {Measure::eof, binary_entropy(x)};
}

} // namespace tomo
