#pragma once

#include <stdexcept>
#include <string>

namespace tomo {

// Failure taxonomy for the whole kit. Every throwing operation documents
// which codes it can raise; tests match on the code, not the message text.
enum class errc {
    invalid_dimension,        // matrix dimension not in {2, 4, 8} / shape mismatch
    not_hermitian,            // Hermiticity residual above tolerance
    degenerate_spectrum,      // eigenpair too degenerate for perturbation formulas
    invalid_index,            // eigenpair / setting index out of range
    not_tomographically_complete, // B matrix numerically singular
    zero_flux,                // sum of the four flux-defining counts is not positive
    unsupported_size,         // n-qubit path asked for n outside 1..3
    zero_parametrization,     // all t parameters zero, rho undefined
    singular_inverse,         // rho -> t inversion hit a vanishing denominator
    not_converged,            // optimizer exhausted max_evals
    not_physical,             // eigenvalue below the physicality tolerance
    degenerate_concurrence,   // spin-flip spectrum too degenerate for analytic dC
    eof_derivative_singular,  // C too close to 1 for the dE chain factor
    parse_error,              // malformed counts file
};

const char* errc_name(errc c);

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_dimension: return "invalid_dimension";
        case errc::not_hermitian: return "not_hermitian";
        case errc::degenerate_spectrum: return "degenerate_spectrum";
        case errc::invalid_index: return "invalid_index";
        case errc::not_tomographically_complete: return "not_tomographically_complete";
        case errc::zero_flux: return "zero_flux";
        case errc::unsupported_size: return "unsupported_size";
        case errc::zero_parametrization: return "zero_parametrization";
        case errc::singular_inverse: return "singular_inverse";
        case errc::not_converged: return "not_converged";
        case errc::not_physical: return "not_physical";
        case errc::degenerate_concurrence: return "degenerate_concurrence";
        case errc::eof_derivative_singular: return "eof_derivative_singular";
        case errc::parse_error: return "parse_error";
    }
    return "unknown";
}

} // namespace tomo
