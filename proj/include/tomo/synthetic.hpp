#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "tomo/density.hpp"
#include "tomo/tomography.hpp"
#include "tomo/types.hpp"
#include "tomo/waveplates.hpp"

namespace tomo {

enum class NoiseMode {
    noiseless,           // exact expected counts, not rounded
    poisson,             // Poisson counts at the exact settings
    poisson_plus_jitter  // Gaussian wave-plate setting errors, then Poisson counts
};

inline const char* noise_mode_name(NoiseMode m) {
    switch (m) {
        case NoiseMode::noiseless: return "noiseless";
        case NoiseMode::poisson: return "poisson";
        case NoiseMode::poisson_plus_jitter: return "poisson_plus_jitter";
    }
    return "?";
}

struct GeneratorConfig {
    DensityMatrix rho_true;
    double total_flux = 1e4;                     // expected counts summed over nu = 1..4
    double delta_theta = deg2rad(0.25);          // RMS angle error for the jitter mode
    NoiseMode noise_mode = NoiseMode::noiseless;
    std::uint64_t seed = 0;
};

namespace detail {

// splitmix64: decorrelates (seed, index) pairs into independent substream
// seeds, so Monte Carlo trials are reproducible and order-independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// The samplers below are deliberately hand-rolled on top of the mt19937_64
// bit stream: std::poisson_distribution and friends are
// implementation-defined, and identical seeds must give identical counts on
// every standard library.

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1) with 53 bits
}

class NormalSampler {
public:
    double operator()(std::mt19937_64& rng) {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01(rng);
        if (u1 < 1e-300) u1 = 1e-300;  // keep log finite
        const double u2 = uniform01(rng);
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * pi * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * pi * u2);
    }

private:
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Knuth inversion for small means; rounded Gaussian above, where the
// relative error of the normal approximation is < 1% and inversion would
// draw O(mean) uniforms per sample.
inline double sample_poisson(std::mt19937_64& rng, NormalSampler& normal, double mean) {
    if (mean <= 0.0) return 0.0;
    if (mean < 30.0) {
        const double limit = std::exp(-mean);
        double p = 1.0;
        long k = 0;
        do {
            ++k;
            p *= uniform01(rng);
        } while (p > limit && k < 10000);
        return static_cast<double>(k - 1);
    }
    const double n = mean + std::sqrt(mean) * normal(rng);
    return std::max(0.0, std::round(n));
}

} // namespace detail

inline std::uint64_t derive_substream_seed(std::uint64_t base_seed, std::uint64_t index) {
    return detail::splitmix64(base_seed + detail::splitmix64(index));
}

// Simulate one tomography run of the standard (or a custom) schedule.
//
// Draw order is fixed by contract: first the 64 angle jitters (nu-major, then
// h1, q1, h2, q2), then the 16 Poisson counts in nu order. Same seed, same
// counts — across platforms and standard libraries.
inline Vector16 generate_counts(const GeneratorConfig& cfg, const TomographySet& set) {
    if (!(cfg.total_flux > 0.0))
        throw error(errc::zero_flux, "synthetic total flux must be positive");
    const auto physicality = cfg.rho_true.physicality();
    if (!physicality.physical)
        throw error(errc::not_physical, "synthetic source state must be a physical density matrix");
    if (cfg.rho_true.dim() != 4)
        throw error(errc::invalid_dimension, "synthetic generator covers the two-qubit schedule");

    std::mt19937_64 rng(cfg.seed);
    detail::NormalSampler normal;

    std::array<WaveplateSetting, 16> settings = set.settings;
    if (cfg.noise_mode == NoiseMode::poisson_plus_jitter) {
        for (auto& w : settings) {
            w.h1 += cfg.delta_theta * normal(rng);
            w.q1 += cfg.delta_theta * normal(rng);
            w.h2 += cfg.delta_theta * normal(rng);
            w.q2 += cfg.delta_theta * normal(rng);
        }
    }

    Vector16 counts;
    for (int nu = 0; nu < 16; ++nu) {
        const Vec psi = (cfg.noise_mode == NoiseMode::poisson_plus_jitter)
                            ? Vec(two_photon_state(settings[nu]))
                            : Vec(set.states[nu]);
        const double mean = cfg.total_flux * projection_probability(cfg.rho_true.matrix(), psi);
        counts(nu) = (cfg.noise_mode == NoiseMode::noiseless)
                         ? mean
                         : detail::sample_poisson(rng, normal, mean);
    }
    return counts;
}

inline Vector16 generate_counts(const GeneratorConfig& cfg) {
    return generate_counts(cfg, standard_tomography_set());
}

} // namespace tomo
