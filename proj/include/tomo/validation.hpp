#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "tomo/error_analysis.hpp"
#include "tomo/synthetic.hpp"
#include "tomo/tomography.hpp"

namespace tomo {

// Monte Carlo cross-check of the variance budget: simulate many tomography
// runs of a known state and compare the empirical Var(s_nu) against the
// predicted Lambda_nu, per projection.
struct McValidation {
    Vector16 empirical_variance;
    Vector16 predicted_lambda;
    Vector16 ratio;  // empirical / predicted
    int trials = 0;
    double worst_relative_deviation = 0.0;  // max_nu |ratio - 1|
};

namespace detail {

inline int thread_budget(int requested, int trials) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("TOMO_KIT_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return std::min(n, std::max(1, trials));
}

} // namespace detail

// The two covariance conventions pair with two normalizations:
//  - plain Lambda (count term s/N) models s_nu = n_nu / N_nominal with the
//    flux treated as a known constant;
//  - the exact-covariance diagonal models s_nu = n_nu / (n_1+n_2+n_3+n_4),
//    where the normalization itself fluctuates trial to trial.
// The validator normalizes each trial to match the prediction under test.
inline McValidation mc_validate_lambda(const DensityMatrix& rho_true, double n_flux,
                                       double delta_theta, int trials, std::uint64_t seed,
                                       const TomographySet& set,
                                       bool exact_covariance = false, int max_threads = 0) {
    if (trials < 2)
        throw error(errc::invalid_index, "variance validation needs at least 2 trials");

    McValidation out;
    out.trials = trials;

    ErrorOptions opt;
    opt.delta_theta = delta_theta;
    opt.exact_covariance = exact_covariance;
    const Vector16 s_true = s_parameters(rho_true, set);
    out.predicted_lambda = lambda_variances(s_true, n_flux, set, opt).lambda;

    const int n_threads = detail::thread_budget(max_threads, trials);
    std::vector<Vector16> sums(n_threads, Vector16::Zero());
    std::vector<Vector16> sqsums(n_threads, Vector16::Zero());

    auto worker = [&](int w) {
        GeneratorConfig cfg{rho_true};
        cfg.total_flux = n_flux;
        cfg.delta_theta = delta_theta;
        cfg.noise_mode =
            delta_theta > 0.0 ? NoiseMode::poisson_plus_jitter : NoiseMode::poisson;
        for (int t = w; t < trials; t += n_threads) {
            cfg.seed = derive_substream_seed(seed, static_cast<std::uint64_t>(t));
            const Vector16 counts = generate_counts(cfg, set);
            const Vector16 s =
                exact_covariance ? Vector16(counts / total_flux(counts)) : Vector16(counts / n_flux);
            sums[w] += s;
            sqsums[w] += s.cwiseProduct(s);
        }
    };

    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
    }

    Vector16 sum = Vector16::Zero(), sqsum = Vector16::Zero();
    for (int w = 0; w < n_threads; ++w) {
        sum += sums[w];
        sqsum += sqsums[w];
    }
    const double n = static_cast<double>(trials);
    out.empirical_variance = (sqsum - sum.cwiseProduct(sum) / n) / (n - 1.0);

    for (int nu = 0; nu < 16; ++nu) {
        out.ratio(nu) = out.empirical_variance(nu) / out.predicted_lambda(nu);
        out.worst_relative_deviation =
            std::max(out.worst_relative_deviation, std::abs(out.ratio(nu) - 1.0));
    }
    return out;
}

inline McValidation mc_validate_lambda(const DensityMatrix& rho_true, double n_flux,
                                       double delta_theta, int trials, std::uint64_t seed,
                                       bool exact_covariance = false, int max_threads = 0) {
    return mc_validate_lambda(rho_true, n_flux, delta_theta, trials, seed,
                              standard_tomography_set(), exact_covariance, max_threads);
}

} // namespace tomo
