#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "golden_data.hpp"
#include "test_util.hpp"
#include "tomo/synthetic.hpp"
#include "tomo/validation.hpp"

using namespace tomo;

namespace {

Vec4 basis_ket(int i) {
    Vec4 v = Vec4::Zero();
    v(i) = 1.0;
    return v;
}

DensityMatrix werner(double p) {
    const Vec4 b = (basis_ket(kBasisHH) + basis_ket(kBasisVV)) / std::sqrt(2.0);
    return DensityMatrix(Mat(p * (b * b.adjoint()) + (1.0 - p) * 0.25 * Mat4::Identity()));
}

} // namespace

TEST_CASE("noiseless counts for |HH> at known flux") {
    Mat rho = Mat::Zero(4, 4);
    rho(kBasisHH, kBasisHH) = 1.0;
    GeneratorConfig cfg{DensityMatrix(rho)};
    cfg.total_flux = 1e4;
    cfg.noise_mode = NoiseMode::noiseless;
    const Vector16 counts = generate_counts(cfg);

    Vector16 expect;
    expect << 10000, 0, 0, 0, 5000, 0, 0, 5000, 2500, 2500, 2500, 5000, 0, 0, 5000, 2500;
    CHECK((counts - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("same seed, same counts; different seed, different counts") {
    GeneratorConfig cfg{werner(0.8)};
    cfg.total_flux = 5e4;
    cfg.seed = 12345;

    for (NoiseMode mode : {NoiseMode::poisson, NoiseMode::poisson_plus_jitter}) {
        cfg.noise_mode = mode;
        const Vector16 a = generate_counts(cfg);
        const Vector16 b = generate_counts(cfg);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

        GeneratorConfig other = cfg;
        other.seed = 54321;
        const Vector16 c = generate_counts(other);
        CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
    }

    // Jitter must actually change the draw relative to pure Poisson noise.
    cfg.noise_mode = NoiseMode::poisson;
    const Vector16 plain = generate_counts(cfg);
    cfg.noise_mode = NoiseMode::poisson_plus_jitter;
    const Vector16 jittered = generate_counts(cfg);
    CHECK((plain - jittered).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("poisson sampler statistics") {
    std::mt19937_64 rng(99);
    tomo::detail::NormalSampler normal;

    SECTION("small-mean branch (Knuth inversion)") {
        const double mean = 4.2;
        const int n = 40000;
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double k = tomo::detail::sample_poisson(rng, normal, mean);
            sum += k;
            sq += k * k;
        }
        const double m = sum / n;
        const double var = (sq - sum * sum / n) / (n - 1);
        CHECK(m == Catch::Approx(mean).margin(3.5 * std::sqrt(mean / n)));
        CHECK(var == Catch::Approx(mean).epsilon(0.05));
    }

    SECTION("large-mean branch (rounded gaussian)") {
        const double mean = 2500.0;
        const int n = 20000;
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double k = tomo::detail::sample_poisson(rng, normal, mean);
            CHECK(k >= 0.0);
            CHECK(k == std::floor(k));  // integer-valued
            sum += k;
            sq += k * k;
        }
        const double m = sum / n;
        const double var = (sq - sum * sum / n) / (n - 1);
        CHECK(m == Catch::Approx(mean).margin(3.5 * std::sqrt(mean / n)));
        CHECK(var == Catch::Approx(mean).epsilon(0.05));
    }

    SECTION("zero and negative means give zero counts") {
        CHECK(tomo::detail::sample_poisson(rng, normal, 0.0) == 0.0);
        CHECK(tomo::detail::sample_poisson(rng, normal, -3.0) == 0.0);
    }
}

TEST_CASE("poisson counts average to the expected counts") {
    const auto& set = standard_tomography_set();
    GeneratorConfig cfg{werner(0.8)};
    cfg.total_flux = 1e4;
    cfg.noise_mode = NoiseMode::poisson;

    const Vector16 expect = expected_counts(cfg.rho_true.matrix(), set, cfg.total_flux);
    const int trials = 400;
    Vector16 sum = Vector16::Zero();
    for (int t = 0; t < trials; ++t) {
        cfg.seed = derive_substream_seed(7, static_cast<std::uint64_t>(t));
        sum += generate_counts(cfg, set);
    }
    const Vector16 mean = sum / trials;
    for (int nu = 0; nu < 16; ++nu) {
        const double se = std::sqrt(expect(nu) / trials);
        CHECK(mean(nu) == Catch::Approx(expect(nu)).margin(4.0 * se + 1e-9));
    }
}

TEST_CASE("jittered counts stay near the expected counts") {
    const auto& set = standard_tomography_set();
    GeneratorConfig cfg{werner(0.8)};
    cfg.total_flux = 1e4;
    cfg.noise_mode = NoiseMode::poisson_plus_jitter;

    const Vector16 expect = expected_counts(cfg.rho_true.matrix(), set, cfg.total_flux);
    const int trials = 400;
    Vector16 sum = Vector16::Zero();
    for (int t = 0; t < trials; ++t) {
        cfg.seed = derive_substream_seed(8, static_cast<std::uint64_t>(t));
        sum += generate_counts(cfg, set);
    }
    const Vector16 mean = sum / trials;
    // Angle jitter is zero-mean; at 0.25 deg RMS the quadratic bias in the
    // probabilities is O(d_theta^2) ~ 2e-5, far below the statistical margin.
    for (int nu = 0; nu < 16; ++nu)
        CHECK(mean(nu) == Catch::Approx(expect(nu)).epsilon(0.03));
}

TEST_CASE("substream seeds are distinct and base-dependent") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_substream_seed(42, i));
    CHECK(seen.size() == 1000);
    CHECK(derive_substream_seed(42, 7) != derive_substream_seed(43, 7));
}

TEST_CASE("generator input validation") {
    GeneratorConfig cfg{werner(0.5)};
    cfg.total_flux = 0.0;
    CHECK_THROWS_MATCHES(generate_counts(cfg), error,
                         Catch::Matchers::Predicate<error>(
                             [](const error& e) { return e.code() == errc::zero_flux; }));

    Mat bad = Mat::Zero(4, 4);
    bad(0, 0) = 1.2;
    bad(1, 1) = -0.2;
    GeneratorConfig cfg2{DensityMatrix(bad)};
    CHECK_THROWS_MATCHES(generate_counts(cfg2), error,
                         Catch::Matchers::Predicate<error>(
                             [](const error& e) { return e.code() == errc::not_physical; }));

    GeneratorConfig cfg3{DensityMatrix(Mat(Mat::Identity(2, 2) * 0.5))};
    CHECK_THROWS_MATCHES(generate_counts(cfg3), error,
                         Catch::Matchers::Predicate<error>(
                             [](const error& e) { return e.code() == errc::invalid_dimension; }));
}

TEST_CASE("monte carlo validation of the variance budget") {
    const DensityMatrix rho = werner(0.8);

    SECTION("poisson-only pairing (fixed nominal flux)") {
        const McValidation v = mc_validate_lambda(rho, 1e4, 0.0, 4000, 31);
        CHECK(v.trials == 4000);
        CHECK(v.predicted_lambda.minCoeff() > 0.0);
        CHECK(v.worst_relative_deviation < 0.15);
    }

    SECTION("exact-covariance pairing (per-trial flux normalization)") {
        const McValidation v =
            mc_validate_lambda(rho, 1e4, 0.0, 4000, 32, /*exact_covariance=*/true);
        CHECK(v.worst_relative_deviation < 0.15);
    }

    SECTION("with angle jitter included") {
        const McValidation v = mc_validate_lambda(rho, 1e4, deg2rad(0.25), 4000, 33);
        CHECK(v.worst_relative_deviation < 0.15);
    }

    SECTION("result is independent of the thread count") {
        const McValidation a =
            mc_validate_lambda(rho, 1e4, deg2rad(0.25), 600, 34, standard_tomography_set(),
                               false, /*max_threads=*/1);
        const McValidation b =
            mc_validate_lambda(rho, 1e4, deg2rad(0.25), 600, 34, standard_tomography_set(),
                               false, /*max_threads=*/4);
        for (int nu = 0; nu < 16; ++nu)
            CHECK(a.empirical_variance(nu) ==
                  Catch::Approx(b.empirical_variance(nu)).epsilon(1e-9));
    }

    SECTION("needs at least two trials") {
        CHECK_THROWS_MATCHES(mc_validate_lambda(rho, 1e4, 0.0, 1, 35), error,
                             Catch::Matchers::Predicate<error>([](const error& e) {
                                 return e.code() == errc::invalid_index;
                             }));
    }
}
