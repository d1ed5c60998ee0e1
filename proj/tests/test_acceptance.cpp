// Acceptance gate for the tomography kit: every quoted reference number is
// checked at its stated tolerance, one PASS/FAIL line per criterion, exit
// status = number of failed criteria.
//
// Criteria 2 and 3 are expected to FAIL on this implementation, and that is
// deliberate: the bundled dataset's quoted constrained-fit matrix sits at a
// strictly worse objective value than the optimum this optimizer reaches
// (493.50 vs 344.26), i.e. the quoted fit is under-converged. The gate
// reports the honest comparison against the quoted numbers and additionally
// prints, as informational lines, the same checks evaluated at the quoted
// matrix itself — those pass, which localizes the disagreement to the
// optimizer endpoint rather than to the measure or error machinery.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "golden_data.hpp"
#include "test_util.hpp"
#include "tomo/tomo.hpp"

using namespace tomo;
using steady = std::chrono::steady_clock;

namespace {

int g_failed = 0;

struct Criterion {
    const char* name;
    bool pass = true;
    std::vector<std::string> lines;

    explicit Criterion(const char* n) : name(n) {}

    void sub(bool ok, const std::string& text) {
        if (!ok) pass = false;
        lines.push_back(std::string(ok ? "    ok    " : "    FAIL  ") + text);
    }
    void info(const std::string& text) { lines.push_back("    note  " + text); }

    void report(int idx) {
        std::printf("criterion %d: %s ... %s\n", idx, name, pass ? "PASS" : "FAIL");
        for (const auto& l : lines) std::printf("%s\n", l.c_str());
        std::fflush(stdout);
        if (!pass) ++g_failed;
    }
};

std::string fmt(const char* f, double a) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}
std::string fmt(const char* f, double a, double b) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}
std::string fmt(const char* f, double a, double b, double c) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double ms_since(steady::time_point t0) {
    return std::chrono::duration<double, std::milli>(steady::now() - t0).count();
}

double max_abs_diff(const Mat4& a, const Mat4& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Largest |a_i - b_i| after descending sort of both (order-insensitive).
double eig_diff(Eigen::Vector4d a, Eigen::Vector4d b) {
    std::sort(a.data(), a.data() + 4, std::greater<double>());
    std::sort(b.data(), b.data() + 4, std::greater<double>());
    return (a - b).cwiseAbs().maxCoeff();
}

struct MeasureRow {
    double s, p, c, t, e;
};

MeasureRow measures_of(const DensityMatrix& rho) {
    const auto [c, work] = concurrence(rho);
    (void)work;
    return {von_neumann_entropy(rho).value, linear_entropy(rho).value, c.value,
            tangle(c).value, entanglement_of_formation(c).value};
}

MeasureRow errors_of(const DensityMatrix& rho, const Vector16& s, double n_total) {
    const auto& set = standard_tomography_set();
    const auto [c, work] = concurrence(rho);
    (void)c;
    const ErrorBudget budget = lambda_variances(s, n_total, set);
    const MeasureErrors e = propagate_measure_errors(rho, work, budget, set);
    return {e.entropy, e.linear_entropy, e.concurrence, e.tangle, e.eof};
}

void check_measure_windows(Criterion& c, const MeasureRow& m, const char* tag, bool informational) {
    struct Window {
        const char* name;
        double value, center, tol;
    };
    const Window rows[5] = {{"entropy S", m.s, golden::kEntropy, 0.01},
                            {"linear entropy P", m.p, golden::kLinearEntropy, 0.005},
                            {"concurrence C", m.c, golden::kConcurrence, 0.01},
                            {"tangle T", m.t, golden::kTangle, 0.02},
                            {"formation E", m.e, golden::kEof, 0.015}};
    for (const auto& r : rows) {
        const bool ok = std::abs(r.value - r.center) <= r.tol;
        const std::string text = std::string(tag) + " " + r.name + " = " +
                                 fmt("%.4f vs %.3f +/- %.3f", r.value, r.center, r.tol);
        if (informational)
            c.info(text + (ok ? "  (inside)" : "  (outside)"));
        else
            c.sub(ok, text);
    }
}

void check_error_windows(Criterion& c, const MeasureRow& e, const char* tag, bool informational) {
    struct Window {
        const char* name;
        double value, center;
    };
    const Window rows[5] = {{"dS", e.s, golden::kEntropyErr},
                            {"dP", e.p, golden::kLinearEntropyErr},
                            {"dC", e.c, golden::kConcurrenceErr},
                            {"dT", e.t, golden::kTangleErr},
                            {"dE", e.e, golden::kEofErr}};
    for (const auto& r : rows) {
        const bool ok = std::abs(r.value - r.center) <= 0.25 * r.center;
        const std::string text = std::string(tag) + " " + r.name + " = " +
                                 fmt("%.4f vs %.3f (ratio %.3f, gate 25%%)", r.value, r.center,
                                     r.value / r.center);
        if (informational)
            c.info(text + (ok ? "  (inside)" : "  (outside)"));
        else
            c.sub(ok, text);
    }
}

} // namespace

// --- criterion 1: linear inversion ------------------------------------------

static void criterion_linear(const Vector16& counts) {
    Criterion c("linear inversion reproduces the quoted matrix");
    const auto& set = standard_tomography_set();  // warm the cached design

    DensityMatrix rho = linear_reconstruct(counts, set);
    double best_ms = 1e300;
    for (int rep = 0; rep < 5; ++rep) {
        const auto t0 = steady::now();
        rho = linear_reconstruct(counts, set);
        best_ms = std::min(best_ms, ms_since(t0));
    }

    const double d_elem = max_abs_diff(Mat4(rho.matrix()), golden::linear_rho());
    c.sub(d_elem <= 1e-3, fmt("max element deviation %.2e (tol 1e-3)", d_elem));

    const double d_eig = eig_diff(rho.physicality().eigenvalues, golden::linear_eigenvalues());
    c.sub(d_eig <= 1e-4, fmt("max eigenvalue deviation %.2e (tol 1e-4)", d_eig));

    const double d_pur = std::abs(rho.purity() - golden::kLinearPurity);
    c.sub(d_pur <= 1e-3, fmt("purity %.6f vs %.6f (tol 1e-3)", rho.purity(), golden::kLinearPurity));

    c.sub(best_ms < 10.0, fmt("runtime %.3f ms (limit 10 ms)", best_ms));
    c.report(1);
}

// --- criterion 2: constrained fit -------------------------------------------

static MleResult criterion_mle(const Vector16& counts) {
    Criterion c("constrained fit reproduces the quoted matrix");

    const auto t0 = steady::now();
    const MleResult fit = mle_reconstruct(counts);
    const double elapsed_ms = ms_since(t0);

    const double d_elem = max_abs_diff(Mat4(fit.rho.matrix()), golden::mle_rho());
    c.sub(d_elem <= 2e-2, fmt("max element deviation %.4e (tol 2e-2)", d_elem));

    const double d_eig = eig_diff(fit.rho.physicality().eigenvalues, golden::mle_eigenvalues());
    c.sub(d_eig <= 5e-3, fmt("max eigenvalue deviation %.2e (tol 5e-3)", d_eig));

    const double d_pur = std::abs(fit.rho.purity() - golden::kMlePurity);
    c.sub(d_pur <= 5e-3,
          fmt("purity %.6f vs %.6f (tol 5e-3)", fit.rho.purity(), golden::kMlePurity));

    const double min_eig = fit.rho.physicality().min_eigenvalue;
    c.sub(min_eig >= -1e-10, fmt("min eigenvalue %.2e (floor -1e-10)", min_eig));

    c.sub(elapsed_ms < 5000.0, fmt("runtime %.1f ms (limit 5000 ms)", elapsed_ms));
    c.sub(fit.converged, "optimizer reports convergence");

    const auto& set = standard_tomography_set();
    const double obj_quoted =
        likelihood(rho_to_t_regularized(DensityMatrix(Mat(golden::mle_rho()), 1e-3)), counts, set);
    c.info(fmt("fit objective %.4f; the quoted matrix scores %.4f on the same objective",
               fit.objective, obj_quoted));
    c.info("a strictly lower objective at a different state means the quoted fit is "
           "under-converged; the element/eigenvalue/purity gaps above follow from that");
    c.report(2);
    return fit;
}

// --- criterion 3: measures --------------------------------------------------

static void criterion_measures(const MleResult& fit) {
    Criterion c("measures on the fitted state inside the quoted windows");
    check_measure_windows(c, measures_of(fit.rho), "fit", false);
    check_measure_windows(c, measures_of(golden::mle_reference_state()), "quoted-matrix", true);
    c.info("the quoted-matrix rows show the measure machinery reproduces all quoted "
           "values once the quoted state itself is used");
    c.report(3);
}

// --- criterion 4: error bars --------------------------------------------------

static void criterion_error_bars(const MleResult& fit, const Vector16& counts) {
    Criterion c("propagated error bars within 25% of the quoted values");
    const auto& set = standard_tomography_set();
    const double n_total = total_flux(counts);

    // Both probability paths must land inside the gate.
    const Vector16 s_fit = s_parameters(fit.rho, set);
    check_error_windows(c, errors_of(fit.rho, s_fit, n_total), "fit-probabilities", false);
    const Vector16 s_raw = s_parameters(counts);
    check_error_windows(c, errors_of(fit.rho, s_raw, n_total), "count-fractions", false);

    check_error_windows(c, errors_of(golden::mle_reference_state(),
                                     s_parameters(golden::mle_reference_state(), set), n_total),
                        "quoted-matrix", true);
    c.report(4);
}

// --- criterion 5: property suite ----------------------------------------------

static void criterion_properties(const MleResult& fit) {
    Criterion c("property suite");
    const auto t_suite = steady::now();
    const auto& set = standard_tomography_set();
    const auto& gamma = gamma_basis();

    // (a) dual-operator identities for the standard design.
    {
        double worst = 0.0;
        for (int mu = 0; mu < 16; ++mu)
            for (int nu = 0; nu < 16; ++nu) {
                const cplx v = set.states[mu].adjoint() * set.m[nu] * set.states[mu];
                worst = std::max(worst, std::abs(v - cplx(mu == nu ? 1.0 : 0.0, 0.0)));
            }
        for (int k = 0; k < 4; ++k)
            for (int l = 0; l < 4; ++l) {
                Mat4 acc = Mat4::Zero();
                for (int nu = 0; nu < 16; ++nu)
                    acc += set.m[nu] *
                           (std::conj(set.states[nu](k)) * set.states[nu](l));
                Mat4 unit = Mat4::Zero();
                unit(k, l) = 1.0;
                worst = std::max(worst, (acc - unit).cwiseAbs().maxCoeff());
            }
        Mat4 tr_sum = Mat4::Zero(), plain_sum = Mat4::Zero();
        for (int nu = 0; nu < 16; ++nu) {
            tr_sum += set.m[nu].trace() *
                      Mat4(set.states[nu] * set.states[nu].adjoint());
            plain_sum += set.m[nu];
        }
        worst = std::max(worst, (tr_sum - Mat4::Identity()).cwiseAbs().maxCoeff());
        worst = std::max(worst, (plain_sum - Mat4::Identity()).cwiseAbs().maxCoeff());
        c.sub(worst <= 1e-10, fmt("dual-operator identities, worst residual %.2e (tol 1e-10)", worst));
    }

    // (b) operator-basis orthonormality and completeness.
    {
        double worst = 0.0;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) {
                const cplx tr = (gamma[i] * gamma[j]).trace();
                worst = std::max(worst, std::abs(tr - cplx(i == j ? 1.0 : 0.0, 0.0)));
            }
        auto rng = testutil::make_rng(501);
        for (int trial = 0; trial < 20; ++trial) {
            const Mat a = testutil::random_complex(rng, 4);
            Mat4 rebuilt = Mat4::Zero();
            for (int i = 0; i < 16; ++i) rebuilt += gamma[i] * (gamma[i] * Mat4(a)).trace();
            worst = std::max(worst, (rebuilt - Mat4(a)).cwiseAbs().maxCoeff());
        }
        c.sub(worst <= 1e-10, fmt("operator basis orthonormal/complete, worst %.2e (tol 1e-10)", worst));
    }

    // (c) 500 noiseless round trips through both reconstruction paths.
    {
        auto rng = testutil::make_rng(502);
        double worst_linear = 0.0, worst_mle = 0.0;
        for (int trial = 0; trial < 500; ++trial) {
            const DensityMatrix truth = testutil::random_density(rng, 4);
            const Vector16 counts = expected_counts(truth.matrix(), set, 1e5);
            const DensityMatrix lin = linear_reconstruct(counts, set);
            worst_linear =
                std::max(worst_linear, (lin.matrix() - truth.matrix()).cwiseAbs().maxCoeff());
            const MleResult m = mle_reconstruct(counts, set);
            worst_mle =
                std::max(worst_mle, (m.rho.matrix() - truth.matrix()).cwiseAbs().maxCoeff());
        }
        c.sub(worst_linear <= 1e-10,
              fmt("500 noiseless linear round trips, worst %.2e (tol 1e-10)", worst_linear));
        c.sub(worst_mle <= 1e-6,
              fmt("500 noiseless fit round trips, worst %.2e (tol 1e-6)", worst_mle));
    }

    // (d) analytic gradients against finite differences.
    {
        auto rho_of_s = [&](const Vector16& sv) {
            Mat4 m = Mat4::Zero();
            for (int mu = 0; mu < 16; ++mu) m += set.m[mu] * sv(mu);
            return m;
        };
        auto rng = testutil::make_rng(503);
        const DensityMatrix rho_full(
            Mat(0.7 * testutil::random_density(rng, 4).matrix() + 0.075 * Mat::Identity(4, 4)));
        const Vector16 s = s_parameters(rho_full, set);
        const double eps = 1e-6;

        double worst_s = 0.0;
        {
            const Vector16 g = entropy_gradient(rho_full, set);
            for (int nu = 0; nu < 16; ++nu) {
                Vector16 up = s, dn = s;
                up(nu) += eps;
                dn(nu) -= eps;
                auto ent = [&](const Vector16& sv) {
                    const auto eig = hermitian_eig(Mat(rho_of_s(sv)));
                    double total = 0.0;
                    for (int a = 0; a < 4; ++a)
                        if (eig.values(a) > 0.0)
                            total -= eig.values(a) * std::log2(eig.values(a));
                    return total;
                };
                worst_s = std::max(worst_s, std::abs(g(nu) - (ent(up) - ent(dn)) / (2 * eps)));
            }
        }
        c.sub(worst_s <= 1e-4, fmt("entropy gradient vs finite differences, worst %.2e (tol 1e-4)",
                                   worst_s));

        double worst_p = 0.0;
        {
            const ErrorBudget budget = lambda_variances(s, 1e4, set);
            const Vector16 g = linear_entropy_gradient(budget, set);
            auto pval = [&](const Vector16& sv) {
                const Mat4 r = rho_of_s(sv);
                return 4.0 / 3.0 * (1.0 - (r * r).trace().real());
            };
            for (int nu = 0; nu < 16; ++nu) {
                Vector16 up = s, dn = s;
                up(nu) += eps;
                dn(nu) -= eps;
                worst_p = std::max(worst_p, std::abs(g(nu) - (pval(up) - pval(dn)) / (2 * eps)));
            }
        }
        c.sub(worst_p <= 1e-6,
              fmt("linear-entropy gradient vs finite differences, worst %.2e (tol 1e-6)", worst_p));

        double worst_c = 0.0;
        {
            Vec4 bell = Vec4::Zero();
            bell(kBasisHH) = 1.0 / std::sqrt(2.0);
            bell(kBasisVV) = 1.0 / std::sqrt(2.0);
            Mat diag = Mat::Zero(4, 4);
            diag(0, 0) = 0.4;
            diag(1, 1) = 0.3;
            diag(2, 2) = 0.2;
            diag(3, 3) = 0.1;
            const DensityMatrix rho_ent(
                Mat(0.6 * (bell * bell.adjoint()) + 0.4 * diag));
            const auto [cv, work] = concurrence(rho_ent);
            (void)cv;
            const Vector16 se = s_parameters(rho_ent, set);
            const Vector16 ga = concurrence_gradient_analytic(rho_ent, work, set);
            const Vector16 gf = concurrence_gradient_fd(se, set, 1e-5);
            worst_c = (ga - gf).cwiseAbs().maxCoeff();
        }
        c.sub(worst_c <= 1e-3,
              fmt("concurrence gradient analytic vs finite differences, worst %.2e (tol 1e-3)",
                  worst_c));

        double worst_w = 0.0;
        {
            auto rng2 = testutil::make_rng(504);
            std::uniform_real_distribution<double> angle(-1.5, 1.5);
            for (int trial = 0; trial < 20; ++trial) {
                WaveplateSetting w;
                w.h1 = angle(rng2);
                w.q1 = angle(rng2);
                w.h2 = angle(rng2);
                w.q2 = angle(rng2);
                const auto derivs = two_photon_state_derivs(w);
                double* fields[4] = {&w.h1, &w.q1, &w.h2, &w.q2};
                for (int axis = 0; axis < 4; ++axis) {
                    const double saved = *fields[axis];
                    *fields[axis] = saved + eps;
                    const Vec4 up = two_photon_state(w);
                    *fields[axis] = saved - eps;
                    const Vec4 dn = two_photon_state(w);
                    *fields[axis] = saved;
                    worst_w = std::max(
                        worst_w, (derivs[axis] - (up - dn) / (2 * eps)).cwiseAbs().maxCoeff());
                }
            }
        }
        c.sub(worst_w <= 1e-6,
              fmt("projection-state angle derivatives vs finite differences, worst %.2e (tol 1e-6)",
                  worst_w));
    }

    // (e) Monte Carlo validation of the variance model at the fitted state.
    {
        const McValidation mc =
            mc_validate_lambda(fit.rho, 1e4, deg2rad(0.25), 10000, 2026, set);
        c.sub(mc.worst_relative_deviation < 0.15,
              fmt("monte carlo (10^4 trials): worst Var/Lambda deviation %.3f (gate 0.15)",
                  mc.worst_relative_deviation));
    }

    const double suite_s = ms_since(t_suite) / 1000.0;
    c.sub(suite_s < 300.0, fmt("property-suite runtime %.1f s (limit 300 s)", suite_s));
    c.report(5);
}

// --- criterion 6: positivity stress -------------------------------------------

static void criterion_positivity() {
    Criterion c("positivity stress on the fit parametrization");
    auto rng = testutil::make_rng(601);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        TParams t;
        for (int k = 0; k < 16; ++k) t(k) = testutil::gauss(rng);
        const DensityMatrix rho = t_to_rho(t);
        worst = std::min(worst, rho.physicality().min_eigenvalue);
    }
    c.sub(worst >= -1e-12,
          fmt("10^4 random parameter vectors, smallest eigenvalue %.2e (floor -1e-12)", worst));
    c.report(6);
}

int main() {
    const Vector16 counts = golden::counts();
    std::printf("acceptance gate: bundled reference dataset, 16 projections, N = %.0f\n\n",
                total_flux(counts));

    criterion_linear(counts);
    const MleResult fit = criterion_mle(counts);
    criterion_measures(fit);
    criterion_error_bars(fit, counts);
    criterion_properties(fit);
    criterion_positivity();

    std::printf("\nacceptance gate: %d of 6 criteria passed%s\n", 6 - g_failed,
                g_failed ? " (see FAIL lines above)" : "");
    return g_failed;
}
