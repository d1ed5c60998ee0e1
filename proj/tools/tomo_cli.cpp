// tomo-kit: two-qubit state tomography from projection counts.
//
//   tomo-kit reconstruct counts.csv            density matrix, measures, errors
//   tomo-kit simulate --state bell             synthetic counts for a named state
//   tomo-kit validate counts.csv               Monte Carlo check of the error model
//
// Exit status: 0 on success (fit warnings included), 1 on any error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tomo/tomo.hpp"

namespace {

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream os;
        os << std::cin.rdbuf();
        return os.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw tomo::error(tomo::errc::parse_error, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw tomo::error(tomo::errc::parse_error, "cannot open '" + path + "' for writing");
    out << text;
}

// Named source states for the simulator.
tomo::DensityMatrix named_state(const std::string& name) {
    using namespace tomo;
    auto pure = [](const Vec& psi) { return DensityMatrix(Mat(psi * psi.adjoint())); };

    Vec h2 = Vec::Zero(4), v2 = Vec::Zero(4), hv = Vec::Zero(4), vh = Vec::Zero(4);
    h2(kBasisHH) = 1.0;
    v2(kBasisVV) = 1.0;
    hv(kBasisHV) = 1.0;
    vh(kBasisVH) = 1.0;

    if (name == "HH") return pure(h2);
    if (name == "HV") return pure(hv);
    if (name == "VH") return pure(vh);
    if (name == "VV") return pure(v2);
    if (name == "bell") {
        Vec b = (h2 + v2) / std::sqrt(2.0);
        return pure(b);
    }
    if (name == "mixed") return DensityMatrix(Mat(Mat4::Identity() * 0.25));
    if (name.rfind("werner:", 0) == 0) {
        const double p = std::stod(name.substr(7));
        if (p < 0.0 || p > 1.0)
            throw error(errc::parse_error, "werner mixing parameter must lie in [0, 1]");
        Vec b = (h2 + v2) / std::sqrt(2.0);
        Mat rho = p * (b * b.adjoint()) + (1.0 - p) * 0.25 * Mat::Identity(4, 4);
        return DensityMatrix(rho);
    }
    throw error(errc::parse_error,
                "unknown state '" + name + "' (try HH, HV, VH, VV, bell, werner:0.9, mixed)");
}

nlohmann::json validation_json(const tomo::McValidation& mc, double delta_theta_deg,
                               bool exact_covariance) {
    nlohmann::json per_nu = nlohmann::json::array();
    const auto& settings = tomo::standard_settings();
    for (int nu = 0; nu < 16; ++nu)
        per_nu.push_back({{"nu", nu + 1},
                          {"label", settings[nu].label},
                          {"predicted_lambda", mc.predicted_lambda(nu)},
                          {"empirical_variance", mc.empirical_variance(nu)},
                          {"ratio", mc.ratio(nu)}});
    return {{"schema", "tomo-validate/1"},
            {"generator", {{"name", tomo::kToolName}, {"version", tomo::kToolVersion}}},
            {"trials", mc.trials},
            {"delta_theta_deg", delta_theta_deg},
            {"exact_covariance", exact_covariance},
            {"worst_relative_deviation", mc.worst_relative_deviation},
            {"projections", per_nu}};
}

std::string validation_text(const tomo::McValidation& mc, const tomo::CountDataset& data) {
    std::ostringstream os;
    os << "variance validation, " << mc.trials << " simulated runs\n";
    os << "  nu  label        predicted      empirical      ratio\n";
    char buf[128];
    for (int nu = 0; nu < 16; ++nu) {
        std::snprintf(buf, sizeof buf, "  %2d  %-8s  %12.4e   %12.4e   %8.4f\n", nu + 1,
                      data.settings[nu].label.c_str(), mc.predicted_lambda(nu),
                      mc.empirical_variance(nu), mc.ratio(nu));
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "worst relative deviation: %.4f\n",
                  mc.worst_relative_deviation);
    os << buf;
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-qubit state tomography from projection counts"};
    app.require_subcommand(1);

    // --- reconstruct ---------------------------------------------------------
    auto* rec = app.add_subcommand("reconstruct", "reconstruct a density matrix from counts");
    std::string rec_input = "-";
    std::string rec_output;
    std::string rec_format = "text";
    std::string rec_s_path = "mle";
    bool rec_linear_only = false, rec_exact_cov = false;
    double rec_dtheta_deg = 0.25;
    long rec_max_evals = 0;
    double rec_rel_tol = 0.0, rec_param_tol = 0.0;
    int rec_mc_trials = 0;
    std::uint64_t rec_seed = 1;
    rec->add_option("input", rec_input, "counts CSV file ('-' for stdin)");
    rec->add_option("-o,--output", rec_output, "write the report here instead of stdout");
    rec->add_option("--format", rec_format, "report format: text or json")
        ->check(CLI::IsMember({"text", "json"}));
    rec->add_flag("--linear-only", rec_linear_only, "skip the maximum-likelihood fit");
    rec->add_option("--s-path", rec_s_path,
                    "probabilities feeding the error model: mle (refitted) or linear (raw counts)")
        ->check(CLI::IsMember({"linear", "mle"}));
    rec->add_option("--delta-theta-deg", rec_dtheta_deg,
                    "RMS wave-plate setting error in degrees");
    rec->add_flag("--exact-covariance", rec_exact_cov,
                  "keep the higher-order count covariance term");
    rec->add_option("--max-evals", rec_max_evals, "optimizer evaluation budget");
    rec->add_option("--rel-tol", rec_rel_tol, "optimizer relative objective tolerance");
    rec->add_option("--param-tol", rec_param_tol, "optimizer parameter displacement tolerance");
    rec->add_option("--mc-validate", rec_mc_trials,
                    "append a Monte Carlo variance check with this many trials");
    rec->add_option("--seed", rec_seed, "random seed for --mc-validate");

    // --- simulate ------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "generate synthetic counts for a known state");
    std::string sim_state = "bell";
    std::string sim_output;
    std::string sim_noise = "poisson";
    double sim_flux = 1e4, sim_dtheta_deg = 0.25;
    std::uint64_t sim_seed = 1;
    sim->add_option("--state", sim_state, "HH, HV, VH, VV, bell, werner:<p>, or mixed");
    sim->add_option("--flux", sim_flux, "expected counts summed over the four basis projections");
    sim->add_option("--noise", sim_noise, "noiseless, poisson, or poisson_plus_jitter")
        ->check(CLI::IsMember({"noiseless", "poisson", "poisson_plus_jitter"}));
    sim->add_option("--delta-theta-deg", sim_dtheta_deg,
                    "RMS wave-plate jitter in degrees (poisson_plus_jitter)");
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("-o,--output", sim_output, "write the counts CSV here instead of stdout");

    // --- validate ------------------------------------------------------------
    auto* val = app.add_subcommand(
        "validate", "fit a dataset, then Monte Carlo check the predicted variances against it");
    std::string val_input = "-";
    std::string val_output;
    std::string val_format = "text";
    int val_trials = 1000;
    std::uint64_t val_seed = 1;
    double val_dtheta_deg = 0.25;
    bool val_exact_cov = false;
    val->add_option("input", val_input, "counts CSV file ('-' for stdin)");
    val->add_option("-o,--output", val_output, "write the table here instead of stdout");
    val->add_option("--format", val_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    val->add_option("--trials", val_trials, "number of simulated tomography runs")
        ->check(CLI::PositiveNumber);
    val->add_option("--seed", val_seed, "random seed");
    val->add_option("--delta-theta-deg", val_dtheta_deg,
                    "RMS wave-plate setting error in degrees");
    val->add_flag("--exact-covariance", val_exact_cov,
                  "validate the higher-order covariance variant");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rec->parsed()) {
            const std::string raw = read_input(rec_input);
            const tomo::CountDataset data = tomo::parse_counts_csv(raw);

            tomo::AnalysisOptions opt;
            opt.linear_only = rec_linear_only;
            opt.s_path = (rec_s_path == "linear") ? tomo::SPath::linear : tomo::SPath::mle;
            opt.errors.delta_theta = tomo::deg2rad(rec_dtheta_deg);
            opt.errors.exact_covariance = rec_exact_cov;
            if (rec_max_evals > 0) opt.optimizer.max_evals = rec_max_evals;
            if (rec_rel_tol > 0) opt.optimizer.rel_tol = rec_rel_tol;
            if (rec_param_tol > 0) opt.optimizer.param_tol = rec_param_tol;

            tomo::AnalysisReport rep = tomo::analyze(data, opt);
            rep.input_hash = tomo::fnv1a64(raw);
            rep.hash_valid = true;

            std::string out =
                (rec_format == "json") ? tomo::emit_json(rep) : tomo::emit_text(rep);

            if (rec_mc_trials > 0) {
                const tomo::TomographySet set = data.custom_angles
                                                    ? tomo::build_tomography_set(data.settings)
                                                    : tomo::standard_tomography_set();
                const tomo::Mat truth_matrix =
                    rep.has_mle ? tomo::Mat(rep.mle.rho)
                                : tomo::Mat(tomo::mle_reconstruct(data.counts, set).rho.matrix());
                const tomo::DensityMatrix truth(truth_matrix);
                const auto mc = tomo::mc_validate_lambda(
                    truth, rep.n_total, opt.errors.delta_theta, rec_mc_trials, rec_seed, set,
                    rec_exact_cov);
                if (rec_format == "json") {
                    auto j = nlohmann::json::parse(out);
                    j["mc_validation"] = validation_json(mc, rec_dtheta_deg, rec_exact_cov);
                    out = j.dump(2) + "\n";
                } else {
                    out += "\n" + validation_text(mc, data);
                }
            }
            write_output(rec_output, out);
        } else if (sim->parsed()) {
            tomo::GeneratorConfig cfg{named_state(sim_state)};
            cfg.total_flux = sim_flux;
            cfg.delta_theta = tomo::deg2rad(sim_dtheta_deg);
            cfg.seed = sim_seed;
            if (sim_noise == "noiseless") cfg.noise_mode = tomo::NoiseMode::noiseless;
            else if (sim_noise == "poisson") cfg.noise_mode = tomo::NoiseMode::poisson;
            else cfg.noise_mode = tomo::NoiseMode::poisson_plus_jitter;

            tomo::CountDataset data;
            data.counts = tomo::generate_counts(cfg);
            data.settings = tomo::standard_settings();
            write_output(sim_output, tomo::emit_counts_csv(data));
        } else if (val->parsed()) {
            const std::string raw = read_input(val_input);
            const tomo::CountDataset data = tomo::parse_counts_csv(raw);
            const tomo::TomographySet set = data.custom_angles
                                                ? tomo::build_tomography_set(data.settings)
                                                : tomo::standard_tomography_set();
            const double flux = tomo::total_flux(data.counts);
            const tomo::MleResult fit = tomo::mle_reconstruct(data.counts, set, {});
            if (!fit.converged)
                std::cerr << "tomo-kit: warning: reference fit stopped at the evaluation cap\n";
            const auto mc =
                tomo::mc_validate_lambda(fit.rho, flux, tomo::deg2rad(val_dtheta_deg),
                                         val_trials, val_seed, set, val_exact_cov);
            write_output(val_output,
                         val_format == "json"
                             ? validation_json(mc, val_dtheta_deg, val_exact_cov).dump(2) + "\n"
                             : validation_text(mc, data));
        }
    } catch (const tomo::error& e) {
        std::cerr << "tomo-kit: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "tomo-kit: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
