#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tomo/density.hpp"
#include "tomo/error_analysis.hpp"
#include "tomo/measures.hpp"
#include "tomo/mle.hpp"
#include "tomo/tomography.hpp"
#include "tomo/types.hpp"
#include "tomo/version.hpp"
#include "tomo/waveplates.hpp"

namespace tomo {

// --- Counts file -------------------------------------------------------------
//
// CSV with header  nu,label,h1_deg,q1_deg,h2_deg,q2_deg,count
//  - nu and count are required; nu runs 1..16, each exactly once, any order;
//  - label is optional free text;
//  - the four angle columns are all-or-none: when absent, the standard
//    schedule's settings are assumed.

struct CountDataset {
    Vector16 counts = Vector16::Zero();
    std::array<WaveplateSetting, 16> settings;  // in nu order
    bool custom_angles = false;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace detail {

inline std::string_view trim(std::string_view v) {
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t' || v.front() == '\r')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == ' ' || v.back() == '\t' || v.back() == '\r')) v.remove_suffix(1);
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return fields;
}

inline double parse_number(std::string_view text, int row, const char* column) {
    const std::string_view t = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw error(errc::parse_error, "row " + std::to_string(row) + ", column '" + column +
                                           "': cannot parse '" + std::string(t) + "' as a number");
    return value;
}

} // namespace detail

// Parse a counts CSV. `row` in error messages counts data rows from 1 (the
// header is row 0).
inline CountDataset parse_counts_csv(std::string_view content) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= content.size(); ++i) {
        if (i == content.size() || content[i] == '\n') {
            const std::string_view line = detail::trim(content.substr(start, i - start));
            if (!line.empty() && line.front() != '#') lines.push_back(line);
            start = i + 1;
        }
    }
    if (lines.empty()) throw error(errc::parse_error, "empty counts file");

    // Header: map column names to field positions.
    const auto header = detail::split_csv_line(lines[0]);
    int col_nu = -1, col_label = -1, col_count = -1;
    int col_angle[4] = {-1, -1, -1, -1};
    static constexpr const char* kAngleNames[4] = {"h1_deg", "q1_deg", "h2_deg", "q2_deg"};
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        const std::string_view name = header[c];
        if (name == "nu") col_nu = c;
        else if (name == "label") col_label = c;
        else if (name == "count") col_count = c;
        else {
            bool known = false;
            for (int a = 0; a < 4; ++a)
                if (name == kAngleNames[a]) { col_angle[a] = c; known = true; }
            if (!known)
                throw error(errc::parse_error,
                            "header: unknown column '" + std::string(name) + "'");
        }
    }
    if (col_nu < 0) throw error(errc::parse_error, "header: missing column 'nu'");
    if (col_count < 0) throw error(errc::parse_error, "header: missing column 'count'");
    const int n_angle_cols = (col_angle[0] >= 0) + (col_angle[1] >= 0) + (col_angle[2] >= 0) +
                             (col_angle[3] >= 0);
    if (n_angle_cols != 0 && n_angle_cols != 4)
        throw error(errc::parse_error,
                    "header: the four angle columns h1_deg,q1_deg,h2_deg,q2_deg must be "
                    "given together or not at all");

    CountDataset out;
    out.custom_angles = (n_angle_cols == 4);
    const auto standard = standard_settings();
    out.settings = standard;

    bool seen[16] = {};
    for (int row = 1; row < static_cast<int>(lines.size()); ++row) {
        const auto fields = detail::split_csv_line(lines[row]);
        if (static_cast<int>(fields.size()) != static_cast<int>(header.size()))
            throw error(errc::parse_error,
                        "row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));

        const double nu_val = detail::parse_number(fields[col_nu], row, "nu");
        const int nu = static_cast<int>(nu_val);
        if (nu_val != nu || nu < 1 || nu > 16)
            throw error(errc::parse_error, "row " + std::to_string(row) +
                                               ", column 'nu': must be an integer in 1..16");
        if (seen[nu - 1])
            throw error(errc::parse_error,
                        "row " + std::to_string(row) + ": duplicate nu " + std::to_string(nu));
        seen[nu - 1] = true;

        const double count = detail::parse_number(fields[col_count], row, "count");
        if (count < 0.0)
            throw error(errc::parse_error, "row " + std::to_string(row) +
                                               ", column 'count': negative count " +
                                               std::to_string(count));
        out.counts(nu - 1) = count;

        if (out.custom_angles) {
            const double h1 = detail::parse_number(fields[col_angle[0]], row, kAngleNames[0]);
            const double q1 = detail::parse_number(fields[col_angle[1]], row, kAngleNames[1]);
            const double h2 = detail::parse_number(fields[col_angle[2]], row, kAngleNames[2]);
            const double q2 = detail::parse_number(fields[col_angle[3]], row, kAngleNames[3]);
            std::string label = (col_label >= 0) ? std::string(fields[col_label]) : std::string();
            out.settings[nu - 1] = WaveplateSetting::from_degrees(h1, q1, h2, q2, label);
        } else if (col_label >= 0 && !fields[col_label].empty()) {
            out.settings[nu - 1].label = std::string(fields[col_label]);
        }
    }

    for (int nu = 0; nu < 16; ++nu)
        if (!seen[nu])
            throw error(errc::parse_error, "missing nu " + std::to_string(nu + 1));
    return out;
}

inline std::string emit_counts_csv(const CountDataset& data) {
    std::ostringstream os;
    os << "nu,label,h1_deg,q1_deg,h2_deg,q2_deg,count\n";
    char buf[64];
    for (int nu = 0; nu < 16; ++nu) {
        const auto& w = data.settings[nu];
        os << (nu + 1) << ',' << w.label;
        for (double ang : {w.h1, w.q1, w.h2, w.q2}) {
            std::snprintf(buf, sizeof buf, "%.6g", rad2deg(ang));
            os << ',' << buf;
        }
        const double c = data.counts(nu);
        if (c == std::floor(c) && std::abs(c) < 1e15)
            os << ',' << static_cast<long long>(c);
        else {
            std::snprintf(buf, sizeof buf, "%.6g", c);
            os << ',' << buf;
        }
        os << '\n';
    }
    return os.str();
}

// --- Full analysis -----------------------------------------------------------

struct AnalysisOptions {
    bool linear_only = false;
    SPath s_path = SPath::mle;  // ignored when linear_only (forced to linear)
    ErrorOptions errors;
    OptimizerOptions optimizer;
};

struct EstimateBlock {
    Mat4 rho = Mat4::Zero();
    Eigen::Vector4d eigenvalues = Eigen::Vector4d::Zero();
    double purity = 0.0;
    double min_eigenvalue = 0.0;
    double trace_deviation = 0.0;
    bool physical = false;
};

struct MeasureEntry {
    double value = 0.0;
    double sigma = 0.0;
};

struct AnalysisReport {
    std::uint64_t input_hash = 0;
    bool hash_valid = false;
    double n_total = 0.0;
    bool custom_angles = false;

    bool linear_only = false;
    SPath s_path = SPath::mle;
    double delta_theta = 0.0;
    bool exact_covariance = false;

    EstimateBlock linear;
    bool has_mle = false;
    EstimateBlock mle;
    double mle_objective = 0.0;
    long mle_evals = 0;
    bool mle_converged = false;

    std::string measures_source = "none";  // "mle", "linear", or "none"
    bool has_measures = false;
    MeasureEntry entropy, linear_entropy, concurrence, tangle, eof;
    bool concurrence_fd_fallback = false;
    bool eof_fd_fallback = false;

    Vector16 s = Vector16::Zero();
    Vector16 lambda = Vector16::Zero();
    Eigen::Matrix4d rho_errors = Eigen::Matrix4d::Zero();

    std::vector<std::string> warnings;
    std::vector<std::string> notes;
    double linear_ms = 0.0;
    double mle_ms = 0.0;
};

namespace detail {

inline EstimateBlock estimate_block(const DensityMatrix& rho) {
    EstimateBlock b;
    b.rho = rho.matrix();
    const auto rep = rho.physicality();
    b.eigenvalues = rep.eigenvalues;
    b.min_eigenvalue = rep.min_eigenvalue;
    b.trace_deviation = rep.trace_deviation;
    b.physical = rep.physical;
    b.purity = rho.purity();
    return b;
}

} // namespace detail

// Run the full pipeline on a parsed dataset. Measure errors are propagated
// from the probability set selected by options.s_path; with linear_only the
// linear path is forced and measures are computed only if the inversion
// happens to be physical.
inline AnalysisReport analyze(const CountDataset& data, const AnalysisOptions& options = {}) {
    AnalysisReport rep;
    rep.linear_only = options.linear_only;
    rep.s_path = options.linear_only ? SPath::linear : options.s_path;
    rep.delta_theta = options.errors.delta_theta;
    rep.exact_covariance = options.errors.exact_covariance;
    rep.custom_angles = data.custom_angles;
    rep.n_total = total_flux(data.counts);

    const TomographySet local_set =
        data.custom_angles ? build_tomography_set(data.settings) : standard_tomography_set();
    const TomographySet& set = local_set;

    using clock = std::chrono::steady_clock;

    const auto t0 = clock::now();
    const DensityMatrix rho_linear = linear_reconstruct(data.counts, set);
    rep.linear = detail::estimate_block(rho_linear);
    rep.linear_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();

    std::optional<DensityMatrix> estimate;
    if (!options.linear_only) {
        const auto t1 = clock::now();
        const MleResult fit = mle_reconstruct(data.counts, set, options.optimizer);
        rep.mle_ms = std::chrono::duration<double, std::milli>(clock::now() - t1).count();
        rep.has_mle = true;
        rep.mle = detail::estimate_block(fit.rho);
        rep.mle_objective = fit.objective;
        rep.mle_evals = fit.n_evals;
        rep.mle_converged = fit.converged;
        if (!fit.converged)
            rep.warnings.push_back(
                "maximum-likelihood fit stopped at the evaluation cap before meeting its "
                "convergence tolerances; treat the fitted values with care");
        estimate = fit.rho;
        rep.measures_source = "mle";
    } else if (rep.linear.physical) {
        estimate = rho_linear;
        rep.measures_source = "linear";
    } else {
        rep.warnings.push_back(
            "linear inversion produced a non-physical matrix (negative eigenvalue); "
            "entanglement and purity measures are not reported for it");
    }

    // Error budget: probabilities from the chosen path, flux from the data.
    rep.s = (rep.s_path == SPath::mle && estimate)
                ? s_parameters(*estimate, set)
                : s_parameters(data.counts);
    const ErrorBudget budget = lambda_variances(rep.s, rep.n_total, set, options.errors);
    rep.lambda = budget.lambda;
    rep.rho_errors = rho_element_errors(budget, set);

    if (estimate) {
        rep.has_measures = true;
        const auto [c, work] = tomo::concurrence(*estimate);
        rep.entropy.value = von_neumann_entropy(*estimate).value;
        rep.linear_entropy.value = tomo::linear_entropy(*estimate).value;
        rep.concurrence.value = c.value;
        rep.tangle.value = tomo::tangle(c).value;
        rep.eof.value = entanglement_of_formation(c).value;

        const MeasureErrors err = propagate_measure_errors(*estimate, work, budget, set,
                                                           options.errors);
        rep.entropy.sigma = err.entropy;
        rep.linear_entropy.sigma = err.linear_entropy;
        rep.concurrence.sigma = err.concurrence;
        rep.tangle.sigma = err.tangle;
        rep.eof.sigma = err.eof;
        rep.concurrence_fd_fallback = err.concurrence_fd_fallback;
        rep.eof_fd_fallback = err.eof_fd_fallback;
    }

    rep.notes.push_back(
        "error bars cover count statistics and wave-plate angle uncertainty only, not "
        "bias of the likelihood estimator itself");
    return rep;
}

// --- Report emission ---------------------------------------------------------

namespace detail {

inline nlohmann::json complex_matrix_json(const Mat4& m) {
    nlohmann::json data = nlohmann::json::array();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            data.push_back({{"re", m(i, j).real()}, {"im", m(i, j).imag()}});
    return {{"dims", {4, 4}}, {"data", data}};
}

inline nlohmann::json real_matrix_json(const Eigen::Matrix4d& m) {
    nlohmann::json data = nlohmann::json::array();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) data.push_back(m(i, j));
    return {{"dims", {4, 4}}, {"data", data}};
}

inline nlohmann::json estimate_json(const EstimateBlock& b) {
    return {{"rho", complex_matrix_json(b.rho)},
            {"eigenvalues", {b.eigenvalues(0), b.eigenvalues(1), b.eigenvalues(2), b.eigenvalues(3)}},
            {"purity", b.purity},
            {"min_eigenvalue", b.min_eigenvalue},
            {"physical", b.physical}};
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace detail

inline std::string emit_json(const AnalysisReport& rep) {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["generator"] = {{"name", kToolName}, {"version", kToolVersion}};
    j["input"] = {{"n_total", rep.n_total}, {"custom_angles", rep.custom_angles}};
    if (rep.hash_valid) j["input"]["hash_fnv1a64"] = detail::hash_hex(rep.input_hash);
    j["options"] = {{"linear_only", rep.linear_only},
                    {"s_path", s_path_name(rep.s_path)},
                    {"delta_theta_deg", rad2deg(rep.delta_theta)},
                    {"exact_covariance", rep.exact_covariance}};
    j["linear"] = detail::estimate_json(rep.linear);
    if (rep.has_mle) {
        j["mle"] = detail::estimate_json(rep.mle);
        j["mle"]["objective"] = rep.mle_objective;
        j["mle"]["n_evals"] = rep.mle_evals;
        j["mle"]["converged"] = rep.mle_converged;
    }
    j["measures_source"] = rep.measures_source;
    if (rep.has_measures) {
        auto entry = [](const MeasureEntry& e) {
            return nlohmann::json{{"value", e.value}, {"sigma", e.sigma}};
        };
        j["measures"] = {{"entropy", entry(rep.entropy)},
                         {"linear_entropy", entry(rep.linear_entropy)},
                         {"concurrence", entry(rep.concurrence)},
                         {"tangle", entry(rep.tangle)},
                         {"entanglement_of_formation", entry(rep.eof)},
                         {"flags",
                          {{"concurrence_fd_fallback", rep.concurrence_fd_fallback},
                           {"eof_fd_fallback", rep.eof_fd_fallback}}}};
    }
    nlohmann::json lam = nlohmann::json::array(), sv = nlohmann::json::array();
    for (int nu = 0; nu < 16; ++nu) {
        lam.push_back(rep.lambda(nu));
        sv.push_back(rep.s(nu));
    }
    j["s"] = sv;
    j["lambda"] = lam;
    j["rho_errors"] = detail::real_matrix_json(rep.rho_errors);
    j["warnings"] = rep.warnings;
    j["notes"] = rep.notes;
    j["timing_ms"] = {{"linear", rep.linear_ms}, {"mle", rep.mle_ms}};
    return j.dump(2) + "\n";
}

namespace detail {

inline std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline void print_complex_matrix(std::ostringstream& os, const Mat4& m, const char* indent) {
    char buf[64];
    for (int i = 0; i < 4; ++i) {
        os << indent;
        for (int j = 0; j < 4; ++j) {
            std::snprintf(buf, sizeof buf, "%8.4f%+.4fi", m(i, j).real(), m(i, j).imag());
            os << buf << (j < 3 ? "  " : "");
        }
        os << '\n';
    }
}

} // namespace detail

inline std::string emit_text(const AnalysisReport& rep) {
    std::ostringstream os;
    os << kToolName << ' ' << kToolVersion << " report\n";
    os << "input: 16 projections, N = " << rep.n_total
       << (rep.custom_angles ? " (custom angles)" : " (standard schedule)");
    if (rep.hash_valid) os << ", hash " << detail::hash_hex(rep.input_hash);
    os << "\n\n";

    os << "linear inversion (" << detail::fmt4(rep.linear_ms) << " ms):\n";
    detail::print_complex_matrix(os, rep.linear.rho, "  ");
    os << "  eigenvalues:";
    for (int a = 0; a < 4; ++a) os << ' ' << detail::fmt4(rep.linear.eigenvalues(a));
    os << "\n  purity Tr[rho^2] = " << detail::fmt4(rep.linear.purity)
       << "   physical: " << (rep.linear.physical ? "yes" : "no") << "\n\n";

    if (rep.has_mle) {
        os << "maximum-likelihood fit (" << detail::fmt4(rep.mle_ms) << " ms, "
           << rep.mle_evals << " evaluations, "
           << (rep.mle_converged ? "converged" : "NOT converged") << "):\n";
        detail::print_complex_matrix(os, rep.mle.rho, "  ");
        os << "  eigenvalues:";
        for (int a = 0; a < 4; ++a) os << ' ' << detail::fmt4(rep.mle.eigenvalues(a));
        os << "\n  purity Tr[rho^2] = " << detail::fmt4(rep.mle.purity)
           << "   objective = " << detail::fmt4(rep.mle_objective) << "\n\n";
    }

    if (rep.has_measures) {
        os << "measures (on the " << rep.measures_source << " estimate, s-path "
           << s_path_name(rep.s_path) << "):\n";
        auto line = [&](const char* name, const MeasureEntry& e) {
            os << "  " << name << " = " << detail::fmt4(e.value) << " +/- "
               << detail::fmt4(e.sigma) << '\n';
        };
        line("von Neumann entropy  S", rep.entropy);
        line("linear entropy       P", rep.linear_entropy);
        line("concurrence          C", rep.concurrence);
        line("tangle               T", rep.tangle);
        line("entanglement of f.   E", rep.eof);
        if (rep.concurrence_fd_fallback)
            os << "  (concurrence error from finite differences: spin-flip spectrum "
                  "is rank deficient)\n";
        if (rep.eof_fd_fallback)
            os << "  (formation-entanglement error from finite differences: C ~ 1)\n";
        os << '\n';
    } else {
        os << "measures: not computed (" << rep.measures_source << ")\n\n";
    }

    os << "one-sigma element errors of the linear inversion:\n";
    for (int i = 0; i < 4; ++i) {
        os << "  ";
        for (int j = 0; j < 4; ++j)
            os << detail::fmt4(rep.rho_errors(i, j)) << (j < 3 ? "  " : "");
        os << '\n';
    }
    os << '\n';

    for (const auto& w : rep.warnings) os << "warning: " << w << '\n';
    for (const auto& n : rep.notes) os << "note: " << n << '\n';
    return os.str();
}

} // namespace tomo
