// Command-line front end: loads a JSON experiment config, dispatches to the
// experiment runners, and writes CSV results plus a manifest with checksums.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "krr/config.hpp"
#include "krr/conjugate.hpp"
#include "krr/csv.hpp"
#include "krr/empirical.hpp"
#include "krr/errors.hpp"
#include "krr/experiments.hpp"
#include "krr/solver.hpp"

namespace {

using krr::ExperimentConfig;
using krr::format_double;

struct CommonFlags {
    std::string config_path;
    std::string out_override;
    std::optional<std::uint64_t> seed_override;
    std::int64_t threads = 0;
};

ExperimentConfig load_with_overrides(const CommonFlags& flags) {
    ExperimentConfig cfg = krr::load_config(flags.config_path);
    if (flags.seed_override) cfg.seed = *flags.seed_override;
    if (!flags.out_override.empty()) cfg.out_dir = flags.out_override;
    if (flags.threads > 0) cfg.threads = flags.threads;
    if (cfg.out_dir.empty()) cfg.out_dir = ".";
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

void emit(const ExperimentConfig& cfg, const std::string& name, const std::string& body,
          std::vector<std::string>& files) {
    krr::write_text_file(cfg.out_dir + "/" + name, body);
    files.push_back(name);
}

void finish(const ExperimentConfig& cfg, std::vector<std::string> files,
            nlohmann::json extra = {}) {
    krr::RunManifest manifest;
    manifest.config_echo = krr::config_echo(cfg);
    manifest.seed = cfg.seed;
    manifest.outputs = std::move(files);
    manifest.extra = std::move(extra);
    krr::write_manifest(cfg.out_dir, std::move(manifest));
}

std::string curve_csv(const std::vector<krr::CurvePoint>& curve, bool with_arm) {
    std::ostringstream os;
    os << "N,d,lambda,k_used,err_median,err_q25,err_q75,r_star,ratio";
    if (with_arm) os << ",arm";
    os << "\n";
    for (const auto& p : curve) {
        os << p.N << ',' << p.d << ',' << format_double(p.lambda) << ',' << p.k_used << ','
           << format_double(p.err_median) << ',' << format_double(p.err_q25) << ','
           << format_double(p.err_q75) << ',' << format_double(p.r_star) << ','
           << format_double(p.ratio);
        if (with_arm) {
            double arm = 0.0;
            for (const auto& [key, value] : p.aux)
                if (key == "arm") arm = value;
            os << ',' << static_cast<int>(arm);
        }
        os << "\n";
    }
    return os.str();
}

std::string trials_csv(const std::vector<krr::CurvePoint>& curve) {
    std::ostringstream os;
    os << "N,d,arm,trial,error\n";
    for (const auto& p : curve) {
        double arm = 0.0;
        for (const auto& [key, value] : p.aux)
            if (key == "arm") arm = value;
        for (std::size_t t = 0; t < p.trial_errors.size(); ++t)
            os << p.N << ',' << p.d << ',' << static_cast<int>(arm) << ',' << t << ','
               << format_double(p.trial_errors[t]) << "\n";
    }
    return os.str();
}

int run_rate(const CommonFlags& flags) {
    ExperimentConfig cfg = load_with_overrides(flags);
    if (!cfg.spectrum) throw krr::ValidationError("rate: config needs 'spectrum'");
    if (cfg.rate_N < 1) throw krr::ValidationError("rate: config needs 'N' >= 1");
    std::vector<double> coeffs;
    if (cfg.target) {
        Eigen::VectorXd c = krr::target_coefficients(*cfg.target, *cfg.spectrum);
        coeffs.assign(c.data(), c.data() + c.size());
    }
    krr::RateReport report;
    if (cfg.rate_k) {
        report = krr::rate_report(*cfg.spectrum, coeffs, cfg.rate_sigma_xi, cfg.rate_N,
                                  cfg.rate_lambda, *cfg.rate_k, cfg.rate_config);
    } else {
        auto [k, rep] = krr::optimal_k(*cfg.spectrum, coeffs, cfg.rate_sigma_xi, cfg.rate_N,
                                       cfg.rate_lambda, cfg.rate_config);
        report = rep;
    }
    std::cout << report.to_json().dump(2) << "\n";
    std::vector<std::string> files;
    emit(cfg, "rate.csv",
         krr::RateReport::csv_header() + "\n" + report.csv_row(cfg.rate_N, cfg.rate_sigma_xi) +
             "\n",
         files);
    finish(cfg, std::move(files));
    return 0;
}

int run_spectrum(const CommonFlags& flags) {
    ExperimentConfig cfg = load_with_overrides(flags);
    if (!cfg.kernel) throw krr::ValidationError("spectrum: config needs 'kernel'");
    const bool sphere_design =
        cfg.design && std::holds_alternative<krr::UniformSphere>(cfg.design->v);
    krr::SpectrumModel analytic = [&]() {
        if (auto* p = std::get_if<krr::InnerProductPoly>(&cfg.kernel->v)) {
            if (sphere_design) {
                // harmonic multiplicities on the sphere; eigenvalues are the
                // alpha_l / d^l proxy for the order-d^{-l} decay
                if (!krr::sphere_regime_ok(p->d, static_cast<std::int64_t>(p->coeffs.size()) - 1))
                    std::cerr << "warning: sphere plateau proxy outside its regime "
                                 "(L * L! exceeds d)\n";
                return krr::sphere_plateau_spectrum(p->coeffs, p->d);
            }
            return krr::poly_plateau_spectrum(p->coeffs, p->d);
        }
        if (auto* c = std::get_if<krr::Conjugate>(&cfg.kernel->v))
            return krr::conjugate_spectrum(c->weights, c->activation,
                                           krr::ConjugateMethod::Quadrature)
                .spectrum;
        return std::get<krr::LinearCov>(cfg.kernel->v).spectrum;
    }();
    std::cout << analytic.to_json().dump(2) << "\n";

    std::vector<std::string> files;
    if (cfg.spectrum_oracle) {
        if (!cfg.design) throw krr::ValidationError("spectrum --oracle needs a design");
        krr::EmpiricalSpectrum emp = krr::empirical_integral_operator(
            *cfg.kernel, *cfg.design, cfg.oracle_samples, cfg.seed);
        std::ostringstream os;
        os << "index,analytic,empirical\n";
        for (Eigen::Index j = 0; j < emp.eigenvalues.size(); ++j)
            os << (j + 1) << ',' << format_double(analytic.eigenvalue(j + 1)) << ','
               << format_double(emp.eigenvalues[j]) << "\n";
        emit(cfg, "spectrum_oracle.csv", os.str(), files);
        std::cout << "analytic vs Monte Carlo (" << cfg.oracle_samples << " samples"
                  << (emp.undersampled ? ", undersampled" : "") << "):\n";
        for (Eigen::Index j = 0; j < std::min<Eigen::Index>(emp.eigenvalues.size(), 20); ++j)
            std::cout << "  " << (j + 1) << "  " << analytic.eigenvalue(j + 1) << "  "
                      << emp.eigenvalues[j] << "\n";
    } else {
        emit(cfg, "spectrum.json", analytic.to_json().dump(2) + "\n", files);
    }
    finish(cfg, std::move(files));
    return 0;
}

Eigen::MatrixXd load_matrix(const std::string& path) {
    // CSV of numeric rows, or raw binary: int64 rows, int64 cols, row-major doubles
    if (path.size() > 4 && path.substr(path.size() - 4) == ".bin") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw krr::ValidationError("cannot open " + path);
        std::int64_t rows = 0, cols = 0;
        in.read(reinterpret_cast<char*>(&rows), sizeof rows);
        in.read(reinterpret_cast<char*>(&cols), sizeof cols);
        if (!in || rows < 1 || cols < 1) throw krr::ValidationError("bad binary matrix header");
        Eigen::MatrixXd m(rows, cols);
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < cols; ++j) {
                double v;
                in.read(reinterpret_cast<char*>(&v), sizeof v);
                if (!in) throw krr::ValidationError("truncated binary matrix");
                m(i, j) = v;
            }
        return m;
    }
    std::ifstream in(path);
    if (!in) throw krr::ValidationError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows[0].size())
            throw krr::ValidationError("ragged CSV matrix in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw krr::ValidationError("empty matrix file " + path);
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

int run_fit(const CommonFlags& flags) {
    ExperimentConfig cfg = load_with_overrides(flags);
    if (!cfg.kernel) throw krr::ValidationError("fit: config needs 'kernel'");
    Eigen::MatrixXd X;
    if (cfg.design_file) {
        X = load_matrix(*cfg.design_file);
    } else if (cfg.design && cfg.rate_N >= 1) {
        X = krr::sample_design(*cfg.design, cfg.rate_N, cfg.seed);
    } else {
        throw krr::ValidationError("fit: provide 'design_file' or 'design' plus 'N'");
    }
    Eigen::VectorXd y;
    if (cfg.response_file) {
        Eigen::MatrixXd ym = load_matrix(*cfg.response_file);
        if (ym.cols() != 1) throw krr::ValidationError("fit: response file must have one column");
        y = ym.col(0);
    } else if (cfg.target) {
        y = krr::eval_target(*cfg.target, *cfg.kernel, X) +
            krr::sample_noise(cfg.noise, X.rows(), cfg.seed);
    } else {
        throw krr::ValidationError("fit: provide 'response_file' or 'target'");
    }
    if (y.size() != X.rows()) throw krr::ValidationError("fit: design/response size mismatch");

    krr::FitResult f = krr::fit(krr::gram(*cfg.kernel, X), y, cfg.fit_lambda);
    std::vector<std::string> files;
    {
        std::ostringstream os;
        os << "alpha\n";
        for (Eigen::Index i = 0; i < f.alpha.size(); ++i)
            os << format_double(f.alpha[i]) << "\n";
        emit(cfg, "alpha.csv", os.str(), files);
    }
    nlohmann::json extra = {{"residual_norm", f.residual_norm},
                            {"gram_condition", f.gram_condition},
                            {"lambda", f.lambda}};
    std::cout << extra.dump(2) << "\n";
    finish(cfg, std::move(files), extra);
    return 0;
}

int run_experiment(const std::string& name, const CommonFlags& flags) {
    ExperimentConfig cfg = load_with_overrides(flags);
    std::vector<std::string> files;
    if (cfg.dump_designs && cfg.design && !cfg.sweep.Ns.empty()) {
        // audit dump of the first trial's design
        Eigen::MatrixXd X = krr::sample_design(*cfg.design, cfg.sweep.Ns.front(), cfg.seed,
                                               static_cast<std::uint64_t>(cfg.trial_offset));
        std::ofstream out(cfg.out_dir + "/design_trial0.bin", std::ios::binary);
        std::int64_t rows = X.rows(), cols = X.cols();
        out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
        out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < cols; ++j) {
                double v = X(i, j);
                out.write(reinterpret_cast<const char*>(&v), sizeof v);
            }
        files.push_back("design_trial0.bin");
    }

    if (name == "md") {
        auto curve = krr::run_multiple_descent(cfg);
        emit(cfg, "md.csv", curve_csv(curve, false), files);
        emit(cfg, "md_trials.csv", trials_csv(curve), files);
        finish(cfg, std::move(files));
        return 0;
    }
    if (name == "linearize") {
        auto points = krr::run_linearization(cfg);
        std::ostringstream os;
        os << "d,N,sigma_min_med,sigma_max_med,cond_med,h1,ratio_min,ratio_max\n";
        for (const auto& p : points)
            os << p.d << ',' << p.N << ',' << format_double(p.sigma_min_med) << ','
               << format_double(p.sigma_max_med) << ',' << format_double(p.cond_med) << ','
               << format_double(p.h1) << ',' << format_double(p.ratio_min) << ','
               << format_double(p.ratio_max) << "\n";
        emit(cfg, "linearize.csv", os.str(), files);
        finish(cfg, std::move(files));
        return 0;
    }
    if (name == "diagconc") {
        auto points = krr::run_diag_concentration(cfg);
        std::ostringstream os;
        os << "d,N,stat_med,stat_q25,stat_q75,reference\n";
        for (const auto& p : points)
            os << p.d << ',' << p.N << ',' << format_double(p.stat_med) << ','
               << format_double(p.stat_q25) << ',' << format_double(p.stat_q75) << ','
               << format_double(p.reference) << "\n";
        emit(cfg, "diagconc.csv", os.str(), files);
        finish(cfg, std::move(files));
        return 0;
    }
    if (name == "geq") {
        auto curve = krr::run_gaussian_equivalence(cfg);
        emit(cfg, "geq.csv", curve_csv(curve, true), files);
        emit(cfg, "geq_trials.csv", trials_csv(curve), files);
        finish(cfg, std::move(files));
        return 0;
    }
    if (name == "smooth") {
        auto result = krr::run_smooth_rate(cfg);
        std::ostringstream os;
        os << "N,k,lambda,r_star\n";
        for (const auto& p : result.points)
            os << p.N << ',' << p.k << ',' << format_double(p.lambda) << ','
               << format_double(p.r_star) << "\n";
        emit(cfg, "smooth_points.csv", os.str(), files);
        std::ostringstream fit;
        fit << "slope,intercept,degenerate\n"
            << format_double(result.slope) << ',' << format_double(result.intercept) << ','
            << (result.degenerate ? 1 : 0) << "\n";
        emit(cfg, "smooth_fit.csv", fit.str(), files);
        std::cout << "slope " << result.slope << " intercept " << result.intercept
                  << (result.degenerate ? " (degenerate)" : "") << "\n";
        finish(cfg, std::move(files));
        return 0;
    }
    if (name == "conjugate") {
        auto report = krr::run_conjugate(cfg);
        std::ostringstream os;
        os << "m,n2,alignment,delta,sigma_l2,top_eigenvalue,err_median,err_q25,err_q75,"
              "rate_terms,approx_term,r_star\n";
        os << report.m << ',' << report.n2 << ',' << format_double(report.alignment) << ','
           << format_double(report.delta) << ',' << format_double(report.sigma_l2) << ','
           << format_double(report.top_eigenvalue) << ',' << format_double(report.err_median)
           << ',' << format_double(report.err_q25) << ',' << format_double(report.err_q75) << ','
           << format_double(report.rate_terms) << ',' << format_double(report.approx_term) << ','
           << format_double(report.r_star) << "\n";
        emit(cfg, "conjugate.csv", os.str(), files);
        finish(cfg, std::move(files));
        return 0;
    }
    throw krr::ValidationError("unknown experiment subcommand '" + name + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel ridge regression rate and experiment toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::vector<std::string> names = {"rate", "spectrum", "fit",    "md",       "linearize",
                                      "diagconc", "geq",   "smooth", "conjugate"};
    std::string chosen;
    for (const auto& name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config_path, "JSON config path")->required();
        sub->add_option("--seed", [&flags](const std::vector<std::string>& vals) {
            flags.seed_override = std::stoull(vals.at(0));
            return true;
        }, "seed override");
        sub->add_option("--out", flags.out_override, "output directory override");
        sub->add_option("--threads", flags.threads, "worker threads for trials");
        sub->callback([&chosen, name]() { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (chosen == "rate") return run_rate(flags);
        if (chosen == "spectrum") return run_spectrum(flags);
        if (chosen == "fit") return run_fit(flags);
        return run_experiment(chosen, flags);
    } catch (const krr::ValidationError& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return 2;
    } catch (const krr::NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    }
}
