#include "krr/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "krr/conjugate.hpp"
#include "krr/errors.hpp"
#include "krr/quadrature.hpp"
#include "krr/solver.hpp"

namespace krr {

namespace {

// Deterministic parallel map over trial indices: each slot writes its own
// result, so the outcome is independent of the thread count.
void parallel_trials(std::int64_t trials, std::int64_t threads,
                     const std::function<void(std::int64_t)>& body) {
    if (threads <= 1 || trials <= 1) {
        for (std::int64_t t = 0; t < trials; ++t) body(t);
        return;
    }
    std::int64_t workers = std::min<std::int64_t>(threads, trials);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::int64_t t = w; t < trials; t += workers) body(t);
        });
    }
    for (auto& th : pool) th.join();
}

const InnerProductPoly& require_poly(const ExperimentConfig& cfg, const char* who) {
    if (!cfg.kernel) throw ValidationError(std::string(who) + ": kernel missing");
    auto* p = std::get_if<InnerProductPoly>(&cfg.kernel->v);
    if (!p) throw ValidationError(std::string(who) + ": polynomial kernel required");
    return *p;
}

DesignSpec design_for_dim(const ExperimentConfig& cfg, std::int64_t d, const char* who) {
    if (!cfg.design) throw ValidationError(std::string(who) + ": design missing");
    DesignSpec design = *cfg.design;
    if (auto* iid = std::get_if<IidCoordinates>(&design.v))
        iid->d = d;
    else if (auto* sph = std::get_if<UniformSphere>(&design.v))
        sph->d = d;
    else
        throw ValidationError(std::string(who) + ": design must be iid or sphere");
    return design;
}

double poly_h(const std::vector<double>& coeffs, double t) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
    return acc;
}

// head size of the degree slice {|I| <= iota} for the bracket
// iota = max{i : C d^i <= N}, clamped to the kernel degree
std::pair<std::int64_t, std::int64_t> bracket_head(const InnerProductPoly& kernel,
                                                   std::int64_t d, std::int64_t N,
                                                   std::int64_t C) {
    int L = static_cast<int>(kernel.coeffs.size()) - 1;
    std::int64_t iota = 0;
    double power = static_cast<double>(d);
    while (iota + 1 <= L &&
           static_cast<double>(C) * power <= static_cast<double>(N)) {
        ++iota;
        power *= static_cast<double>(d);
    }
    std::int64_t k = 0;
    for (std::int64_t l = 0; l <= iota; ++l) {
        if (kernel.coeffs[static_cast<std::size_t>(l)] == 0.0) continue;
        k += (l == 0) ? 1 : binomial_checked(d + l - 1, l);
    }
    return {iota, k};
}

std::vector<double> coeffs_as_vector(const Eigen::VectorXd& c) {
    return std::vector<double>(c.data(), c.data() + c.size());
}

double lambda_for(const ExperimentConfig& cfg) {
    switch (cfg.lambda_policy.mode) {
        case LambdaPolicy::Mode::Zero: return 0.0;
        case LambdaPolicy::Mode::Fixed: return cfg.lambda_policy.value;
        case LambdaPolicy::Mode::Prescription:
            throw ValidationError("lambda prescription only applies to the smooth-rate run");
    }
    return 0.0;
}

} // namespace

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile: empty sample");
    std::sort(values.begin(), values.end());
    double pos = q * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::vector<CurvePoint> run_multiple_descent(const ExperimentConfig& cfg) {
    const InnerProductPoly& poly = require_poly(cfg, "run_multiple_descent");
    if (!cfg.target) throw ValidationError("run_multiple_descent: target missing");
    if (cfg.trials < 1) throw ValidationError("run_multiple_descent: trials must be >= 1");
    const double lambda = lambda_for(cfg);

    std::vector<CurvePoint> curve;
    for (std::int64_t N : cfg.sweep.Ns) {
        const std::int64_t d = poly.d;
        DesignSpec design = design_for_dim(cfg, d, "run_multiple_descent");
        SpectrumModel spectrum = poly_plateau_spectrum(poly.coeffs, d);
        auto [iota, k] = bracket_head(poly, d, N, cfg.bracket_c);
        Eigen::VectorXd c = target_coefficients(*cfg.target, spectrum);
        RateReport rate = rate_report(spectrum, coeffs_as_vector(c), cfg.noise.sigma_xi, N,
                                      lambda, k, cfg.rate_config);

        std::vector<double> errors(static_cast<std::size_t>(cfg.trials));
        parallel_trials(cfg.trials, cfg.threads, [&](std::int64_t t) {
            std::uint64_t trial = static_cast<std::uint64_t>(cfg.trial_offset + t);
            Eigen::MatrixXd X = sample_design(design, N, cfg.seed, trial);
            Eigen::VectorXd y = eval_target(*cfg.target, *cfg.kernel, X) +
                                sample_noise(cfg.noise, N, cfg.seed, trial);
            Eigen::MatrixXd K = gram(*cfg.kernel, X);
            FitResult f = fit(K, y, lambda);
            errors[static_cast<std::size_t>(t)] =
                excess_risk_mc(*cfg.kernel, X, f.alpha, *cfg.target, design, cfg.n_test,
                               cfg.seed, trial)
                    .rms;
        });

        CurvePoint point;
        point.N = N;
        point.d = d;
        point.lambda = lambda;
        point.k_used = k;
        point.err_median = quantile(errors, 0.5);
        point.err_q25 = quantile(errors, 0.25);
        point.err_q75 = quantile(errors, 0.75);
        point.r_star = rate.r_star;
        point.ratio = rate.r_star > 0.0 ? point.err_median / rate.r_star : 0.0;
        point.aux = {{"iota", static_cast<double>(iota)},
                     {"admissible", rate.admissible ? 1.0 : 0.0}};
        point.trial_errors = errors;
        curve.push_back(std::move(point));
    }
    return curve;
}

std::vector<LinearizePoint> run_linearization(const ExperimentConfig& cfg) {
    const InnerProductPoly& poly = require_poly(cfg, "run_linearization");
    if (!poly.coeffs.empty() && poly.coeffs[0] != 0.0)
        throw ValidationError("run_linearization: h must have no constant term");
    std::vector<std::int64_t> ds = cfg.sweep.ds.empty()
                                       ? std::vector<std::int64_t>{poly.d}
                                       : cfg.sweep.ds;
    std::vector<LinearizePoint> out;
    for (std::int64_t d : ds) {
        for (std::int64_t N : cfg.sweep.Ns) {
            InnerProductPoly local = poly;
            local.d = d;
            KernelSpec kernel{local};
            DesignSpec design = design_for_dim(cfg, d, "run_linearization");
            std::vector<double> lo(static_cast<std::size_t>(cfg.trials));
            std::vector<double> hi(static_cast<std::size_t>(cfg.trials));
            std::vector<double> cond(static_cast<std::size_t>(cfg.trials));
            parallel_trials(cfg.trials, cfg.threads, [&](std::int64_t t) {
                std::uint64_t trial = static_cast<std::uint64_t>(cfg.trial_offset + t);
                Eigen::MatrixXd X = sample_design(design, N, cfg.seed, trial);
                Eigen::MatrixXd K = gram(kernel, X);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
                double wmin = es.eigenvalues().minCoeff();
                double wmax = es.eigenvalues().maxCoeff();
                lo[static_cast<std::size_t>(t)] = wmin;
                hi[static_cast<std::size_t>(t)] = wmax;
                cond[static_cast<std::size_t>(t)] =
                    wmin > 0.0 ? wmax / wmin : std::numeric_limits<double>::infinity();
            });
            LinearizePoint point;
            point.d = d;
            point.N = N;
            point.sigma_min_med = quantile(lo, 0.5);
            point.sigma_max_med = quantile(hi, 0.5);
            point.cond_med = quantile(cond, 0.5);
            point.h1 = poly_h(poly.coeffs, 1.0);
            point.ratio_min = point.sigma_min_med / point.h1;
            point.ratio_max = point.sigma_max_med / point.h1;
            out.push_back(point);
        }
    }
    return out;
}

std::vector<DiagConcPoint> run_diag_concentration(const ExperimentConfig& cfg) {
    const InnerProductPoly& poly = require_poly(cfg, "run_diag_concentration");
    std::vector<std::int64_t> ds = cfg.sweep.ds.empty()
                                       ? std::vector<std::int64_t>{poly.d}
                                       : cfg.sweep.ds;
    std::vector<DiagConcPoint> out;
    for (std::int64_t d : ds) {
        for (std::int64_t N : cfg.sweep.Ns) {
            InnerProductPoly local = poly;
            local.d = d;
            KernelSpec kernel{local};
            DesignSpec design = design_for_dim(cfg, d, "run_diag_concentration");
            double reference =
                cfg.diag_reference ? *cfg.diag_reference : poly_h(poly.coeffs, 1.0);
            std::vector<double> stats(static_cast<std::size_t>(cfg.trials));
            parallel_trials(cfg.trials, cfg.threads, [&](std::int64_t t) {
                std::uint64_t trial = static_cast<std::uint64_t>(cfg.trial_offset + t);
                Eigen::MatrixXd X = sample_design(design, N, cfg.seed, trial);
                stats[static_cast<std::size_t>(t)] =
                    diag_concentration_stat(kernel, X, reference);
            });
            DiagConcPoint point;
            point.d = d;
            point.N = N;
            point.stat_med = quantile(stats, 0.5);
            point.stat_q25 = quantile(stats, 0.25);
            point.stat_q75 = quantile(stats, 0.75);
            point.reference = reference;
            out.push_back(point);
        }
    }
    return out;
}

std::vector<CurvePoint> run_gaussian_equivalence(const ExperimentConfig& cfg) {
    const InnerProductPoly& poly = require_poly(cfg, "run_gaussian_equivalence");
    if (!cfg.target) throw ValidationError("run_gaussian_equivalence: target missing");
    const double lambda = lambda_for(cfg);
    const std::int64_t d = poly.d;
    SpectrumModel spectrum = poly_plateau_spectrum(poly.coeffs, d);
    Eigen::VectorXd c = target_coefficients(*cfg.target, spectrum);
    KernelSpec linear = make_linear_cov_kernel(spectrum);
    TargetSpec linear_target{EigenCoeffs{c}};
    DesignSpec gaussian_design{IidCoordinates{Marginal::Gaussian, spectrum.finite_rank()}};

    std::vector<CurvePoint> out;
    for (std::int64_t N : cfg.sweep.Ns) {
        auto kb = k_b_star(spectrum, lambda, cfg.geq_b, N);
        if (!kb)
            throw ValidationError("run_gaussian_equivalence: k*_{b,lambda} is infinite at N=" +
                                  std::to_string(N));
        RateReport rate = rate_report(spectrum, coeffs_as_vector(c), cfg.noise.sigma_xi, N,
                                      lambda, *kb, cfg.rate_config);

        std::vector<double> kernel_err(static_cast<std::size_t>(cfg.trials));
        std::vector<double> gauss_err(static_cast<std::size_t>(cfg.trials));
        DesignSpec design = design_for_dim(cfg, d, "run_gaussian_equivalence");
        parallel_trials(cfg.trials, cfg.threads, [&](std::int64_t t) {
            std::uint64_t trial = static_cast<std::uint64_t>(cfg.trial_offset + t);
            // kernel arm
            {
                Eigen::MatrixXd X = sample_design(design, N, cfg.seed, trial);
                Eigen::VectorXd y = eval_target(*cfg.target, *cfg.kernel, X) +
                                    sample_noise(cfg.noise, N, cfg.seed, trial);
                FitResult f = fit(gram(*cfg.kernel, X), y, lambda);
                kernel_err[static_cast<std::size_t>(t)] =
                    excess_risk_mc(*cfg.kernel, X, f.alpha, *cfg.target, design, cfg.n_test,
                                   cfg.seed, trial)
                        .rms;
            }
            // gaussian linear arm: same spectrum and coefficients, exact risk
            {
                std::uint64_t arm_trial = trial + (1ULL << 32); // disjoint stream block
                Eigen::MatrixXd Z = sample_design(gaussian_design, N, cfg.seed, arm_trial);
                Eigen::VectorXd y = eval_target(linear_target, linear, Z) +
                                    sample_noise(cfg.noise, N, cfg.seed, arm_trial);
                FitResult f = fit(gram(linear, Z), y, lambda);
                Eigen::MatrixXd phi = feature_map(linear, Z);
                Eigen::VectorXd beta = phi.transpose() * f.alpha;
                gauss_err[static_cast<std::size_t>(t)] =
                    excess_risk_exact_linear(spectrum, beta, c);
            }
        });

        for (int arm = 0; arm < 2; ++arm) {
            const auto& errs = arm == 0 ? kernel_err : gauss_err;
            CurvePoint point;
            point.N = N;
            point.d = d;
            point.lambda = lambda;
            point.k_used = *kb;
            point.err_median = quantile(errs, 0.5);
            point.err_q25 = quantile(errs, 0.25);
            point.err_q75 = quantile(errs, 0.75);
            point.r_star = rate.r_star;
            point.ratio = rate.r_star > 0.0 ? point.err_median / rate.r_star : 0.0;
            point.aux = {{"arm", static_cast<double>(arm)}};
            point.trial_errors = errs;
            out.push_back(std::move(point));
        }
    }
    return out;
}

SmoothRateResult run_smooth_rate(const ExperimentConfig& cfg) {
    const double alpha = cfg.smooth_alpha;
    const double s = cfg.smooth_s;
    SpectrumModel spectrum =
        SpectrumModel::from_plateaus({}, PowerTail{alpha, 1, 1.0});
    TargetSpec target = cfg.target ? *cfg.target : TargetSpec{SourceCondition{s, 0.01, 10000}};
    Eigen::VectorXd c;
    bool zero_target = false;
    if (auto* ec = std::get_if<EigenCoeffs>(&target.v)) {
        c = ec->c;
        zero_target = (c.size() == 0 || c.cwiseAbs().maxCoeff() == 0.0);
    } else {
        c = target_coefficients(target, spectrum);
    }

    SmoothRateResult result;
    std::vector<double> logN, logR;
    for (std::int64_t N : cfg.sweep.Ns) {
        auto [k, lambda] = power_decay_prescription(alpha, s, N);
        RateReport rate = rate_report(spectrum, coeffs_as_vector(c), cfg.noise.sigma_xi, N,
                                      lambda, k, cfg.rate_config);
        result.points.push_back({N, k, lambda, rate.r_star});
        if (rate.r_star > 0.0) {
            logN.push_back(std::log(static_cast<double>(N)));
            logR.push_back(std::log(rate.r_star));
        }
    }
    if (zero_target && cfg.noise.sigma_xi == 0.0) {
        result.degenerate = true;
        result.slope = std::numeric_limits<double>::quiet_NaN();
        result.intercept = std::numeric_limits<double>::quiet_NaN();
        return result;
    }
    if (logN.size() < 2) throw ValidationError("run_smooth_rate: need at least two N values");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < logN.size(); ++i) {
        mx += logN[i];
        my += logR[i];
    }
    mx /= static_cast<double>(logN.size());
    my /= static_cast<double>(logN.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < logN.size(); ++i) {
        sxx += (logN[i] - mx) * (logN[i] - mx);
        sxy += (logN[i] - mx) * (logR[i] - my);
    }
    result.slope = sxy / sxx;
    result.intercept = my - result.slope * mx;
    return result;
}

ConjugateReport run_conjugate(const ExperimentConfig& cfg) {
    const std::int64_t m = cfg.conj_width;
    const std::int64_t n2 = cfg.conj_n2;
    if (m < 2) throw ValidationError("run_conjugate: width m must be at least 2");
    if (n2 < 1) throw ValidationError("run_conjugate: N2 must be at least 1");
    if (cfg.conj_alignment < -1.0 || cfg.conj_alignment > 1.0)
        throw ValidationError("run_conjugate: alignment must lie in [-1, 1]");
    Activation act = activation_by_name(cfg.conj_activation);

    // both w* and the Gram-Schmidt completion live in R^d with d = m
    const std::int64_t d = m;
    Eigen::VectorXd w_star = Eigen::VectorXd::Zero(d);
    w_star[0] = 1.0;
    // W(T) at the requested alignment, tilted toward the second axis
    Eigen::VectorXd w1 = Eigen::VectorXd::Zero(d);
    w1[0] = cfg.conj_alignment;
    w1[1] = std::sqrt(std::max(0.0, 1.0 - cfg.conj_alignment * cfg.conj_alignment));

    // off-direction scaling: ||sigma(delta .)||^2 = 1/m by bisection
    double target_norm = 1.0 / static_cast<double>(m);
    if (activation_l2sq(act, 1.0) < target_norm)
        throw ValidationError("run_conjugate: activation too small to reach 1/m at delta <= 1");
    double lo = 0.0, hi = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (activation_l2sq(act, mid) < target_norm)
            lo = mid;
        else
            hi = mid;
    }
    const double delta = 0.5 * (lo + hi);

    // Gram-Schmidt completion of w1 to an orthonormal basis, rows 2..m scaled by delta
    Eigen::MatrixXd W(m, d);
    W.row(0) = w1;
    {
        Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(d, d);
        basis.col(0) = w1;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
        Eigen::MatrixXd Q = qr.householderQ();
        // Householder may flip the first column; rows 2..m only need orthogonality
        for (std::int64_t j = 1; j < m; ++j) W.row(j) = delta * Q.col(j).transpose();
    }

    ConjugateSpectrum conj =
        conjugate_spectrum(W, cfg.conj_activation, ConjugateMethod::ClosedForm);
    const double sigma_l2 = std::sqrt(activation_l2sq(act, 1.0));

    // target coefficient on the top eigendirection: f** = a* sigma(<w1, .>) = a* sqrt(m) phi_1
    std::vector<double> coeffs = {cfg.conj_a_star * std::sqrt(static_cast<double>(m))};
    RateReport rate =
        rate_report(conj.spectrum, coeffs, cfg.noise.sigma_xi, n2, 0.0, 1, cfg.rate_config);

    KernelSpec kernel = make_conjugate_kernel(W, cfg.conj_activation);
    TargetSpec target{SingleNeuron{cfg.conj_a_star, w_star, cfg.conj_activation}};
    DesignSpec design{IidCoordinates{Marginal::Gaussian, d}};

    std::vector<double> errors(static_cast<std::size_t>(cfg.trials));
    parallel_trials(cfg.trials, cfg.threads, [&](std::int64_t t) {
        std::uint64_t trial = static_cast<std::uint64_t>(cfg.trial_offset + t);
        Eigen::MatrixXd X = sample_design(design, n2, cfg.seed, trial);
        Eigen::VectorXd y = eval_target(target, kernel, X) +
                            sample_noise(cfg.noise, n2, cfg.seed, trial);
        FitResult f = fit(gram(kernel, X), y, 0.0);
        errors[static_cast<std::size_t>(t)] =
            excess_risk_mc(kernel, X, f.alpha, target, design, cfg.n_test, cfg.seed, trial).rms;
    });

    ConjugateReport report;
    report.m = m;
    report.n2 = n2;
    report.alignment = cfg.conj_alignment;
    report.delta = delta;
    report.sigma_l2 = sigma_l2;
    report.top_eigenvalue = conj.spectrum.eigenvalue(1);
    report.err_median = quantile(errors, 0.5);
    report.err_q25 = quantile(errors, 0.25);
    report.err_q75 = quantile(errors, 0.75);
    report.rate_terms =
        cfg.noise.sigma_xi / std::sqrt(static_cast<double>(n2)) +
        cfg.noise.sigma_xi * std::sqrt(static_cast<double>(n2) / static_cast<double>(m)) +
        std::abs(cfg.conj_a_star) / (sigma_l2 * static_cast<double>(n2));
    report.approx_term = std::abs(cfg.conj_a_star) * act.lipschitz *
                         std::sqrt(2.0 * std::max(0.0, 1.0 - cfg.conj_alignment));
    report.r_star = rate.r_star;
    return report;
}

} // namespace krr
