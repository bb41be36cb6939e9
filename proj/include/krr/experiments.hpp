#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "krr/kernel.hpp"
#include "krr/rates.hpp"
#include "krr/sampler.hpp"
#include "krr/spectrum.hpp"

namespace krr {

struct LambdaPolicy {
    enum class Mode { Fixed, Zero, Prescription } mode = Mode::Zero;
    double value = 0.0;
};

struct SweepGrid {
    std::vector<std::int64_t> Ns;
    std::vector<std::int64_t> ds;
};

struct ExperimentConfig {
    std::string id;
    std::optional<KernelSpec> kernel;
    std::optional<DesignSpec> design;
    std::optional<TargetSpec> target;
    NoiseSpec noise;
    SweepGrid sweep;
    std::int64_t trials = 20;
    std::int64_t trial_offset = 0;
    LambdaPolicy lambda_policy;
    RateConfig rate_config;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::int64_t threads = 1;
    bool dump_designs = false;

    std::int64_t n_test = 10000;
    std::int64_t bracket_c = 4;     // C in "iota = max{i : C d^i <= N}"
    double geq_b = 0.25;            // b in k*_{b,lambda}
    double smooth_alpha = 2.0;
    double smooth_s = 1.0;
    std::optional<double> diag_reference;

    double conj_alignment = 1.0;    // <W(T), w*>
    double conj_a_star = 1.0;
    std::string conj_activation = "tanh";
    std::int64_t conj_width = 0;    // m
    std::int64_t conj_n2 = 0;       // second-stage sample count

    // rate / spectrum / fit subcommand inputs
    std::optional<SpectrumModel> spectrum;
    double rate_sigma_xi = 0.0;
    std::int64_t rate_N = 0;
    double rate_lambda = 0.0;
    std::optional<std::int64_t> rate_k; // nullopt -> optimal_k
    bool spectrum_oracle = false;
    std::int64_t oracle_samples = 200000;
    std::optional<std::string> design_file;
    std::optional<std::string> response_file;
    double fit_lambda = 0.0;
};

struct CurvePoint {
    std::int64_t N = 0;
    std::int64_t d = 0;
    double lambda = 0.0;
    std::int64_t k_used = 0;
    double err_median = 0.0;
    double err_q25 = 0.0;
    double err_q75 = 0.0;
    double r_star = 0.0;
    double ratio = 0.0;
    std::vector<std::pair<std::string, double>> aux;
    std::vector<double> trial_errors; // per-trial, in trial order
};

// Deterministic quantiles of a sample (linear interpolation on sorted values).
double quantile(std::vector<double> values, double q);

// Descent curve of the minimum-norm (or fixed-lambda) interpolant against the
// theoretical rate at k chosen by the degree bracket
// iota = max{i : C d^i <= N}, head = all coordinates of degree <= iota.
std::vector<CurvePoint> run_multiple_descent(const ExperimentConfig& cfg);

struct LinearizePoint {
    std::int64_t d = 0;
    std::int64_t N = 0;
    double sigma_min_med = 0.0;
    double sigma_max_med = 0.0;
    double cond_med = 0.0;
    double h1 = 0.0;
    double ratio_min = 0.0; // sigma_min_med / h1
    double ratio_max = 0.0;
};

// Eigen-extremes of the raw kernel matrix (K(X_i, X_j)) per grid point.
std::vector<LinearizePoint> run_linearization(const ExperimentConfig& cfg);

struct DiagConcPoint {
    std::int64_t d = 0;
    std::int64_t N = 0;
    double stat_med = 0.0;
    double stat_q25 = 0.0;
    double stat_q75 = 0.0;
    double reference = 0.0;
};

std::vector<DiagConcPoint> run_diag_concentration(const ExperimentConfig& cfg);

// Two arms per N sharing one spectrum, target and rate: the polynomial kernel
// with the configured design, and the Gaussian linear model with covariance
// equal to the spectrum. aux carries "arm" (0 = kernel, 1 = gaussian).
std::vector<CurvePoint> run_gaussian_equivalence(const ExperimentConfig& cfg);

struct SmoothPoint {
    std::int64_t N = 0;
    std::int64_t k = 0;
    double lambda = 0.0;
    double r_star = 0.0;
};

struct SmoothRateResult {
    double slope = 0.0;
    double intercept = 0.0;
    bool degenerate = false;
    std::vector<SmoothPoint> points;
};

SmoothRateResult run_smooth_rate(const ExperimentConfig& cfg);

struct ConjugateReport {
    std::int64_t m = 0;
    std::int64_t n2 = 0;
    double alignment = 0.0;
    double delta = 0.0;            // off-direction scaling
    double sigma_l2 = 0.0;         // ||sigma||_{L2(gamma)}
    double top_eigenvalue = 0.0;   // head eigenvalue of the conjugate spectrum
    double err_median = 0.0;
    double err_q25 = 0.0;
    double err_q75 = 0.0;
    double rate_terms = 0.0;       // sigma_xi/sqrt(N2) + sigma_xi sqrt(N2/m) + |a*|/(||sigma|| N2)
    double approx_term = 0.0;      // |a*| Lip(sigma) sqrt(2 (1 - alignment))
    double r_star = 0.0;           // rate engine at k = 1, lambda = 0
};

ConjugateReport run_conjugate(const ExperimentConfig& cfg);

} // namespace krr
