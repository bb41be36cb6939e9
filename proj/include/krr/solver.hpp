#pragma once
#include <Eigen/Dense>
#include <cstdint>

#include "krr/kernel.hpp"
#include "krr/sampler.hpp"

namespace krr {

// One KRR fit. alpha solves (K + lambda I) alpha = y; at lambda = 0 the
// eigenvalue-thresholded pseudo-inverse gives the minimum-H-norm interpolant
// of the achievable values (cutoff N * machine epsilon * sigma_max(K)).
struct FitResult {
    Eigen::VectorXd alpha;
    double lambda = 0.0;
    double residual_norm = 0.0;  // ||(K + lambda I) alpha - y|| / ||y||
    double gram_condition = 0.0; // sigma_max / sigma_min of K
};

FitResult fit(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double lambda);

// f_hat(x) = sum_i alpha_i K(X_i, x), batched over rows of X_test.
Eigen::VectorXd predict(const KernelSpec& kernel, const Eigen::MatrixXd& X_train,
                        const Eigen::VectorXd& alpha, const Eigen::MatrixXd& X_test);

// Primal split of the fit at head size k. The primal vector is
// beta = Phi^T alpha; head keeps the first k graded feature coordinates. The
// construction verifies both that head + tail reproduces the full predictor
// on the training features and the tail fixed-point identity
//   f_tail = Phi_tail^T (Phi_tail Phi_tail^T + lambda I)^{-1} (y - Phi_head beta_head),
// storing the residuals.
struct Decomposition {
    Eigen::VectorXd head;   // first k primal coordinates
    Eigen::VectorXd tail;   // remaining p - k coordinates
    double recompose_error = 0.0;
    double fixed_point_residual = 0.0;
};

Decomposition decompose(const FitResult& fit, const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& y, std::int64_t k);

struct RiskEstimate {
    double rms = 0.0;        // sqrt(mean squared pointwise error)
    double point_std = 0.0;  // std of the pointwise errors
    std::int64_t n_test = 0;
};

// Monte Carlo excess risk over n_test fresh points from the design measure.
RiskEstimate excess_risk_mc(const KernelSpec& kernel, const Eigen::MatrixXd& X_train,
                            const Eigen::VectorXd& alpha, const TargetSpec& target,
                            const DesignSpec& measure, std::int64_t n_test, std::uint64_t seed,
                            std::uint64_t trial = 0);

// ||Gamma^{1/2} (beta_hat - beta_star)|| for linear-cov kernels; exact.
double excess_risk_exact_linear(const SpectrumModel& spectrum, const Eigen::VectorXd& beta_hat,
                                const Eigen::VectorXd& beta_star);

} // namespace krr
