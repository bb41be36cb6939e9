#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "krr/activation.hpp"
#include "krr/errors.hpp"
#include "krr/spectrum.hpp"

namespace krr {

// K(x,y) = h(<x,y>/d), h(t) = sum_i coeffs[i] t^i with nonnegative coeffs.
struct InnerProductPoly {
    std::vector<double> coeffs;
    std::int64_t d = 0;
};

// Conjugate kernel of a width-m layer: K(x,y) = (1/m) <sigma(Wx), sigma(Wy)>.
struct Conjugate {
    Eigen::MatrixXd weights; // m x d
    std::string activation;
};

// Linear kernel with prescribed covariance, in spectral coordinates: inputs
// live in R^rank, K(x,y) = sum_j sigma_j x_j y_j, feature map
// phi(x)_j = sqrt(sigma_j) x_j. Sampling the coordinates i.i.d. standard
// normal makes the integral operator equal to the prescribed spectrum.
struct LinearCov {
    SpectrumModel spectrum; // finite rank
};

struct KernelSpec {
    std::variant<InnerProductPoly, Conjugate, LinearCov> v;

    std::int64_t ambient_dim() const;
    bool has_explicit_features() const { return true; } // all three variants do
    std::int64_t feature_dim() const;
};

KernelSpec make_poly_kernel(std::vector<double> coeffs, std::int64_t d);
KernelSpec make_conjugate_kernel(Eigen::MatrixXd weights, std::string activation);
KernelSpec make_linear_cov_kernel(SpectrumModel spectrum);

double kernel_eval(const KernelSpec& kernel, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

// Multi-index over d variables with total degree <= L, graded lexicographic,
// stored sparsely as (variable, power) pairs.
struct MonomialIndex {
    std::vector<std::pair<int, int>> terms;
    int degree = 0;
    double multinomial = 1.0; // C_I = |I|! / prod I_j!
};

// All monomials of degree <= L in graded lexicographic order. Throws when the
// count would exceed max_count.
std::vector<MonomialIndex> graded_monomials(std::int64_t d, int L,
                                            std::int64_t max_count = 100000);

// Explicit feature matrix of the polynomial kernel: row i, column I holds
// sqrt(coeffs[|I|] C_I / d^|I|) * X_i^I. Columns in graded lex order, so a
// head/tail split by total degree is a contiguous slice; levels with a zero
// coefficient are omitted, keeping column j aligned with index j of
// poly_plateau_spectrum.
Eigen::MatrixXd poly_feature_map(const InnerProductPoly& kernel, const Eigen::MatrixXd& X);

// Feature matrix for any explicit-feature kernel.
Eigen::MatrixXd feature_map(const KernelSpec& kernel, const Eigen::MatrixXd& X);

// N x N kernel matrix; upper triangle computed and mirrored.
Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::MatrixXd& X);

// max_i |K(X_i, X_i) - reference| / reference.
double diag_concentration_stat(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                               double reference);

} // namespace krr
