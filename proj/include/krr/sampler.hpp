#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "krr/kernel.hpp"
#include "krr/prng.hpp"
#include "krr/spectrum.hpp"

namespace krr {

enum class Marginal { Rademacher, Gaussian, UniformPm };

struct IidCoordinates {
    Marginal marginal = Marginal::Gaussian;
    std::int64_t d = 0;
};

// Uniform on the sphere of radius sqrt(d).
struct UniformSphere {
    std::int64_t d = 0;
};

// Gaussian with covariance given by a finite-rank spectrum (coordinate j has
// variance sigma_j).
struct GaussianCov {
    SpectrumModel spectrum;
};

struct DesignSpec {
    std::variant<IidCoordinates, UniformSphere, GaussianCov> v;
    std::int64_t dim() const;
};

// Target function f*: either a coefficient vector on the kernel's explicit
// feature coordinates (the proxy eigenbasis), a source-condition profile
// a_j = sigma_j^{(s-1)/2} j^{-1/2-eps} on the eigenbasis, or a single neuron
// a* sigma(<w*, x>).
struct EigenCoeffs {
    Eigen::VectorXd c;
};

struct SourceCondition {
    double s = 1.0;
    double epsilon = 0.01;
    std::int64_t truncation = 10000;
};

struct SingleNeuron {
    double a_star = 1.0;
    Eigen::VectorXd w_star; // unit vector
    std::string activation;
};

struct TargetSpec {
    std::variant<EigenCoeffs, SourceCondition, SingleNeuron> v;
};

struct NoiseSpec {
    enum class Law { Gaussian, RademacherScaled } law = Law::Gaussian;
    double sigma_xi = 0.0;
};

// Rows i.i.d. per spec; bit-identical for fixed (seed, trial, spec, N).
Eigen::MatrixXd sample_design(const DesignSpec& design, std::int64_t N, std::uint64_t seed,
                              std::uint64_t trial = 0);

Eigen::VectorXd sample_noise(const NoiseSpec& noise, std::int64_t N, std::uint64_t seed,
                             std::uint64_t trial = 0);

// f*(X_i) for each row. Coefficient targets require an explicit-feature
// kernel and len(c) <= feature dim.
Eigen::VectorXd eval_target(const TargetSpec& target, const KernelSpec& kernel,
                            const Eigen::MatrixXd& X);

// Coefficients of f* on the (proxy) eigenbasis of the given spectrum, for the
// rate machinery. Single-neuron targets have no generic representation here
// and throw (the conjugate experiment computes its own coefficients).
// For SourceCondition the source norm sum_j sigma_j^{1-s} a_j^2 is checked
// finite at the truncation.
Eigen::VectorXd target_coefficients(const TargetSpec& target, const SpectrumModel& spectrum);

} // namespace krr
