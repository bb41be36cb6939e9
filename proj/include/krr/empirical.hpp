#pragma once
#include <Eigen/Dense>
#include <cstdint>

#include "krr/kernel.hpp"
#include "krr/sampler.hpp"

namespace krr {

struct EmpiricalSpectrum {
    Eigen::VectorXd eigenvalues; // descending
    bool undersampled = false;   // n < feature dimension
};

// Brute-force oracle for the integral operator: eigendecomposition of
// (1/n) sum phi(X_i) phi(X_i)^T. Deterministic under a fixed seed; feature
// dimension capped at 5000.
EmpiricalSpectrum empirical_integral_operator(const KernelSpec& kernel, const DesignSpec& design,
                                              std::int64_t n, std::uint64_t seed);

} // namespace krr
