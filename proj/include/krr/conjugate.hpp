#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "krr/spectrum.hpp"

namespace krr {

enum class ConjugateMethod { ClosedForm, Quadrature, MonteCarlo };

// Spectrum and eigenbasis of Gamma_{ij} = (1/m) E[sigma(<W_i,G>) sigma(<W_j,G>)]
// for G standard Gaussian. `basis` columns are the eigenvectors of the kept
// (positive) eigenvalues, aligned with the expanded spectrum.
struct ConjugateSpectrum {
    SpectrumModel spectrum;
    Eigen::MatrixXd basis; // m x r
};

// method == ClosedForm is only valid when the rows of W are pairwise
// orthogonal, all identical, or in the block layout (k identical rows, the
// rest pairwise orthogonal and orthogonal to them); anything else throws.
// Quadrature uses the 64-node Gauss-Hermite rule; MonteCarlo averages
// mc_samples Gaussian draws under a seeded stream. Eigenvalues are grouped
// into plateaus with relative gap rel_gap.
ConjugateSpectrum conjugate_spectrum(const Eigen::MatrixXd& W, const std::string& activation,
                                     ConjugateMethod method, std::int64_t mc_samples = 1000000,
                                     std::uint64_t seed = 0, double rel_gap = 0.05);

} // namespace krr
