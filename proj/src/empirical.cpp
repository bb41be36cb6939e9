#include "krr/empirical.hpp"

#include "krr/errors.hpp"

namespace krr {

EmpiricalSpectrum empirical_integral_operator(const KernelSpec& kernel, const DesignSpec& design,
                                              std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("empirical_integral_operator: need n >= 1");
    std::int64_t p = kernel.feature_dim();
    if (p > 5000)
        throw ValidationError("empirical_integral_operator: feature dimension above 5000");

    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(p, p);
    const std::int64_t block = 8192;
    std::int64_t done = 0;
    std::uint64_t chunk = 0;
    while (done < n) {
        std::int64_t take = std::min(block, n - done);
        // one keyed trial per chunk keeps memory flat and draws reproducible
        Eigen::MatrixXd X = sample_design(design, take, seed, chunk);
        Eigen::MatrixXd phi = feature_map(kernel, X);
        gamma.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose(), 1.0);
        done += take;
        ++chunk;
    }
    gamma = gamma.selfadjointView<Eigen::Lower>();
    gamma /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
    if (es.info() != Eigen::Success)
        throw NumericalError("empirical_integral_operator: eigendecomposition failed");
    EmpiricalSpectrum out;
    out.eigenvalues = es.eigenvalues().reverse();
    out.undersampled = (n < p);
    return out;
}

} // namespace krr
