#include "krr/sampler.hpp"

#include <cmath>

#include "krr/activation.hpp"
#include "krr/errors.hpp"

namespace krr {

std::int64_t DesignSpec::dim() const {
    if (auto* iid = std::get_if<IidCoordinates>(&v)) return iid->d;
    if (auto* sph = std::get_if<UniformSphere>(&v)) return sph->d;
    return std::get<GaussianCov>(v).spectrum.finite_rank();
}

Eigen::MatrixXd sample_design(const DesignSpec& design, std::int64_t N, std::uint64_t seed,
                              std::uint64_t trial) {
    if (N < 1) throw ValidationError("sample_design: need N >= 1");
    Prng rng(seed, trial, Role::Design);
    if (auto* iid = std::get_if<IidCoordinates>(&design.v)) {
        Eigen::MatrixXd X(N, iid->d);
        for (std::int64_t i = 0; i < N; ++i)
            for (std::int64_t j = 0; j < iid->d; ++j) {
                switch (iid->marginal) {
                    case Marginal::Rademacher: X(i, j) = rng.rademacher(); break;
                    case Marginal::Gaussian: X(i, j) = rng.gaussian(); break;
                    case Marginal::UniformPm: X(i, j) = rng.uniform_pm(); break;
                }
            }
        return X;
    }
    if (auto* sph = std::get_if<UniformSphere>(&design.v)) {
        Eigen::MatrixXd X(N, sph->d);
        const double radius = std::sqrt(static_cast<double>(sph->d));
        for (std::int64_t i = 0; i < N; ++i) {
            for (std::int64_t j = 0; j < sph->d; ++j) X(i, j) = rng.gaussian();
            double norm = X.row(i).norm();
            if (norm == 0.0) { X(i, 0) = 1.0; norm = 1.0; }  // measure-zero guard
            X.row(i) *= radius / norm;
        }
        return X;
    }
    const auto& gc = std::get<GaussianCov>(design.v);
    if (gc.spectrum.has_tail())
        throw ValidationError("sample_design: GaussianCov requires a finite-rank spectrum");
    std::int64_t r = gc.spectrum.finite_rank();
    Eigen::VectorXd sd(r);
    for (std::int64_t j = 0; j < r; ++j) sd[j] = std::sqrt(gc.spectrum.eigenvalue(j + 1));
    Eigen::MatrixXd X(N, r);
    for (std::int64_t i = 0; i < N; ++i)
        for (std::int64_t j = 0; j < r; ++j) X(i, j) = sd[j] * rng.gaussian();
    return X;
}

Eigen::VectorXd sample_noise(const NoiseSpec& noise, std::int64_t N, std::uint64_t seed,
                             std::uint64_t trial) {
    if (N < 0) throw ValidationError("sample_noise: negative N");
    Prng rng(seed, trial, Role::Noise);
    Eigen::VectorXd xi(N);
    for (std::int64_t i = 0; i < N; ++i) {
        double draw = (noise.law == NoiseSpec::Law::Gaussian) ? rng.gaussian()
                                                              : rng.rademacher();
        xi[i] = noise.sigma_xi * draw;
    }
    return xi;
}

Eigen::VectorXd eval_target(const TargetSpec& target, const KernelSpec& kernel,
                            const Eigen::MatrixXd& X) {
    if (auto* sn = std::get_if<SingleNeuron>(&target.v)) {
        if (sn->w_star.size() != X.cols())
            throw ValidationError("eval_target: w* dimension mismatch");
        Activation act = activation_by_name(sn->activation);
        return sn->a_star * (X * sn->w_star).unaryExpr(act.fn);
    }
    Eigen::VectorXd c;
    if (auto* ec = std::get_if<EigenCoeffs>(&target.v)) {
        c = ec->c;
    } else {
        const auto& sc = std::get<SourceCondition>(target.v);
        // profile needs the spectrum; for direct evaluation fall back to the
        // linear-cov kernel whose spectrum defines the basis
        if (auto* lc = std::get_if<LinearCov>(&kernel.v)) {
            TargetSpec tmp{sc};
            c = target_coefficients(tmp, lc->spectrum);
        } else {
            throw ValidationError(
                "eval_target: source-condition targets need a linear_cov kernel for evaluation");
        }
    }
    std::int64_t p = kernel.feature_dim();
    if (c.size() > p)
        throw ValidationError("eval_target: coefficient length exceeds feature dimension");
    Eigen::MatrixXd phi = feature_map(kernel, X);
    return phi.leftCols(c.size()) * c;
}

Eigen::VectorXd target_coefficients(const TargetSpec& target, const SpectrumModel& spectrum) {
    if (auto* ec = std::get_if<EigenCoeffs>(&target.v)) {
        if (!ec->c.allFinite() )
            throw ValidationError("target_coefficients: non-finite coefficients");
        return ec->c;
    }
    if (auto* sc = std::get_if<SourceCondition>(&target.v)) {
        if (sc->s < 1.0) throw ValidationError("target_coefficients: source index s must be >= 1");
        if (sc->truncation < 1) throw ValidationError("target_coefficients: empty truncation");
        Eigen::VectorXd c(sc->truncation);
        double source_norm = 0.0;
        for (std::int64_t j = 1; j <= sc->truncation; ++j) {
            double sigma = spectrum.eigenvalue(j);
            if (sigma <= 0.0)
                throw ValidationError("target_coefficients: truncation exceeds spectrum rank");
            double a = std::pow(sigma, (sc->s - 1.0) / 2.0) *
                       std::pow(static_cast<double>(j), -0.5 - sc->epsilon);
            c[j - 1] = a;
            source_norm += std::pow(sigma, 1.0 - sc->s) * a * a;
        }
        if (!std::isfinite(source_norm))
            throw ValidationError("target_coefficients: source norm diverges at truncation");
        return c;
    }
    throw ValidationError("target_coefficients: single-neuron targets have no eigenbasis form");
}

} // namespace krr
