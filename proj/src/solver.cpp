#include "krr/solver.hpp"

#include <cmath>
#include <limits>

#include "krr/errors.hpp"

namespace krr {

namespace {

// Symmetric solve through an eigendecomposition; lambda = 0 and near-singular
// grams are first-class inputs, so no Cholesky.
Eigen::VectorXd eig_solve(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
                          const Eigen::VectorXd& y, double lambda, double cutoff) {
    Eigen::VectorXd w = es.eigenvalues();
    Eigen::VectorXd z = es.eigenvectors().transpose() * y;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (lambda > 0.0)
            z[i] /= (w[i] + lambda);
        else
            z[i] = (w[i] > cutoff) ? z[i] / w[i] : 0.0;
    }
    return es.eigenvectors() * z;
}

} // namespace

FitResult fit(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double lambda) {
    if (gram.rows() != gram.cols()) throw ValidationError("fit: gram must be square");
    if (gram.rows() != y.size()) throw ValidationError("fit: gram/response size mismatch");
    if (lambda < 0.0) throw ValidationError("fit: lambda must be nonnegative");
    double scale = gram.cwiseAbs().maxCoeff();
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
        throw ValidationError("fit: gram must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("fit: eigendecomposition failed");
    double wmax = es.eigenvalues().maxCoeff();
    double cutoff = static_cast<double>(gram.rows()) *
                    std::numeric_limits<double>::epsilon() * std::max(wmax, 0.0);

    FitResult result;
    result.lambda = lambda;
    result.alpha = eig_solve(es, y, lambda, cutoff);
    if (!result.alpha.allFinite()) throw NumericalError("fit: solve produced non-finite values");

    double wmin = es.eigenvalues().minCoeff();
    result.gram_condition =
        (wmin > 0.0) ? wmax / wmin : std::numeric_limits<double>::infinity();
    double ynorm = y.norm();
    Eigen::VectorXd back = gram * result.alpha + lambda * result.alpha;
    result.residual_norm = (ynorm > 0.0) ? (back - y).norm() / ynorm : (back - y).norm();
    return result;
}

Eigen::VectorXd predict(const KernelSpec& kernel, const Eigen::MatrixXd& X_train,
                        const Eigen::VectorXd& alpha, const Eigen::MatrixXd& X_test) {
    if (X_train.rows() != alpha.size()) throw ValidationError("predict: alpha size mismatch");
    if (X_train.cols() != X_test.cols()) throw ValidationError("predict: dimension mismatch");
    // all kernel variants have explicit features, so cross-grams go through them
    Eigen::MatrixXd phi_train = feature_map(kernel, X_train);
    Eigen::MatrixXd phi_test = feature_map(kernel, X_test);
    return phi_test * (phi_train.transpose() * alpha);
}

Decomposition decompose(const FitResult& fit, const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& y, std::int64_t k) {
    const Eigen::Index p = features.cols();
    if (k < 0 || k > p) throw ValidationError("decompose: head size out of range");
    if (features.rows() != fit.alpha.size())
        throw ValidationError("decompose: feature rows must match the fit");

    Eigen::VectorXd beta = features.transpose() * fit.alpha;
    Decomposition dec;
    dec.head = beta.head(k);
    dec.tail = beta.tail(p - k);

    // recomposition check on the training features
    Eigen::VectorXd full = features * beta;
    Eigen::VectorXd split = features.leftCols(k) * dec.head + features.rightCols(p - k) * dec.tail;
    double denom = std::max(full.norm(), 1.0);
    dec.recompose_error = (full - split).norm() / denom;

    // tail fixed point: f_tail = Phi_t^T (Phi_t Phi_t^T + lambda I)^+ (y - Phi_h beta_head)
    Eigen::MatrixXd phi_tail = features.rightCols(p - k);
    Eigen::MatrixXd tail_gram = phi_tail * phi_tail.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tail_gram);
    if (es.info() != Eigen::Success) throw NumericalError("decompose: eigendecomposition failed");
    Eigen::VectorXd rhs = y - features.leftCols(k) * dec.head;
    Eigen::VectorXd z = es.eigenvectors().transpose() * rhs;
    double wmax = es.eigenvalues().size() > 0 ? std::max(es.eigenvalues().maxCoeff(), 0.0) : 0.0;
    double cutoff = static_cast<double>(tail_gram.rows()) *
                    std::numeric_limits<double>::epsilon() * wmax;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        double w = es.eigenvalues()[i];
        if (fit.lambda > 0.0)
            z[i] /= (w + fit.lambda);
        else
            z[i] = (w > cutoff) ? z[i] / w : 0.0;
    }
    Eigen::VectorXd tail_check = phi_tail.transpose() * (es.eigenvectors() * z);
    double tail_denom = std::max(dec.tail.norm(), 1.0);
    dec.fixed_point_residual = (tail_check - dec.tail).norm() / tail_denom;
    return dec;
}

RiskEstimate excess_risk_mc(const KernelSpec& kernel, const Eigen::MatrixXd& X_train,
                            const Eigen::VectorXd& alpha, const TargetSpec& target,
                            const DesignSpec& measure, std::int64_t n_test, std::uint64_t seed,
                            std::uint64_t trial) {
    if (n_test < 1) throw ValidationError("excess_risk_mc: need n_test >= 1");
    // fresh points under a dedicated role so they never collide with training draws
    Prng probe(seed, trial, Role::Test);
    Eigen::MatrixXd X_test(n_test, measure.dim());
    {
        // reuse sample_design's marginals through a Test-keyed stream
        if (auto* iid = std::get_if<IidCoordinates>(&measure.v)) {
            for (std::int64_t i = 0; i < n_test; ++i)
                for (std::int64_t j = 0; j < iid->d; ++j) {
                    switch (iid->marginal) {
                        case Marginal::Rademacher: X_test(i, j) = probe.rademacher(); break;
                        case Marginal::Gaussian: X_test(i, j) = probe.gaussian(); break;
                        case Marginal::UniformPm: X_test(i, j) = probe.uniform_pm(); break;
                    }
                }
        } else if (auto* sph = std::get_if<UniformSphere>(&measure.v)) {
            const double radius = std::sqrt(static_cast<double>(sph->d));
            for (std::int64_t i = 0; i < n_test; ++i) {
                for (std::int64_t j = 0; j < sph->d; ++j) X_test(i, j) = probe.gaussian();
                double norm = X_test.row(i).norm();
                if (norm == 0.0) { X_test(i, 0) = 1.0; norm = 1.0; }
                X_test.row(i) *= radius / norm;
            }
        } else {
            const auto& gc = std::get<GaussianCov>(measure.v);
            std::int64_t r = gc.spectrum.finite_rank();
            for (std::int64_t i = 0; i < n_test; ++i)
                for (std::int64_t j = 0; j < r; ++j)
                    X_test(i, j) = std::sqrt(gc.spectrum.eigenvalue(j + 1)) * probe.gaussian();
        }
    }
    Eigen::VectorXd pred = predict(kernel, X_train, alpha, X_test);
    Eigen::VectorXd truth = eval_target(target, kernel, X_test);
    Eigen::VectorXd err = pred - truth;
    RiskEstimate est;
    est.n_test = n_test;
    double mean_sq = err.squaredNorm() / static_cast<double>(n_test);
    est.rms = std::sqrt(mean_sq);
    double mean = err.mean();
    est.point_std = std::sqrt(std::max(0.0, mean_sq - mean * mean));
    return est;
}

double excess_risk_exact_linear(const SpectrumModel& spectrum, const Eigen::VectorXd& beta_hat,
                                const Eigen::VectorXd& beta_star) {
    Eigen::Index n = std::max(beta_hat.size(), beta_star.size());
    if (n > spectrum.finite_rank())
        throw ValidationError("excess_risk_exact_linear: coefficients exceed the spectrum rank");
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        double a = j < beta_hat.size() ? beta_hat[j] : 0.0;
        double b = j < beta_star.size() ? beta_star[j] : 0.0;
        acc += spectrum.eigenvalue(j + 1) * (a - b) * (a - b);
    }
    return std::sqrt(acc);
}

} // namespace krr
