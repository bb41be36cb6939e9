#include "krr/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "krr/activation.hpp"
#include "krr/errors.hpp"
#include "krr/prng.hpp"
#include "krr/quadrature.hpp"

namespace krr {

namespace {

constexpr double kGeomTol = 1e-10;

struct Geometry {
    enum Kind { Orthogonal, Identical, Block, General } kind = General;
    std::int64_t block_size = 0; // leading identical rows in the block case
};

Geometry classify_rows(const Eigen::MatrixXd& W) {
    const Eigen::Index m = W.rows();
    auto dot = [&](Eigen::Index i, Eigen::Index j) { return W.row(i).dot(W.row(j)); };
    double scale = W.norm() / std::sqrt(static_cast<double>(m));
    double tol = kGeomTol * std::max(1.0, scale * scale);

    bool all_identical = true;
    for (Eigen::Index i = 1; i < m && all_identical; ++i)
        all_identical = (W.row(i) - W.row(0)).norm() <= tol;
    if (all_identical) return {Geometry::Identical, m};

    bool all_orthogonal = true;
    for (Eigen::Index i = 0; i < m && all_orthogonal; ++i)
        for (Eigen::Index j = i + 1; j < m && all_orthogonal; ++j)
            all_orthogonal = std::abs(dot(i, j)) <= tol;
    if (all_orthogonal) return {Geometry::Orthogonal, 0};

    // block case: rows [0, k) identical, the rest pairwise orthogonal and
    // orthogonal to the block direction
    Eigen::Index k = 1;
    while (k < m && (W.row(k) - W.row(0)).norm() <= tol) ++k;
    if (k >= 2) {
        bool ok = true;
        for (Eigen::Index i = k; i < m && ok; ++i) {
            ok = std::abs(dot(i, 0)) <= tol;
            for (Eigen::Index j = i + 1; j < m && ok; ++j) ok = std::abs(dot(i, j)) <= tol;
        }
        if (ok) return {Geometry::Block, k};
    }
    return {Geometry::General, 0};
}

ConjugateSpectrum from_dense_gamma(const Eigen::MatrixXd& gamma, double rel_gap) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
    const Eigen::Index m = gamma.rows();
    Eigen::VectorXd descending(m);
    Eigen::MatrixXd vecs(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        descending[i] = es.eigenvalues()[m - 1 - i];
        vecs.col(i) = es.eigenvectors().col(m - 1 - i);
    }
    double floor = std::max(0.0, descending[0]) * 1e-12;
    ConjugateSpectrum out;
    out.spectrum = group_into_plateaus(descending, rel_gap, floor);
    out.basis = vecs.leftCols(out.spectrum.head_rank());
    return out;
}

} // namespace

ConjugateSpectrum conjugate_spectrum(const Eigen::MatrixXd& W, const std::string& activation,
                                     ConjugateMethod method, std::int64_t mc_samples,
                                     std::uint64_t seed, double rel_gap) {
    const Eigen::Index m = W.rows();
    if (m < 1) throw ValidationError("conjugate_spectrum: need m >= 1 rows");
    Activation act = activation_by_name(activation);
    const double inv_m = 1.0 / static_cast<double>(m);

    if (method == ConjugateMethod::ClosedForm) {
        Geometry geo = classify_rows(W);
        ConjugateSpectrum out;
        switch (geo.kind) {
            case Geometry::Identical: {
                // rank one: eigenvalue ||sigma(||w|| .)||^2, eigenvector 1/sqrt(m)
                double norm_sq = activation_l2sq(act, W.row(0).norm());
                out.spectrum = SpectrumModel::from_plateaus({{norm_sq, 1}});
                out.basis = Eigen::MatrixXd::Constant(m, 1, 1.0 / std::sqrt(double(m)));
                return out;
            }
            case Geometry::Orthogonal: {
                // diagonal Gamma: entry j is (1/m)||sigma(||W_j|| .)||^2
                Eigen::VectorXd diag(m);
                for (Eigen::Index j = 0; j < m; ++j)
                    diag[j] = inv_m * activation_l2sq(act, W.row(j).norm());
                std::vector<int> order(static_cast<std::size_t>(m));
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](int a, int b) { return diag[a] > diag[b]; });
                Eigen::VectorXd descending(m);
                Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m, m);
                for (Eigen::Index i = 0; i < m; ++i) {
                    descending[i] = diag[order[static_cast<std::size_t>(i)]];
                    basis(order[static_cast<std::size_t>(i)], i) = 1.0;
                }
                out.spectrum = group_into_plateaus(descending, rel_gap);
                out.basis = basis.leftCols(out.spectrum.head_rank());
                return out;
            }
            case Geometry::Block: {
                // top eigenvalue (k/m)||sigma(||w|| .)||^2 with vector 1_k/sqrt(k),
                // then one eigenvalue per off-block row, then zeros
                const std::int64_t k = geo.block_size;
                double top = static_cast<double>(k) * inv_m *
                             activation_l2sq(act, W.row(0).norm());
                std::vector<std::pair<double, Eigen::Index>> rest;
                for (Eigen::Index j = k; j < m; ++j)
                    rest.emplace_back(inv_m * activation_l2sq(act, W.row(j).norm()), j);
                std::stable_sort(rest.begin(), rest.end(),
                                 [](const auto& a, const auto& b) { return a.first > b.first; });
                Eigen::VectorXd descending(1 + static_cast<Eigen::Index>(rest.size()));
                Eigen::MatrixXd basis =
                    Eigen::MatrixXd::Zero(m, 1 + static_cast<Eigen::Index>(rest.size()));
                descending[0] = top;
                basis.col(0).head(k).setConstant(1.0 / std::sqrt(static_cast<double>(k)));
                for (std::size_t i = 0; i < rest.size(); ++i) {
                    descending[static_cast<Eigen::Index>(i + 1)] = rest[i].first;
                    basis(rest[i].second, static_cast<Eigen::Index>(i + 1)) = 1.0;
                }
                // block means can violate ordering if the aligned direction is weak
                if (rest.size() > 0 && top < rest.front().first)
                    throw ValidationError(
                        "conjugate_spectrum: block closed form needs the aligned block on top");
                out.spectrum = group_into_plateaus(descending, rel_gap);
                out.basis = basis.leftCols(out.spectrum.head_rank());
                return out;
            }
            case Geometry::General:
                throw ValidationError(
                    "conjugate_spectrum: closed form unsupported for this W geometry "
                    "(rows are neither orthogonal, identical, nor block-aligned)");
        }
    }

    Eigen::MatrixXd gamma(m, m);
    if (method == ConjugateMethod::Quadrature) {
        for (Eigen::Index i = 0; i < m; ++i) {
            double ni = W.row(i).norm();
            gamma(i, i) = inv_m * activation_l2sq(act, ni);
            for (Eigen::Index j = i + 1; j < m; ++j) {
                double nj = W.row(j).norm();
                double rho = (ni > 0 && nj > 0) ? W.row(i).dot(W.row(j)) / (ni * nj) : 0.0;
                rho = std::clamp(rho, -1.0, 1.0);
                auto f = [&act](double t) { return act.fn(t); };
                gamma(i, j) = inv_m * gaussian_expectation2(f, f, ni, nj, rho);
                gamma(j, i) = gamma(i, j);
            }
        }
    } else {
        // Monte Carlo: Gamma_hat = (1/n) sum_t psi(G_t) psi(G_t)^T with
        // psi = sigma(W g)/sqrt(m), accumulated in blocks.
        gamma.setZero();
        Prng rng(seed, 0, Role::Oracle);
        const Eigen::Index d = W.cols();
        const std::int64_t block = 4096;
        Eigen::MatrixXd g(block, d);
        std::int64_t done = 0;
        while (done < mc_samples) {
            std::int64_t take = std::min(block, mc_samples - done);
            for (std::int64_t r = 0; r < take; ++r)
                for (Eigen::Index c = 0; c < d; ++c) g(r, c) = rng.gaussian();
            Eigen::MatrixXd s = (g.topRows(take) * W.transpose()).unaryExpr(act.fn);
            gamma.selfadjointView<Eigen::Lower>().rankUpdate(s.transpose(), inv_m);
            done += take;
        }
        gamma = gamma.selfadjointView<Eigen::Lower>();
        gamma /= static_cast<double>(mc_samples);
    }
    return from_dense_gamma(gamma, rel_gap);
}

} // namespace krr
