#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "krr/kernel.hpp"
#include "krr/prng.hpp"
#include "krr/sampler.hpp"
#include "krr/solver.hpp"

using namespace krr;

TEST_CASE("fit: identity gram cases") {
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd y(5);
    y << 1, -2, 3, 0.5, -1;
    FitResult a = fit(K, y, 0.0);
    CHECK((a.alpha - y).cwiseAbs().maxCoeff() < 1e-12);
    FitResult b = fit(K, y, 1.0);
    CHECK((b.alpha - y / 2.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit: residual identity on random PSD grams") {
    Prng rng(41, 0, Role::Oracle);
    Eigen::MatrixXd A(12, 12);
    for (Eigen::Index i = 0; i < A.size(); ++i) A(i / 12, i % 12) = rng.gaussian();
    Eigen::MatrixXd K = A * A.transpose();
    Eigen::VectorXd y(12);
    for (Eigen::Index i = 0; i < 12; ++i) y[i] = rng.gaussian();
    FitResult f = fit(K, y, 0.3);
    Eigen::VectorXd back = (K + 0.3 * Eigen::MatrixXd::Identity(12, 12)) * f.alpha;
    CHECK((back - y).norm() / y.norm() < 1e-8);
    CHECK(f.residual_norm < 1e-8);

    Eigen::MatrixXd asym = K;
    asym(0, 1) += 1.0;
    CHECK_THROWS_AS(fit(asym, y, 0.1), ValidationError);
}

TEST_CASE("fit invariants: interpolation at lambda 0, ridge residual at lambda > 0") {
    KernelSpec kernel = make_poly_kernel({1.0, 1.0, 1.0}, 3);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 3}};
    Eigen::MatrixXd X = sample_design(design, 8, 3); // N=8 < p=10: full-rank gram
    Eigen::VectorXd y(8);
    Prng rng(2, 0, Role::Oracle);
    for (Eigen::Index i = 0; i < 8; ++i) y[i] = rng.gaussian();
    Eigen::MatrixXd K = gram(kernel, X);
    FitResult f0 = fit(K, y, 0.0);
    CHECK((K * f0.alpha - y).norm() / y.norm() < 1e-6);
    // predictions on the training points interpolate
    Eigen::VectorXd fitted = predict(kernel, X, f0.alpha, X);
    CHECK((fitted - y).norm() / y.norm() < 1e-6);
    // alpha = 0 predicts zero
    Eigen::VectorXd zero = predict(kernel, X, Eigen::VectorXd::Zero(8), X);
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("primal/dual Woodbury equivalence") {
    Prng rng(7, 0, Role::Oracle);
    for (double lambda : {0.0, 0.01, 0.5, 2.0}) {
        KernelSpec kernel = make_poly_kernel({0.5, 1.0}, 4); // p = 5
        DesignSpec design{IidCoordinates{Marginal::Gaussian, 4}};
        Eigen::MatrixXd X = sample_design(design, 30, 100 + static_cast<std::uint64_t>(lambda * 100));
        Eigen::MatrixXd phi = feature_map(kernel, X);
        Eigen::VectorXd y(30);
        for (Eigen::Index i = 0; i < 30; ++i) y[i] = rng.gaussian();

        FitResult f = fit(gram(kernel, X), y, lambda);
        Eigen::VectorXd dual_beta = phi.transpose() * f.alpha;

        const Eigen::Index p = phi.cols();
        Eigen::MatrixXd gram_primal = phi.transpose() * phi;
        Eigen::VectorXd primal_beta;
        if (lambda > 0.0) {
            primal_beta = (gram_primal + lambda * Eigen::MatrixXd::Identity(p, p))
                              .ldlt()
                              .solve(phi.transpose() * y);
        } else {
            primal_beta = phi.completeOrthogonalDecomposition().solve(y);
        }
        CHECK((dual_beta - primal_beta).norm() / std::max(1.0, primal_beta.norm()) < 1e-8);
    }
}

TEST_CASE("decompose: trivial splits and the fixed-point identity") {
    KernelSpec kernel = make_poly_kernel({1.0, 1.0, 1.0}, 3);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 3}};
    Eigen::MatrixXd X = sample_design(design, 20, 5);
    Eigen::MatrixXd phi = feature_map(kernel, X);
    Prng rng(9, 0, Role::Oracle);
    Eigen::VectorXd y(20);
    for (Eigen::Index i = 0; i < 20; ++i) y[i] = rng.gaussian();

    for (double lambda : {0.0, 0.4}) {
        FitResult f = fit(gram(kernel, X), y, lambda);
        Eigen::VectorXd beta = phi.transpose() * f.alpha;

        Decomposition all_tail = decompose(f, phi, y, 0);
        CHECK(all_tail.head.size() == 0);
        CHECK((all_tail.tail - beta).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(all_tail.fixed_point_residual < 1e-6);

        Decomposition all_head = decompose(f, phi, y, phi.cols());
        CHECK(all_head.tail.size() == 0);
        CHECK((all_head.head - beta).cwiseAbs().maxCoeff() < 1e-10);

        Decomposition mid = decompose(f, phi, y, 4);
        CHECK(mid.recompose_error < 1e-8);
        CHECK(mid.fixed_point_residual < 1e-6);
    }
    FitResult f = fit(gram(kernel, X), y, 0.1);
    CHECK_THROWS_AS(decompose(f, phi, y, phi.cols() + 1), ValidationError);
}

TEST_CASE("decomposition completeness at 100 random points") {
    KernelSpec kernel = make_poly_kernel({1.0, 1.0}, 4);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 4}};
    Eigen::MatrixXd X = sample_design(design, 15, 8);
    Eigen::MatrixXd phi = feature_map(kernel, X);
    Prng rng(11, 0, Role::Oracle);
    Eigen::VectorXd y(15);
    for (Eigen::Index i = 0; i < 15; ++i) y[i] = rng.gaussian();
    FitResult f = fit(gram(kernel, X), y, 0.2);
    Decomposition dec = decompose(f, phi, y, 2);

    Eigen::MatrixXd X_test = sample_design(design, 100, 9);
    Eigen::MatrixXd phi_test = feature_map(kernel, X_test);
    Eigen::VectorXd full = predict(kernel, X, f.alpha, X_test);
    Eigen::VectorXd split = phi_test.leftCols(2) * dec.head +
                            phi_test.rightCols(phi.cols() - 2) * dec.tail;
    CHECK((full - split).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + full.cwiseAbs().maxCoeff()));
}

TEST_CASE("excess risk: exact linear form and trivial zero") {
    SpectrumModel cov = SpectrumModel::from_plateaus({{4.0, 1}, {1.0, 2}});
    Eigen::VectorXd beta_hat(3), beta_star(3);
    beta_hat << 1.0, 0.0, 0.0;
    beta_star << 0.0, 0.0, 0.0;
    CHECK(excess_risk_exact_linear(cov, beta_hat, beta_star) == doctest::Approx(2.0));
    CHECK(excess_risk_exact_linear(cov, beta_star, beta_star) == 0.0);
}

TEST_CASE("monte carlo risk matches exact linear within 3/sqrt(n_test)") {
    SpectrumModel cov = SpectrumModel::from_plateaus({{1.0, 2}, {0.25, 2}});
    KernelSpec kernel = make_linear_cov_kernel(cov);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 4}};
    Eigen::MatrixXd X = sample_design(design, 12, 13);
    Eigen::VectorXd c(4);
    c << 1.0, -0.5, 0.25, 0.7;
    TargetSpec target{EigenCoeffs{c}};
    Eigen::VectorXd y = eval_target(target, kernel, X);
    FitResult f = fit(gram(kernel, X), y, 0.5);
    Eigen::MatrixXd phi = feature_map(kernel, X);
    Eigen::VectorXd beta = phi.transpose() * f.alpha;
    double exact = excess_risk_exact_linear(cov, beta, c);
    std::int64_t n_test = 10000;
    RiskEstimate mc = excess_risk_mc(kernel, X, f.alpha, target, design, n_test, 13, 0);
    CHECK(std::abs(mc.rms - exact) <= 3.0 / std::sqrt(static_cast<double>(n_test)));

    // seed stability: two estimates differ by <= 6 * point_std / sqrt(n_test)
    RiskEstimate mc2 = excess_risk_mc(kernel, X, f.alpha, target, design, n_test, 14, 0);
    double allowance =
        6.0 * std::max(mc.point_std, mc2.point_std) / std::sqrt(static_cast<double>(n_test));
    CHECK(std::abs(mc.rms - mc2.rms) <= allowance);
}
