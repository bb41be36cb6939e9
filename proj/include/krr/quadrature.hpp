#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "krr/errors.hpp"

namespace krr {

struct GaussHermite {
    Eigen::VectorXd nodes;   // physicists' convention: integral of f(x) exp(-x^2)
    Eigen::VectorXd weights; // weights sum to sqrt(pi)
};

// Golub-Welsch on the Hermite Jacobi matrix. Exact for polynomials of degree
// 2n-1 against the exp(-x^2) weight.
inline GaussHermite gauss_hermite(int n) {
    if (n < 1) throw ValidationError("gauss_hermite: need n >= 1 nodes");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        double b = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    GaussHermite gh;
    gh.nodes = es.eigenvalues();
    gh.weights.resize(n);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
        double v = es.eigenvectors()(0, i);
        gh.weights[i] = v * v * sqrt_pi;
    }
    return gh;
}

inline const GaussHermite& gauss_hermite_64() {
    static const GaussHermite gh = gauss_hermite(64);
    return gh;
}

// E[f(Z)] for Z ~ N(0,1).
inline double gaussian_expectation(const std::function<double(double)>& f) {
    const GaussHermite& gh = gauss_hermite_64();
    const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
    double acc = 0.0;
    for (int i = 0; i < gh.nodes.size(); ++i)
        acc += gh.weights[i] * f(std::sqrt(2.0) * gh.nodes[i]);
    return acc * inv_sqrt_pi;
}

// E[f(a U) g(b (rho U + sqrt(1-rho^2) V))] for independent standard normals
// U, V. Tensorized 64x64 grid.
inline double gaussian_expectation2(const std::function<double(double)>& f,
                                    const std::function<double(double)>& g,
                                    double a, double b, double rho) {
    const GaussHermite& gh = gauss_hermite_64();
    const double inv_pi = 1.0 / M_PI;
    const double s = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const int n = static_cast<int>(gh.nodes.size());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = std::sqrt(2.0) * gh.nodes[i];
        double fu = f(a * u);
        double inner = 0.0;
        for (int j = 0; j < n; ++j) {
            double v = std::sqrt(2.0) * gh.nodes[j];
            inner += gh.weights[j] * g(b * (rho * u + s * v));
        }
        acc += gh.weights[i] * fu * inner;
    }
    return acc * inv_pi;
}

} // namespace krr
