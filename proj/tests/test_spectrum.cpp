#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "krr/empirical.hpp"
#include "krr/kernel.hpp"
#include "krr/prng.hpp"
#include "krr/sampler.hpp"
#include "krr/spectrum.hpp"

using namespace krr;

namespace {

// Oracle: dim of degree-l harmonic polynomials as the nullity of the
// Laplacian acting from degree-l monomials to degree-(l-2) monomials.
std::int64_t harmonic_dim_by_enumeration(std::int64_t d, int l) {
    auto monos = graded_monomials(d, l, 2000);
    std::vector<const MonomialIndex*> deg_l, deg_l2;
    for (const auto& m : monos) {
        if (m.degree == l) deg_l.push_back(&m);
        if (m.degree == l - 2) deg_l2.push_back(&m);
    }
    if (l < 2) return static_cast<std::int64_t>(deg_l.size());
    // map each degree-(l-2) exponent pattern to a row
    auto key_of = [&](std::vector<int> expo) {
        std::string key;
        for (int e : expo) key += std::to_string(e) + ",";
        return key;
    };
    std::map<std::string, int> row_of;
    for (std::size_t r = 0; r < deg_l2.size(); ++r) {
        std::vector<int> expo(static_cast<std::size_t>(d), 0);
        for (auto [v, p] : deg_l2[r]->terms) expo[static_cast<std::size_t>(v)] = p;
        row_of[key_of(expo)] = static_cast<int>(r);
    }
    Eigen::MatrixXd lap =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg_l2.size()),
                              static_cast<Eigen::Index>(deg_l.size()));
    for (std::size_t c = 0; c < deg_l.size(); ++c) {
        std::vector<int> expo(static_cast<std::size_t>(d), 0);
        for (auto [v, p] : deg_l[c]->terms) expo[static_cast<std::size_t>(v)] = p;
        for (std::int64_t v = 0; v < d; ++v) {
            int p = expo[static_cast<std::size_t>(v)];
            if (p < 2) continue;
            std::vector<int> down = expo;
            down[static_cast<std::size_t>(v)] -= 2;
            lap(row_of.at(key_of(down)), static_cast<Eigen::Index>(c)) +=
                static_cast<double>(p) * (p - 1);
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lap);
    return static_cast<std::int64_t>(deg_l.size()) - lu.rank();
}

} // namespace

TEST_CASE("sphere_harmonic_dim matches the basis-enumeration oracle") {
    CHECK(sphere_harmonic_dim(3, 1) == harmonic_dim_by_enumeration(3, 1)); // 3
    CHECK(sphere_harmonic_dim(3, 1) == 3);
    CHECK(sphere_harmonic_dim(7, 0) == 1);
    CHECK(sphere_harmonic_dim(4, 2) == harmonic_dim_by_enumeration(4, 2)); // 9
    CHECK(sphere_harmonic_dim(4, 2) == 9);
    CHECK(sphere_harmonic_dim(10, 3) == harmonic_dim_by_enumeration(10, 3)); // 210
    CHECK(sphere_harmonic_dim(10, 3) == 210);
    CHECK(sphere_harmonic_dim(5, 3) == harmonic_dim_by_enumeration(5, 3));
}

TEST_CASE("poly_plateau_spectrum structure") {
    SUBCASE("constant kernel is rank one") {
        SpectrumModel m = poly_plateau_spectrum({1.0, 0.0}, 5);
        REQUIRE(m.head().size() == 1);
        CHECK(m.head()[0].value == 1.0);
        CHECK(m.head()[0].multiplicity == 1);
    }
    SUBCASE("levels and multiplicities for (1,1) at d=3") {
        SpectrumModel m = poly_plateau_spectrum({1.0, 1.0}, 3);
        REQUIRE(m.head().size() == 2);
        CHECK(m.head()[0].value == 1.0);
        CHECK(m.head()[0].multiplicity == 1);
        CHECK(m.head()[1].value == doctest::Approx(1.0 / 3.0));
        CHECK(m.head()[1].multiplicity == 3);
    }
    SUBCASE("zero levels are omitted: (0,1,1) at d=2") {
        SpectrumModel m = poly_plateau_spectrum({0.0, 1.0, 1.0}, 2);
        REQUIRE(m.head().size() == 2);
        CHECK(m.head()[0].value == doctest::Approx(0.5));
        CHECK(m.head()[0].multiplicity == 2);
        CHECK(m.head()[1].value == doctest::Approx(0.25));
        CHECK(m.head()[1].multiplicity == 3);
    }
    SUBCASE("all-zero coefficients rejected") {
        CHECK_THROWS_AS(poly_plateau_spectrum({0.0, 0.0}, 3), ValidationError);
    }
}

TEST_CASE("sphere plateau spectrum") {
    CHECK_THROWS_AS(sphere_plateau_spectrum({1.0, 1.0}, 2), ValidationError);
    SpectrumModel m = sphere_plateau_spectrum({1.0, 1.0, 1.0}, 4);
    REQUIRE(m.head().size() == 3);
    CHECK(m.head()[0].multiplicity == 1);
    CHECK(m.head()[1].multiplicity == 4);
    CHECK(m.head()[2].multiplicity == 9);
    CHECK(m.head()[2].value == doctest::Approx(1.0 / 16.0));
    SpectrumModel m3 = sphere_plateau_spectrum({1.0, 1.0}, 3);
    CHECK(m3.head()[1].multiplicity == 3);
}

TEST_CASE("tail_stats on finite heads") {
    SpectrumModel m = SpectrumModel::from_plateaus({{1.0, 1}, {0.1, 3}});
    TailStats ts = tail_stats(m, 1);
    CHECK(ts.trace == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(ts.trace_sq == doctest::Approx(0.03).epsilon(1e-14));
    CHECK(ts.op_norm == doctest::Approx(0.1));
    TailStats all = tail_stats(m, 4);
    CHECK(all.trace == 0.0);
    CHECK(all.trace_sq == 0.0);
    CHECK(all.op_norm == 0.0);
}

TEST_CASE("pure power tail trace brackets pi^2/6") {
    // oracle: partial sum to 10^6 plus integral remainder bracket
    SpectrumModel m = SpectrumModel::from_plateaus({}, PowerTail{2.0, 1, 1.0});
    TailStats ts = tail_stats(m, 0);
    const double target = M_PI * M_PI / 6.0;
    CHECK(std::abs(ts.trace - target) <= ts.trace_err + 1e-12);
    CHECK(ts.trace_err < 1e-6 * target);
    // trace_sq against zeta(4) = pi^4 / 90
    const double zeta4 = std::pow(M_PI, 4) / 90.0;
    CHECK(std::abs(ts.trace_sq - zeta4) <= ts.trace_sq_err + 1e-12);
}

TEST_CASE("telescoping and ordering properties") {
    SpectrumModel finite = SpectrumModel::from_plateaus({{2.0, 2}, {0.5, 3}, {0.125, 4}});
    // junction valid: scale * 4^{-1.5} = 0.5 <= 1
    SpectrumModel tailed = SpectrumModel::from_plateaus({{1.0, 3}}, PowerTail{1.5, 4, 4.0});
    for (const SpectrumModel& m : {finite, tailed}) {
        for (std::int64_t j = 1; j <= 12; ++j)
            CHECK(m.eigenvalue(j) >= m.eigenvalue(j + 1));
        for (std::int64_t k = 0; k <= 10; ++k) {
            TailStats a = tail_stats(m, k);
            TailStats b = tail_stats(m, k + 1);
            CHECK(a.trace ==
                  doctest::Approx(m.eigenvalue(k + 1) + b.trace).epsilon(1e-10));
            CHECK(a.trace_sq <= a.op_norm * a.trace + 1e-12);
            CHECK(a.op_norm <= a.trace + 1e-12);
        }
    }
}

TEST_CASE("spectrum JSON round-trips") {
    SpectrumModel m = SpectrumModel::from_plateaus({{1.0, 2}, {0.25, 5}},
                                                   PowerTail{2.5, 8, 0.25 * std::pow(8.0, 2.5)});
    SpectrumModel back = SpectrumModel::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    CHECK(back.eigenvalue(9) == doctest::Approx(m.eigenvalue(9)));
    SpectrumModel no_tail = SpectrumModel::from_plateaus({{1.0, 1}});
    CHECK(SpectrumModel::from_json(no_tail.to_json()).to_json() == no_tail.to_json());
}

TEST_CASE("invalid spectra are rejected") {
    CHECK_THROWS_AS(SpectrumModel::from_plateaus({{1.0, 1}, {2.0, 1}}), ValidationError);
    CHECK_THROWS_AS(SpectrumModel::from_plateaus({{-1.0, 1}}), ValidationError);
    CHECK_THROWS_AS(SpectrumModel::from_plateaus({{1.0, 0}}), ValidationError);
    // tail exceeding the smallest head eigenvalue
    CHECK_THROWS_AS(SpectrumModel::from_plateaus({{0.001, 1}}, PowerTail{2.0, 2, 10.0}),
                    ValidationError);
    // tail not starting right after the head
    CHECK_THROWS_AS(SpectrumModel::from_plateaus({{1.0, 1}}, PowerTail{2.0, 5, 0.1}),
                    ValidationError);
}

TEST_CASE("empirical integral operator: linear kernel recovers the covariance") {
    // linear-cov kernel with spectrum diag(1, 0.5); iid gaussian coordinates
    SpectrumModel cov = SpectrumModel::from_plateaus({{1.0, 1}, {0.5, 1}});
    KernelSpec kernel = make_linear_cov_kernel(cov);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 2}};
    for (std::int64_t n : {10000, 100000}) {
        EmpiricalSpectrum emp = empirical_integral_operator(kernel, design, n, 11);
        double tol = 5.0 / std::sqrt(static_cast<double>(n));
        CHECK(std::abs(emp.eigenvalues[0] - 1.0) <= tol);
        CHECK(std::abs(emp.eigenvalues[1] - 0.5) <= tol * 0.5);
        CHECK_FALSE(emp.undersampled);
    }
}

TEST_CASE("empirical linear-gaussian convergence: top 5 within 5/sqrt(n)") {
    SpectrumModel cov =
        SpectrumModel::from_plateaus({{2.0, 1}, {1.0, 1}, {0.5, 1}, {0.25, 1}, {0.125, 1}});
    KernelSpec kernel = make_linear_cov_kernel(cov);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 5}};
    for (std::int64_t n : {10000, 100000}) {
        EmpiricalSpectrum emp = empirical_integral_operator(kernel, design, n, 27);
        double tol = 5.0 / std::sqrt(static_cast<double>(n));
        for (int j = 0; j < 5; ++j) {
            double rel = std::abs(emp.eigenvalues[j] - cov.eigenvalue(j + 1)) /
                         cov.eigenvalue(j + 1);
            CHECK(rel <= tol);
        }
    }
}

TEST_CASE("empirical integral operator: constant kernel") {
    KernelSpec kernel = make_poly_kernel({2.0, 0.0}, 3);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 3}};
    EmpiricalSpectrum emp = empirical_integral_operator(kernel, design, 1000, 5);
    CHECK(emp.eigenvalues[0] == doctest::Approx(2.0));
    CHECK(emp.eigenvalues.size() == 1);
}

TEST_CASE("poly plateau spectrum vs Monte Carlo oracle, factor-8 slack") {
    // (0,1,1) at d=2: multiplicities smear under the dropped conjugation, but
    // index-wise plateau heights stay within a factor of 8
    SpectrumModel model = poly_plateau_spectrum({0.0, 1.0, 1.0}, 2);
    KernelSpec kernel = make_poly_kernel({0.0, 1.0, 1.0}, 2);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 2}};
    EmpiricalSpectrum emp = empirical_integral_operator(kernel, design, 200000, 21);
    REQUIRE(emp.eigenvalues.size() == model.finite_rank());
    for (Eigen::Index j = 0; j < emp.eigenvalues.size(); ++j) {
        double ratio = emp.eigenvalues[j] / model.eigenvalue(j + 1);
        CHECK(ratio <= 8.0);
        CHECK(ratio >= 1.0 / 8.0);
    }
    // self-consistency across two seeds within 2%
    EmpiricalSpectrum emp2 = empirical_integral_operator(kernel, design, 200000, 22);
    for (Eigen::Index j = 0; j < emp.eigenvalues.size(); ++j)
        CHECK(emp2.eigenvalues[j] ==
              doctest::Approx(emp.eigenvalues[j]).epsilon(0.02));
}

TEST_CASE("empirical operator flags undersampling") {
    KernelSpec kernel = make_poly_kernel({1.0, 1.0}, 8);
    DesignSpec design{IidCoordinates{Marginal::Gaussian, 8}};
    EmpiricalSpectrum emp = empirical_integral_operator(kernel, design, 5, 1);
    CHECK(emp.undersampled);
}

TEST_CASE("group_into_plateaus merges near-equal values") {
    Eigen::VectorXd eigs(6);
    eigs << 1.01, 1.0, 0.99, 0.30, 0.299, 1e-15;
    SpectrumModel m = group_into_plateaus(eigs, 0.05, 1e-12);
    REQUIRE(m.head().size() == 2);
    CHECK(m.head()[0].multiplicity == 3);
    CHECK(m.head()[1].multiplicity == 2);
    CHECK(m.head()[0].value == doctest::Approx(1.0).epsilon(0.02));
}
