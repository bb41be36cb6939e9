#include <doctest.h>

#include <cmath>

#include "krr/config.hpp"
#include "krr/experiments.hpp"

using namespace krr;

namespace {

ExperimentConfig md_config(std::int64_t trials, std::int64_t offset) {
    ExperimentConfig cfg;
    cfg.id = "md";
    cfg.kernel = make_poly_kernel({1.0, 1.0, 1.0}, 6);
    cfg.design = DesignSpec{IidCoordinates{Marginal::Gaussian, 6}};
    Eigen::VectorXd c = Eigen::VectorXd::Zero(10);
    c[0] = 0.5;
    c[1] = 1.0;
    c[2] = -0.7;
    cfg.target = TargetSpec{EigenCoeffs{c}};
    cfg.noise = {NoiseSpec::Law::Gaussian, 0.3};
    cfg.sweep.Ns = {12, 20};
    cfg.trials = trials;
    cfg.trial_offset = offset;
    cfg.seed = 99;
    cfg.n_test = 2000;
    return cfg;
}

} // namespace

TEST_CASE("curve points recompute their r_star from the rates module") {
    ExperimentConfig cfg = md_config(4, 0);
    auto curve = run_multiple_descent(cfg);
    REQUIRE(curve.size() == 2);
    SpectrumModel spectrum = poly_plateau_spectrum({1.0, 1.0, 1.0}, 6);
    Eigen::VectorXd c = target_coefficients(*cfg.target, spectrum);
    std::vector<double> coeffs(c.data(), c.data() + c.size());
    for (const auto& p : curve) {
        RateReport again = rate_report(spectrum, coeffs, cfg.noise.sigma_xi, p.N, p.lambda,
                                       p.k_used, cfg.rate_config);
        CHECK(p.r_star == again.r_star);
        CHECK(p.err_q25 <= p.err_median);
        CHECK(p.err_median <= p.err_q75);
    }
}

TEST_CASE("trial splitting pools to the same per-trial errors") {
    auto full = run_multiple_descent(md_config(8, 0));
    auto first = run_multiple_descent(md_config(4, 0));
    auto second = run_multiple_descent(md_config(4, 4));
    for (std::size_t point = 0; point < full.size(); ++point) {
        REQUIRE(full[point].trial_errors.size() == 8);
        for (int t = 0; t < 4; ++t) {
            CHECK(full[point].trial_errors[static_cast<std::size_t>(t)] ==
                  first[point].trial_errors[static_cast<std::size_t>(t)]);
            CHECK(full[point].trial_errors[static_cast<std::size_t>(t + 4)] ==
                  second[point].trial_errors[static_cast<std::size_t>(t)]);
        }
    }
}

TEST_CASE("threads do not change the results") {
    ExperimentConfig cfg = md_config(6, 0);
    auto serial = run_multiple_descent(cfg);
    cfg.threads = 4;
    auto parallel = run_multiple_descent(cfg);
    for (std::size_t i = 0; i < serial.size(); ++i)
        for (std::size_t t = 0; t < serial[i].trial_errors.size(); ++t)
            CHECK(serial[i].trial_errors[t] == parallel[i].trial_errors[t]);
}

TEST_CASE("noiseless realizable head: error decays with N") {
    // sigma_xi = 0 and f* supported on the degree <= 1 head: once N passes
    // 2 dim(head), interpolation recovers the head and the error is tiny
    ExperimentConfig cfg;
    cfg.kernel = make_poly_kernel({1.0, 1.0}, 4); // p = 5
    cfg.design = DesignSpec{IidCoordinates{Marginal::Gaussian, 4}};
    Eigen::VectorXd c(5);
    c << 1.0, 0.5, -0.5, 0.25, -0.25;
    cfg.target = TargetSpec{EigenCoeffs{c}};
    cfg.noise = {NoiseSpec::Law::Gaussian, 0.0};
    cfg.sweep.Ns = {12, 24, 48};
    cfg.trials = 20;
    cfg.seed = 7;
    cfg.n_test = 2000;
    auto curve = run_multiple_descent(cfg);
    CHECK(curve[0].err_median <= 1e-4);
    CHECK(curve[1].err_median <= curve[0].err_median + 1e-9);
    CHECK(curve[2].err_median <= curve[1].err_median + 1e-9);
}

TEST_CASE("linearization point shape") {
    ExperimentConfig cfg;
    cfg.kernel = make_poly_kernel({0.0, 1.0, 1.0}, 20);
    cfg.design = DesignSpec{IidCoordinates{Marginal::Gaussian, 20}};
    cfg.sweep.Ns = {30};
    cfg.sweep.ds = {20, 40};
    cfg.trials = 3;
    cfg.seed = 5;
    auto points = run_linearization(cfg);
    REQUIRE(points.size() == 2);
    CHECK(points[0].h1 == doctest::Approx(2.0));
    for (const auto& p : points) {
        CHECK(p.sigma_min_med > 0.0);
        CHECK(p.sigma_max_med >= p.sigma_min_med);
        CHECK(p.cond_med >= 1.0);
    }
    // a constant term is rejected
    ExperimentConfig bad = cfg;
    bad.kernel = make_poly_kernel({1.0, 1.0}, 20);
    CHECK_THROWS_AS(run_linearization(bad), ValidationError);
    // single point: both extremes equal the diagonal
    ExperimentConfig one = cfg;
    one.sweep.Ns = {1};
    one.sweep.ds = {30};
    auto single = run_linearization(one);
    CHECK(single[0].sigma_min_med == doctest::Approx(single[0].sigma_max_med));
    CHECK(single[0].cond_med == doctest::Approx(1.0));
}

TEST_CASE("diag concentration: exact zeros and the d-trend") {
    // Rademacher with h(t) = t: exactly zero
    ExperimentConfig cfg;
    cfg.kernel = make_poly_kernel({0.0, 1.0}, 10);
    cfg.design = DesignSpec{IidCoordinates{Marginal::Rademacher, 10}};
    cfg.sweep.Ns = {50};
    cfg.sweep.ds = {10};
    cfg.trials = 5;
    cfg.seed = 3;
    auto zero = run_diag_concentration(cfg);
    CHECK(zero[0].stat_med == 0.0);

    // sphere design: exactly zero for inner-product kernels
    cfg.kernel = make_poly_kernel({1.0, 1.0, 1.0}, 10);
    cfg.design = DesignSpec{UniformSphere{10}};
    auto sph = run_diag_concentration(cfg);
    CHECK(sph[0].stat_med < 1e-10);
}

TEST_CASE("gaussian equivalence arms share spectrum and rate") {
    ExperimentConfig cfg;
    cfg.kernel = make_poly_kernel({1.0, 1.0}, 5);
    cfg.design = DesignSpec{IidCoordinates{Marginal::Gaussian, 5}};
    Eigen::VectorXd c = Eigen::VectorXd::Zero(6);
    c[1] = 1.0;
    c[5] = 0.3;
    cfg.target = TargetSpec{EigenCoeffs{c}};
    cfg.noise = {NoiseSpec::Law::Gaussian, 0.4};
    cfg.sweep.Ns = {16};
    cfg.trials = 6;
    cfg.seed = 21;
    cfg.n_test = 2000;
    cfg.geq_b = 0.25;
    auto curve = run_gaussian_equivalence(cfg);
    REQUIRE(curve.size() == 2);
    CHECK(curve[0].r_star == curve[1].r_star);
    CHECK(curve[0].k_used == curve[1].k_used);
    CHECK(curve[0].err_median > 0.0);
    CHECK(curve[1].err_median > 0.0);
}

TEST_CASE("smooth rate: slopes and the degenerate flag") {
    ExperimentConfig cfg;
    cfg.smooth_alpha = 2.0;
    cfg.smooth_s = 1.0;
    cfg.noise = {NoiseSpec::Law::Gaussian, 1.0};
    for (int e = 8; e <= 16; ++e) cfg.sweep.Ns.push_back(1 << e);
    auto res = run_smooth_rate(cfg);
    CHECK_FALSE(res.degenerate);
    CHECK(std::abs(res.slope - (-1.0 / 3.0)) <= 0.05);

    ExperimentConfig degen = cfg;
    degen.noise.sigma_xi = 0.0;
    degen.target = TargetSpec{EigenCoeffs{Eigen::VectorXd::Zero(4)}};
    auto flat = run_smooth_rate(degen);
    CHECK(flat.degenerate);
}

TEST_CASE("conjugate run: aligned noiseless-ish baseline") {
    ExperimentConfig cfg;
    cfg.conj_width = 64;
    cfg.conj_n2 = 16;
    cfg.conj_alignment = 1.0;
    cfg.conj_a_star = 0.0; // zero target: error collapses to noise-driven level
    cfg.conj_activation = "tanh";
    cfg.noise = {NoiseSpec::Law::Gaussian, 0.0};
    cfg.trials = 2;
    cfg.n_test = 500;
    cfg.seed = 17;
    auto report = run_conjugate(cfg);
    CHECK(report.err_median <= 1e-10);
    CHECK(report.approx_term == 0.0);
    // orthonormal-rows spectrum check: top eigenvalue ||sigma||^2 / m at k=1
    CHECK(report.top_eigenvalue ==
          doctest::Approx(report.sigma_l2 * report.sigma_l2 / 64.0).epsilon(1e-10));
    CHECK_THROWS_AS(
        [] {
            ExperimentConfig bad;
            bad.conj_width = 1;
            bad.conj_n2 = 4;
            run_conjugate(bad);
        }(),
        ValidationError);
}

TEST_CASE("config parsing: defaults, rejects, round-trip") {
    nlohmann::json doc = {
        {"experiment", "md"},
        {"kernel", {{"type", "inner_product_poly"}, {"coeffs", {1.0, 1.0}}, {"d", 4}}},
        {"design", {{"type", "iid"}, {"marginal", "gaussian"}, {"d", 4}}},
        {"target", {{"type", "eigen_coeffs"}, {"coeffs", {0.5, 1.0}}}},
        {"noise", {{"sigma_xi", 0.5}}},
        {"sweep", {{"N", {10, 20}}}},
        {"seed", 11}};
    ExperimentConfig cfg = parse_config(doc);
    CHECK(cfg.trials == 20);                                  // default
    CHECK(cfg.lambda_policy.mode == LambdaPolicy::Mode::Zero); // default
    CHECK(cfg.noise.sigma_xi == 0.5);

    nlohmann::json bad = doc;
    bad["unknown_key"] = 1;
    CHECK_THROWS_AS(parse_config(bad), ValidationError);
    nlohmann::json bad2 = doc;
    bad2["kernel"] = {{"type", "inner_product_poly"}, {"coeffs", {1.0}}, {"d", 4}, {"junk", 0}};
    CHECK_THROWS_AS(parse_config(bad2), ValidationError);

    // serialize-parse-serialize fixpoint
    nlohmann::json echo = config_echo(cfg);
    ExperimentConfig cfg2 = parse_config(echo);
    CHECK(config_echo(cfg2).dump() == echo.dump());
}
