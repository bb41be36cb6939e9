#include <doctest.h>

#include <cmath>
#include <vector>

#include "krr/prng.hpp"

using namespace krr;

TEST_CASE("keyed streams are reproducible and role-disjoint") {
    Prng a(42, 3, Role::Design);
    Prng b(42, 3, Role::Design);
    Prng c(42, 3, Role::Noise);
    bool same = true, differs = false;
    for (int i = 0; i < 256; ++i) {
        auto x = a.next_u64();
        same = same && (x == b.next_u64());
        differs = differs || (x != c.next_u64());
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("gaussian draws have the right first two moments") {
    Prng rng(7, 0, Role::Design);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double g = rng.gaussian();
        sum += g;
        sum_sq += g * g;
    }
    double mean = sum / n;
    double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform_pm has unit variance, rademacher is a sign") {
    Prng rng(9, 1, Role::Design);
    const int n = 200000;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform_pm();
        REQUIRE(std::abs(u) <= 1.7320508075688772 + 1e-12);
        sum_sq += u * u;
    }
    CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.02));
    Prng rng2(9, 2, Role::Design);
    for (int i = 0; i < 64; ++i) {
        double r = rng2.rademacher();
        CHECK((r == 1.0 || r == -1.0));
    }
}
