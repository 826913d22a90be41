#include <doctest.h>

#include <cmath>

#include "udavi/rng.hpp"
#include "udavi/schedule.hpp"

using namespace udavi;

TEST_CASE("linear schedule: T=1") {
    ScheduleTable s = ScheduleTable::linear(1, 0.1, 0.1);
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9));
}

TEST_CASE("two-step cumulative product") {
    ScheduleTable s = ScheduleTable::from_betas({0.1, 0.2});
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9));
    CHECK(s.alpha_bar(2) == doctest::Approx(0.72));
}

TEST_CASE("ddpm-sized schedule matches the independent cumulative product") {
    // Frozen from an independent cumulative-product script (float64).
    ScheduleTable s = ScheduleTable::linear(1000, 1e-4, 0.02);
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9999).epsilon(1e-12));
    CHECK(s.alpha_bar(1000) == doctest::Approx(4.0358297653756761e-05).epsilon(1e-9));
    ScheduleTable s400 = ScheduleTable::linear(400, 1e-4, 0.02);
    CHECK(s400.alpha_bar(400) == doctest::Approx(0.017472873372638704).epsilon(1e-9));
}

TEST_CASE("alpha_bar is strictly decreasing and in (0,1)") {
    ScheduleTable s = ScheduleTable::linear(100, 1e-4, 0.02);
    double prev = 1.0;
    for (int t = 1; t <= 100; ++t) {
        double ab = s.alpha_bar(t);
        CHECK(ab > 0.0);
        CHECK(ab < 1.0);
        CHECK(ab < prev);
        prev = ab;
    }
}

TEST_CASE("invalid schedule parameters are rejected") {
    CHECK_THROWS_AS(ScheduleTable::linear(10, 0.0, 0.02), Error);
    CHECK_THROWS_AS(ScheduleTable::linear(10, 0.3, 0.2), Error);
    CHECK_THROWS_AS(ScheduleTable::linear(10, 0.5, 1.0), Error);
    CHECK_THROWS_AS(ScheduleTable::linear(0, 1e-4, 0.02), Error);
}

TEST_CASE("diffuse endpoints and exact zero-signal form") {
    ScheduleTable s = ScheduleTable::from_betas({1e-6, 1e-6});
    SeededRng rng(2);
    ImageGrid x0 = ImageGrid::constant(3, 3, 1, 0.5, RangeTag::ModelSpace);
    ImageGrid z = gaussian_sample(rng, 3, 3, 1);

    // t=1 with tiny beta: output ~ x0 within sqrt(beta)*||z|| scale.
    ImageGrid xt = diffuse(x0, 1, z, s);
    double zmax = 0.0;
    for (double v : z.values) zmax = std::max(zmax, std::fabs(v));
    CHECK(max_abs_diff(xt, x0) <= std::sqrt(1e-6) * (zmax + 1.0));

    // x0 = 0: output is exactly sqrt(1-ab)*z.
    ImageGrid zero = ImageGrid::zeros(3, 3, 1, RangeTag::ModelSpace);
    ImageGrid xt0 = diffuse(zero, 2, z, s);
    double sb = std::sqrt(1.0 - s.alpha_bar(2));
    for (size_t i = 0; i < z.values.size(); ++i) {
        CHECK(xt0.values[i] == sb * z.values[i]);
    }
}

TEST_CASE("diffuse out-of-range timestep errors") {
    ScheduleTable s = ScheduleTable::linear(10, 1e-4, 0.02);
    SeededRng rng(3);
    ImageGrid x0 = ImageGrid::zeros(2, 2, 1, RangeTag::ModelSpace);
    ImageGrid z = gaussian_sample(rng, 2, 2, 1);
    CHECK_THROWS_AS(diffuse(x0, 0, z, s), Error);
    CHECK_THROWS_AS(diffuse(x0, 11, z, s), Error);
}

TEST_CASE("diffuse Monte-Carlo variance matches 1 - alpha_bar") {
    ScheduleTable s = ScheduleTable::linear(40, 1e-4, 0.02);
    SeededRng rng(17);
    int t = 25;
    double expect = 1.0 - s.alpha_bar(t);
    const int n = 10000;
    double sum = 0.0, sumsq = 0.0;
    ImageGrid zero = ImageGrid::zeros(1, 1, 1, RangeTag::ModelSpace);
    for (int i = 0; i < n; ++i) {
        SeededRng r = rng.derive(RngPurpose::TrainDiffuse, uint64_t(i), 0);
        ImageGrid z = gaussian_sample(r, 1, 1, 1);
        ImageGrid xt = diffuse(zero, t, z, s);
        sum += xt.values[0];
        sumsq += xt.values[0] * xt.values[0];
    }
    double var = sumsq / n - (sum / n) * (sum / n);
    CHECK(var == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("diffuse is affine in x0 for affine combinations") {
    ScheduleTable s = ScheduleTable::linear(20, 1e-3, 0.02);
    SeededRng rng(19);
    ImageGrid a = gaussian_sample(rng, 4, 4, 1);
    ImageGrid b = gaussian_sample(rng, 4, 4, 1);
    ImageGrid z = gaussian_sample(rng, 4, 4, 1);
    double alpha = 0.3;
    ImageGrid combo = axpy(scale(a, alpha), 1.0 - alpha, b);
    ImageGrid lhs = diffuse(combo, 7, z, s);
    ImageGrid rhs = axpy(scale(diffuse(a, 7, z, s), alpha), 1.0 - alpha, diffuse(b, 7, z, s));
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("ikl weight values and monotonicity") {
    ScheduleTable s = ScheduleTable::from_betas({0.5});
    CHECK(s.ikl_weight(1) == doctest::Approx(1.0));  // alpha_bar = 0.5

    ScheduleTable s2 = ScheduleTable::from_betas({0.01});
    CHECK(s2.ikl_weight(1) == doctest::Approx(std::sqrt(99.0)).epsilon(1e-12));

    ScheduleTable def = ScheduleTable::linear(200, 1e-4, 0.02);
    double prev = 1e300;
    for (int t = 1; t <= 200; ++t) {
        double w = def.ikl_weight(t);
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("bridge coefficients: endpoints are exact") {
    ScheduleTable s = ScheduleTable::linear(50, 1e-4, 0.02);
    auto [s0, sb0] = s.bridge_coeffs(0.0);
    CHECK(s0 == 1.0);
    CHECK(sb0 == 0.0);
    auto [s1, sb1] = s.bridge_coeffs(1.0);
    CHECK(s1 == 0.0);
    CHECK(sb1 == doctest::Approx(std::sqrt(1.0 - std::exp(-s.beta_total()))).epsilon(1e-15));
}

TEST_CASE("bridge coefficients: constant-beta closed form at a = 1/2") {
    // Discrete betas c/T make the continuous extension constant at c.
    double c = 0.8;
    int T = 10;
    std::vector<double> betas(size_t(T), c / T);
    ScheduleTable s = ScheduleTable::from_betas(betas);
    CHECK(s.beta_total() == doctest::Approx(c).epsilon(1e-12));
    auto [sa, sba] = s.bridge_coeffs(0.5);
    CHECK(sa == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sba == doctest::Approx(std::sqrt(1.0 - std::exp(-c / 2.0))).epsilon(1e-12));
}

TEST_CASE("bridge coefficients: monotone and continuous in a") {
    ScheduleTable s = ScheduleTable::linear(37, 2e-4, 0.015);
    double prev_sa = 2.0, prev_sba = -1.0;
    double prev_a = -1.0;
    for (int k = 0; k <= 200; ++k) {
        double a = double(k) / 200.0;
        auto [sa, sba] = s.bridge_coeffs(a);
        CHECK(sa < prev_sa);
        CHECK(sba > prev_sba);
        if (prev_a >= 0.0) {
            // continuity: small step, small change
            CHECK(std::fabs(sa - prev_sa) < 0.02);
            CHECK(std::fabs(sba - prev_sba) < 0.1);
        }
        prev_sa = sa;
        prev_sba = sba;
        prev_a = a;
    }
    CHECK_THROWS_AS(s.bridge_coeffs(-0.01), Error);
    CHECK_THROWS_AS(s.bridge_coeffs(1.01), Error);
}

TEST_CASE("default schedule integral: beta_total is the trapezoidal sum") {
    ScheduleTable s = ScheduleTable::linear(400, 1e-4, 0.02);
    double sum = 0.0;
    for (double b : s.betas()) sum += b;
    // Piecewise-linear extension with the left edge pinned to beta_1:
    // integral = sum(beta) + (beta_1 - beta_T)/2 exactly.
    double expect = sum + (s.betas().front() - s.betas().back()) / 2.0;
    CHECK(s.beta_total() == doctest::Approx(expect).epsilon(1e-12));
    // It stays within ~1% of the plain discrete sum, so sigma_bar(1) ~ 1.
    CHECK(std::fabs(s.beta_total() - sum) / sum < 0.01);
}
