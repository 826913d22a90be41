#include <doctest.h>

#include <cmath>

#include "udavi/grid.hpp"
#include "udavi/linalg.hpp"
#include "udavi/rng.hpp"

using namespace udavi;

TEST_CASE("finite_diff_gradient: quadratic is exact up to rounding") {
    auto f = [](std::span<const double> x) { return x[0] * x[0]; };
    std::vector<double> x = {3.0};
    auto g = finite_diff_gradient(f, x, 1e-5);
    CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("finite_diff_gradient: constant function gives the zero vector") {
    auto f = [](std::span<const double>) { return 4.25; };
    std::vector<double> x = {1.0, -2.0, 0.5};
    auto g = finite_diff_gradient(f, x, 1e-6);
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("finite_diff_gradient: score of the standard normal at 1") {
    auto f = [](std::span<const double> x) {
        return -0.5 * x[0] * x[0] - 0.5 * std::log(2.0 * M_PI);
    };
    std::vector<double> x = {1.0};
    auto g = finite_diff_gradient(f, x, 1e-5);
    CHECK(g[0] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("finite_diff_gradient: non-finite evaluation errors") {
    auto f = [](std::span<const double> x) { return std::log(x[0]); };
    std::vector<double> x = {1e-7};  // probe at x - h goes negative
    CHECK_THROWS_AS(finite_diff_gradient(f, x, 1e-5), Error);
}

TEST_CASE("cholesky_solve: identity returns b") {
    DenseMatrix a = DenseMatrix::identity(4);
    std::vector<double> b = {1.0, -2.0, 3.5, 0.25};
    auto x = cholesky_solve(a, b);
    for (int i = 0; i < 4; ++i) CHECK(x[size_t(i)] == doctest::Approx(b[size_t(i)]));
}

TEST_CASE("cholesky_solve: diagonal case") {
    DenseMatrix a(2, 2);
    a.at(0, 0) = 2.0;
    a.at(1, 1) = 4.0;
    std::vector<double> b = {2.0, 8.0};
    auto x = cholesky_solve(a, b);
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));
}

TEST_CASE("cholesky_solve: random SPD 16x16 multiply-back residual") {
    SeededRng rng(11);
    const int n = 16;
    DenseMatrix m(n, n);
    for (double& v : m.entries) v = rng.next_normal();
    // A = M M^T + n I is SPD and reasonably conditioned.
    DenseMatrix a = m.matmul(m.transpose());
    for (int i = 0; i < n; ++i) a.at(i, i) += double(n);
    std::vector<double> b(size_t(n), 0.0);
    for (double& v : b) v = rng.next_normal();
    auto x = cholesky_solve(a, b);
    auto back = a.matvec(x);
    double rnorm = 0.0, bnorm = 0.0;
    for (int i = 0; i < n; ++i) {
        rnorm += (back[size_t(i)] - b[size_t(i)]) * (back[size_t(i)] - b[size_t(i)]);
        bnorm += b[size_t(i)] * b[size_t(i)];
    }
    CHECK(std::sqrt(rnorm) <= 1e-10 * std::sqrt(bnorm));
}

TEST_CASE("cholesky on a non-SPD matrix names the failing pivot") {
    DenseMatrix a(2, 2);
    a.at(0, 0) = 1.0;
    a.at(0, 1) = a.at(1, 0) = 3.0;
    a.at(1, 1) = 1.0;  // determinant negative
    try {
        cholesky_solve(a, std::vector<double>{1.0, 1.0});
        FAIL("expected a cholesky error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("pivot 1") != std::string::npos);
    }
    CHECK_FALSE(a.verify_spd());
    DenseMatrix good = DenseMatrix::identity(3);
    CHECK(good.verify_spd());
    CHECK(good.spd_verified);
}

TEST_CASE("grid invariants: memory-space range is enforced") {
    ImageGrid g(2, 2, 1, RangeTag::MemorySpace);
    g.at(0, 0, 0) = 1.5;
    CHECK_THROWS_AS(g.check_range("test"), Error);
    g.at(0, 0, 0) = 0.5;
    g.check_range("test");
}

TEST_CASE("grid finiteness check") {
    ImageGrid g(2, 2, 1, RangeTag::Unbounded);
    g.at(1, 1, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(g.check_finite("test"), Error);
}

TEST_CASE("grid storage is row-major channel-minor") {
    ImageGrid g(2, 3, 2, RangeTag::Unbounded);
    g.at(1, 2, 1) = 7.0;
    CHECK(g.values[size_t((1 * 3 + 2) * 2 + 1)] == 7.0);
}

TEST_CASE("upsample_nearest replicates blocks") {
    ImageGrid y(1, 2, 1, RangeTag::Unbounded);
    y.at(0, 0, 0) = 1.0;
    y.at(0, 1, 0) = 2.0;
    ImageGrid up = upsample_nearest(y, 2);
    CHECK(up.height == 2);
    CHECK(up.width == 4);
    CHECK(up.at(0, 0, 0) == 1.0);
    CHECK(up.at(1, 1, 0) == 1.0);
    CHECK(up.at(0, 2, 0) == 2.0);
    CHECK(up.at(1, 3, 0) == 2.0);
}
