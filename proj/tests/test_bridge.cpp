#include <doctest.h>

#include <cmath>

#include "udavi/bridge.hpp"

using namespace udavi;

namespace {

struct BridgeFixture {
    ScheduleTable sched = ScheduleTable::linear(40, 1e-4, 0.02);
    SeededRng rng{101};
    ImageGrid x0, y, z, u;

    BridgeFixture() {
        x0 = gaussian_sample(rng, 4, 4, 1);
        x0.range_tag = RangeTag::ModelSpace;
        y = gaussian_sample(rng, 4, 4, 1);
        y.range_tag = RangeTag::ModelSpace;
        z = gaussian_sample(rng, 4, 4, 1);
        u = ImageGrid::zeros(4, 4, 1, RangeTag::MemorySpace);
    }
};

}  // namespace

TEST_CASE("bridge at a=0 returns the clean image exactly") {
    BridgeFixture f;
    BridgeDraw d = sample_bridge(f.x0, f.y, 0.0, 0.1, f.z, f.sched);
    for (size_t i = 0; i < f.x0.values.size(); ++i) {
        CHECK(d.y_a.values[i] == f.x0.values[i]);
    }
    CHECK(d.sigma_a == 1.0);
    CHECK(d.sigma_bar_a == 0.0);
}

TEST_CASE("bridge at a=1 is the measurement plus scaled noise") {
    BridgeFixture f;
    double h = 0.1;
    BridgeDraw d = sample_bridge(f.x0, f.y, 1.0, h, f.z, f.sched);
    double sb1 = f.sched.bridge_coeffs(1.0).second;
    for (size_t i = 0; i < f.y.values.size(); ++i) {
        CHECK(d.y_a.values[i] == doctest::Approx(f.y.values[i] + h * sb1 * f.z.values[i])
                                     .epsilon(1e-15));
    }
}

TEST_CASE("bridge with h=0 at a=0.5 is the deterministic combination") {
    BridgeFixture f;
    BridgeDraw d = sample_bridge(f.x0, f.y, 0.5, 0.0, f.z, f.sched);
    auto [sa, sba] = f.sched.bridge_coeffs(0.5);
    (void)sba;
    for (size_t i = 0; i < f.y.values.size(); ++i) {
        CHECK(d.y_a.values[i] ==
              doctest::Approx((1.0 - sa) * f.y.values[i] + sa * f.x0.values[i]).epsilon(1e-15));
    }
}

TEST_CASE("uncertainty-aware bridge with lambda=0 is bit-identical to the plain bridge") {
    BridgeFixture f;
    for (double a : {0.0, 0.3, 0.77, 1.0}) {
        BridgeDraw plain = sample_bridge(f.x0, f.y, a, 0.1, f.z, f.sched);
        // u arbitrary in [0,1]; lambda = 0 must erase it.
        ImageGrid u = f.u;
        for (size_t i = 0; i < u.values.size(); ++i) u.values[i] = double(i) / 16.0;
        BridgeDraw guided = sample_bridge_uncertain(f.x0, f.y, a, 0.1, f.z, u, 0.0, f.sched);
        CHECK(bit_equal(plain.y_a, guided.y_a));
    }
}

TEST_CASE("uniform u=1 with lambda=1 doubles the perturbation term") {
    BridgeFixture f;
    double a = 0.6, h = 0.1;
    ImageGrid ones = ImageGrid::constant(4, 4, 1, 1.0, RangeTag::MemorySpace);
    BridgeDraw plain = sample_bridge(f.x0, f.y, a, h, f.z, f.sched);
    BridgeDraw guided = sample_bridge_uncertain(f.x0, f.y, a, h, f.z, ones, 1.0, f.sched);
    auto [sa, sba] = f.sched.bridge_coeffs(a);
    (void)sa;
    for (size_t i = 0; i < f.z.values.size(); ++i) {
        double base = plain.y_a.values[i] - h * sba * f.z.values[i];
        double pert_plain = plain.y_a.values[i] - base;
        double pert_guided = guided.y_a.values[i] - base;
        CHECK(pert_guided == doctest::Approx(2.0 * pert_plain).epsilon(1e-12));
    }
}

TEST_CASE("single hot pixel in u scales only that pixel's noise") {
    BridgeFixture f;
    double a = 0.5, h = 0.2, lambda = 2.0;
    ImageGrid u = ImageGrid::zeros(4, 4, 1, RangeTag::MemorySpace);
    u.at(2, 1, 0) = 0.5;
    BridgeDraw plain = sample_bridge(f.x0, f.y, a, h, f.z, f.sched);
    BridgeDraw guided = sample_bridge_uncertain(f.x0, f.y, a, h, f.z, u, lambda, f.sched);
    auto [sa, sba] = f.sched.bridge_coeffs(a);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            double expect = (1.0 - sa) * f.y.at(r, c, 0) + sa * f.x0.at(r, c, 0) +
                            h * sba * f.z.at(r, c, 0) * (r == 2 && c == 1 ? 2.0 : 1.0);
            CHECK(guided.y_a.at(r, c, 0) == doctest::Approx(expect).epsilon(1e-14));
            if (!(r == 2 && c == 1)) {
                CHECK(guided.y_a.at(r, c, 0) == plain.y_a.at(r, c, 0));
            }
        }
    }
}

TEST_CASE("u outside [0,1] is rejected") {
    BridgeFixture f;
    ImageGrid u = f.u;
    u.values[3] = 1.5;
    CHECK_THROWS_AS(sample_bridge_uncertain(f.x0, f.y, 0.5, 0.1, f.z, u, 1.0, f.sched), Error);
}

TEST_CASE("shape mismatches are rejected") {
    BridgeFixture f;
    ImageGrid bad = ImageGrid::zeros(3, 4, 1, RangeTag::ModelSpace);
    CHECK_THROWS_AS(sample_bridge(f.x0, bad, 0.5, 0.1, f.z, f.sched), Error);
}

TEST_CASE("bridge mean and variance match the closed form (Monte Carlo)") {
    BridgeFixture f;
    double a = 0.7, h = 0.15, lambda = 1.5;
    ImageGrid u = ImageGrid::zeros(4, 4, 1, RangeTag::MemorySpace);
    u.at(0, 0, 0) = 1.0;
    auto [sa, sba] = f.sched.bridge_coeffs(a);
    const int n = 20000;
    double sum00 = 0.0, sumsq00 = 0.0, sum11 = 0.0, sumsq11 = 0.0;
    SeededRng rng(7);
    for (int i = 0; i < n; ++i) {
        SeededRng r = rng.derive(RngPurpose::TrainBridge, uint64_t(i), 0);
        ImageGrid z = gaussian_sample(r, 4, 4, 1);
        BridgeDraw d = sample_bridge_uncertain(f.x0, f.y, a, h, z, u, lambda, f.sched);
        sum00 += d.y_a.at(0, 0, 0);
        sumsq00 += d.y_a.at(0, 0, 0) * d.y_a.at(0, 0, 0);
        sum11 += d.y_a.at(1, 1, 0);
        sumsq11 += d.y_a.at(1, 1, 0) * d.y_a.at(1, 1, 0);
    }
    double mean00 = sum00 / n, var00 = sumsq00 / n - mean00 * mean00;
    double mean11 = sum11 / n, var11 = sumsq11 / n - mean11 * mean11;
    double expect_mean00 = (1.0 - sa) * f.y.at(0, 0, 0) + sa * f.x0.at(0, 0, 0);
    double expect_mean11 = (1.0 - sa) * f.y.at(1, 1, 0) + sa * f.x0.at(1, 1, 0);
    CHECK(mean00 == doctest::Approx(expect_mean00).epsilon(0.05));
    CHECK(mean11 == doctest::Approx(expect_mean11).epsilon(0.05));
    double s = h * sba;
    CHECK(var00 == doctest::Approx(s * s * (1.0 + lambda) * (1.0 + lambda)).epsilon(0.06));
    CHECK(var11 == doctest::Approx(s * s).epsilon(0.06));
}

TEST_CASE("monotone noise: larger lambda never shrinks the deviation") {
    BridgeFixture f;
    double a = 0.4, h = 0.1;
    ImageGrid u = ImageGrid::zeros(4, 4, 1, RangeTag::MemorySpace);
    for (size_t i = 0; i < u.values.size(); ++i) u.values[i] = double(i % 5) / 4.0;
    auto [sa, sba] = f.sched.bridge_coeffs(a);
    (void)sba;
    std::vector<double> prev_dev(f.z.size(), -1.0);
    for (double lambda : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        BridgeDraw d = sample_bridge_uncertain(f.x0, f.y, a, h, f.z, u, lambda, f.sched);
        for (size_t i = 0; i < d.y_a.values.size(); ++i) {
            double mean = (1.0 - sa) * f.y.values[i] + sa * f.x0.values[i];
            double dev = std::fabs(d.y_a.values[i] - mean);
            CHECK(dev >= prev_dev[i]);
            prev_dev[i] = dev;
        }
    }
}

TEST_CASE("inference input: h=0 returns the measurement unchanged") {
    BridgeFixture f;
    SeededRng rng(55);
    ImageGrid out = inference_input(f.y, 0.0, rng);
    CHECK(max_abs_diff(out, f.y) == 0.0);
}

TEST_CASE("inference input: per-pixel std matches h over many draws") {
    BridgeFixture f;
    double h = 0.1;
    SeededRng rng(66);
    const int n = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        SeededRng r = rng.derive(RngPurpose::Inference, uint64_t(i), 0);
        ImageGrid out = inference_input(f.y, h, r);
        double d = out.at(1, 2, 0) - f.y.at(1, 2, 0);
        sum += d;
        sumsq += d * d;
    }
    double std = std::sqrt(sumsq / n - (sum / n) * (sum / n));
    CHECK(std == doctest::Approx(h).epsilon(0.02));
}

TEST_CASE("inference input: fixed seed reproduces the posterior sample") {
    BridgeFixture f;
    SeededRng r1 = SeededRng(9).derive(RngPurpose::Inference, 4, 2);
    SeededRng r2 = SeededRng(9).derive(RngPurpose::Inference, 4, 2);
    CHECK(bit_equal(inference_input(f.y, 0.1, r1), inference_input(f.y, 0.1, r2)));
}

TEST_CASE("recomputing y_a from the stored draw is bit-exact") {
    BridgeFixture f;
    double a = 0.37, h = 0.1;
    BridgeDraw d = sample_bridge(f.x0, f.y, a, h, f.z, f.sched);
    BridgeDraw again = sample_bridge(f.x0, f.y, d.a, h, d.z, f.sched);
    CHECK(bit_equal(d.y_a, again.y_a));
}
