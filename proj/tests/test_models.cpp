#include <doctest.h>

#include <cmath>

#include "udavi/linalg.hpp"
#include "udavi/model.hpp"
#include "udavi/prior.hpp"
#include "udavi/rng.hpp"

using namespace udavi;

namespace {

// Relative gradient comparison with an absolute floor for tiny entries.
void check_grad_close(const std::vector<double>& analytic, const std::vector<double>& fd,
                      double rel_tol) {
    REQUIRE(analytic.size() == fd.size());
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        num += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
        den += fd[i] * fd[i];
    }
    double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
    CHECK(rel <= rel_tol);
}

void fd_check_model(const ParamModel& model, const ImageGrid& input, int t,
                    const ScheduleTable* sched, double rel_tol = 1e-4) {
    SeededRng trng(999);
    ImageGrid target = gaussian_sample(trng, input.height, input.width,
                                       model.arch().out_channels);
    auto loss = [&](const ImageGrid& out, ImageGrid* cot) {
        *cot = sub(out, target);
        return 0.5 * sum_squares(*cot);
    };
    std::vector<double> grad;
    param_grad(model, input, t, sched, loss, &grad);

    ParamModel probe = model;
    auto f = [&](std::span<const double> p) {
        std::copy(p.begin(), p.end(), probe.params().begin());
        ImageGrid out = probe.forward(input, t, sched);
        ImageGrid diff = sub(out, target);
        return 0.5 * sum_squares(diff);
    };
    auto fd = finite_diff_gradient(f, model.params(), 1e-6);
    check_grad_close(grad, fd, rel_tol);
}

}  // namespace

TEST_CASE("zero-parameter affine generator maps everything to zero") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Affine;
    arch.in_height = 3;
    arch.in_width = 3;
    arch.in_channels = 1;
    arch.out_channels = 1;
    ParamModel gen = ParamModel::create(arch, InitMode::Zero, SeededRng(0));
    SeededRng rng(1);
    ImageGrid y = gaussian_sample(rng, 3, 3, 1);
    ImageGrid out = generator_forward(gen, y);
    for (double v : out.values) CHECK(v == 0.0);
    CHECK(out.range_tag == RangeTag::ModelSpace);
}

TEST_CASE("identity-initialized conv with input skip passes the input through tanh") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Conv;
    arch.in_height = 2;
    arch.in_width = 2;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.levels = 1;
    arch.base_channels = 4;
    arch.squash_output = true;
    arch.input_skip = true;
    ParamModel gen = ParamModel::create(arch, InitMode::Identity, SeededRng(3));
    SeededRng rng(2);
    ImageGrid x = gaussian_sample(rng, 2, 2, 1);
    for (double& v : x.values) v *= 0.3;
    ImageGrid out = gen.forward(x);
    for (size_t i = 0; i < x.values.size(); ++i) {
        CHECK(out.values[i] == doctest::Approx(std::tanh(x.values[i])).epsilon(1e-12));
    }
}

TEST_CASE("conv generator output lies in [-1,1] for random inputs") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Conv;
    arch.in_height = 8;
    arch.in_width = 8;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.levels = 3;
    arch.base_channels = 4;
    arch.squash_output = true;
    arch.input_skip = true;
    ParamModel gen = ParamModel::create(arch, InitMode::Random, SeededRng(5));
    SeededRng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        ImageGrid x = gaussian_sample(rng, 8, 8, 1);
        ImageGrid out = gen.forward(x);
        for (double v : out.values) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("teacher score: standard normal prior gives score = -x at any t") {
    ScheduleTable sched = ScheduleTable::linear(10, 1e-3, 0.02);
    int d = 4;
    GaussianPrior prior = GaussianPrior::single(std::vector<double>(size_t(d), 0.0),
                                                DenseMatrix::identity(d));
    SeededRng rng(7);
    ImageGrid x = gaussian_sample(rng, 2, 2, 1);
    for (int t : {1, 5, 10}) {
        ImageGrid s = prior.score(x, t, sched);
        for (size_t i = 0; i < x.values.size(); ++i) {
            CHECK(s.values[i] == doctest::Approx(-x.values[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("teacher score matches finite differences of the log marginal") {
    ScheduleTable sched = ScheduleTable::linear(25, 1e-3, 0.03);
    SeededRng rng(8);
    const int d = 9;  // 3x3
    DenseMatrix m(d, d);
    for (double& v : m.entries) v = 0.2 * rng.next_normal();
    DenseMatrix cov = m.matmul(m.transpose());
    for (int i = 0; i < d; ++i) cov.at(i, i) += 0.05;
    std::vector<double> mu(size_t(d), 0.0);
    for (double& v : mu) v = 0.1 * rng.next_normal();
    GaussianPrior prior = GaussianPrior::single(mu, cov);

    for (int t : {1, 6, 12, 18, 25}) {
        for (int pt = 0; pt < 4; ++pt) {
            ImageGrid x = gaussian_sample(rng, 3, 3, 1);
            ImageGrid s = prior.score(x, t, sched);
            auto f = [&](std::span<const double> v) {
                ImageGrid probe = x;
                std::copy(v.begin(), v.end(), probe.values.begin());
                return prior.log_marginal_density(probe, t, sched);
            };
            auto fd = finite_diff_gradient(f, x.values, 1e-5);
            for (int i = 0; i < d; ++i) {
                CHECK(s.values[size_t(i)] == doctest::Approx(fd[size_t(i)]).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("teacher score of a mixture matches finite differences") {
    ScheduleTable sched = ScheduleTable::linear(15, 1e-3, 0.02);
    SeededRng rng(9);
    const int d = 4;
    GaussianComponent c1, c2;
    c1.weight = 0.3;
    c1.mean = {0.4, 0.4, -0.2, 0.1};
    c1.cov = DenseMatrix::identity(d).scaled(0.09);
    c2.weight = 0.7;
    c2.mean = {-0.3, 0.2, 0.5, -0.5};
    c2.cov = DenseMatrix::identity(d).scaled(0.04);
    GaussianPrior prior = GaussianPrior::mixture({c1, c2});

    for (int t : {1, 7, 15}) {
        for (int pt = 0; pt < 5; ++pt) {
            ImageGrid x = gaussian_sample(rng, 2, 2, 1);
            for (double& v : x.values) v *= 0.5;
            ImageGrid s = prior.score(x, t, sched);
            auto f = [&](std::span<const double> v) {
                ImageGrid probe = x;
                std::copy(v.begin(), v.end(), probe.values.begin());
                return prior.log_marginal_density(probe, t, sched);
            };
            auto fd = finite_diff_gradient(f, x.values, 1e-5);
            for (int i = 0; i < d; ++i) {
                CHECK(s.values[size_t(i)] == doctest::Approx(fd[size_t(i)]).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("mixture with one component equals the single-Gaussian score exactly") {
    ScheduleTable sched = ScheduleTable::linear(12, 1e-3, 0.02);
    SeededRng rng(10);
    const int d = 4;
    DenseMatrix cov = DenseMatrix::identity(d).scaled(0.09);
    std::vector<double> mu = {0.1, -0.1, 0.2, 0.0};
    GaussianPrior single = GaussianPrior::single(mu, cov);
    GaussianComponent comp;
    comp.weight = 1.0;
    comp.mean = mu;
    comp.cov = cov;
    GaussianPrior mix = GaussianPrior::mixture({comp});
    ImageGrid x = gaussian_sample(rng, 2, 2, 1);
    ImageGrid s1 = single.score(x, 5, sched);
    ImageGrid s2 = mix.score(x, 5, sched);
    CHECK(max_abs_diff(s1, s2) <= 1e-14);
}

TEST_CASE("teacher score at the pure-noise endpoint tends to -x") {
    ScheduleTable sched = ScheduleTable::linear(1000, 1e-4, 0.02);
    const int d = 4;
    DenseMatrix cov = DenseMatrix::identity(d).scaled(0.25);
    GaussianPrior prior = GaussianPrior::single(std::vector<double>{0.5, -0.5, 0.25, 0.0}, cov);
    SeededRng rng(11);
    ImageGrid x = gaussian_sample(rng, 2, 2, 1);
    ImageGrid s = prior.score(x, 1000, sched);
    // Deviation from -x is bounded by sqrt(alpha_bar)*|mu| plus O(alpha_bar).
    for (size_t i = 0; i < x.values.size(); ++i) {
        CHECK(std::fabs(s.values[i] + x.values[i]) <= 5e-3);
    }
}

TEST_CASE("student score: zero network gives zero score") {
    ScheduleTable sched = ScheduleTable::linear(10, 1e-3, 0.02);
    ArchDescriptor arch;
    arch.kind = ArchKind::DiagTime;
    arch.in_height = 2;
    arch.in_width = 2;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.timesteps = 10;
    ParamModel student = ParamModel::create(arch, InitMode::Zero, SeededRng(0));
    SeededRng rng(12);
    ImageGrid x = gaussian_sample(rng, 2, 2, 1);
    ImageGrid s = student_score(student, x, 3, sched);
    for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("student score scales the noise prediction by -1/sqrt(1-ab)") {
    ScheduleTable sched = ScheduleTable::linear(10, 1e-2, 0.05);
    ArchDescriptor arch;
    arch.kind = ArchKind::DiagTime;
    arch.in_height = 1;
    arch.in_width = 1;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.timesteps = 10;
    ParamModel student = ParamModel::create(arch, InitMode::Identity, SeededRng(0));
    ImageGrid x = ImageGrid::constant(1, 1, 1, 0.5, RangeTag::Unbounded);
    int t = 4;
    ImageGrid s = student_score(student, x, t, sched);
    CHECK(s.values[0] ==
          doctest::Approx(-0.5 / std::sqrt(1.0 - sched.alpha_bar(t))).epsilon(1e-12));
}

TEST_CASE("time conditioning changes the diag student output across t") {
    ScheduleTable sched = ScheduleTable::linear(6, 1e-2, 0.05);
    ArchDescriptor arch;
    arch.kind = ArchKind::DiagTime;
    arch.in_height = 1;
    arch.in_width = 2;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.timesteps = 6;
    ParamModel student = ParamModel::create(arch, InitMode::Random, SeededRng(21));
    ImageGrid x = ImageGrid::constant(1, 2, 1, 0.7, RangeTag::Unbounded);
    ImageGrid s1 = student.forward(x, 1, &sched);
    ImageGrid s2 = student.forward(x, 5, &sched);
    CHECK(max_abs_diff(s1, s2) > 1e-9);
}

TEST_CASE("time conditioning changes the conv student output across t") {
    ScheduleTable sched = ScheduleTable::linear(8, 1e-2, 0.05);
    ArchDescriptor arch;
    arch.kind = ArchKind::Conv;
    arch.in_height = 4;
    arch.in_width = 4;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.levels = 2;
    arch.base_channels = 4;
    arch.time_channel = true;
    ParamModel student = ParamModel::create(arch, InitMode::Random, SeededRng(22));
    SeededRng rng(23);
    ImageGrid x = gaussian_sample(rng, 4, 4, 1);
    ImageGrid s1 = student.forward(x, 1, &sched);
    ImageGrid s2 = student.forward(x, 8, &sched);
    CHECK(max_abs_diff(s1, s2) > 1e-9);
}

TEST_CASE("param_grad matches finite differences: affine") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Affine;
    arch.in_height = 3;
    arch.in_width = 3;
    arch.in_channels = 1;
    arch.out_channels = 1;
    ParamModel m = ParamModel::create(arch, InitMode::Random, SeededRng(31));
    SeededRng rng(32);
    ImageGrid x = gaussian_sample(rng, 3, 3, 1);
    fd_check_model(m, x, 0, nullptr);
}

TEST_CASE("param_grad matches finite differences: diag-time student") {
    ScheduleTable sched = ScheduleTable::linear(5, 1e-2, 0.05);
    ArchDescriptor arch;
    arch.kind = ArchKind::DiagTime;
    arch.in_height = 2;
    arch.in_width = 3;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.timesteps = 5;
    ParamModel m = ParamModel::create(arch, InitMode::Random, SeededRng(33));
    SeededRng rng(34);
    ImageGrid x = gaussian_sample(rng, 2, 3, 1);
    fd_check_model(m, x, 3, &sched);
}

TEST_CASE("param_grad matches finite differences: conv generator, all levels") {
    SeededRng rng(35);
    for (int levels : {1, 2, 3}) {
        ArchDescriptor arch;
        arch.kind = ArchKind::Conv;
        arch.in_height = 8;
        arch.in_width = 8;
        arch.in_channels = 1;
        arch.out_channels = 1;
        arch.levels = levels;
        arch.base_channels = 3;
        arch.squash_output = true;
        arch.input_skip = true;
        ParamModel m = ParamModel::create(arch, InitMode::Random, SeededRng(uint64_t(36 + levels)));
        ImageGrid x = gaussian_sample(rng, 8, 8, 1);
        fd_check_model(m, x, 0, nullptr);
    }
}

TEST_CASE("param_grad matches finite differences: time-conditioned conv student") {
    ScheduleTable sched = ScheduleTable::linear(9, 1e-2, 0.04);
    ArchDescriptor arch;
    arch.kind = ArchKind::Conv;
    arch.in_height = 4;
    arch.in_width = 4;
    arch.in_channels = 2;
    arch.out_channels = 2;
    arch.levels = 2;
    arch.base_channels = 3;
    arch.time_channel = true;
    ParamModel m = ParamModel::create(arch, InitMode::Random, SeededRng(40));
    SeededRng rng(41);
    ImageGrid x = gaussian_sample(rng, 4, 4, 2);
    fd_check_model(m, x, 7, &sched);
}

TEST_CASE("input gradients match finite differences") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Conv;
    arch.in_height = 4;
    arch.in_width = 4;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.levels = 2;
    arch.base_channels = 3;
    arch.squash_output = true;
    arch.input_skip = true;
    ParamModel m = ParamModel::create(arch, InitMode::Random, SeededRng(50));
    SeededRng rng(51);
    ImageGrid x = gaussian_sample(rng, 4, 4, 1);
    ImageGrid target = gaussian_sample(rng, 4, 4, 1);

    ParamModel::Tape tape;
    ImageGrid out = m.forward_tape(x, &tape);
    ImageGrid cot = sub(out, target);
    std::vector<double> pgrad(m.params().size(), 0.0);
    ImageGrid igrad;
    m.backward(tape, cot, pgrad, &igrad);

    auto f = [&](std::span<const double> v) {
        ImageGrid probe = x;
        std::copy(v.begin(), v.end(), probe.values.begin());
        ImageGrid o = m.forward(probe);
        ImageGrid d = sub(o, target);
        return 0.5 * sum_squares(d);
    };
    auto fd = finite_diff_gradient(f, x.values, 1e-6);
    for (size_t i = 0; i < fd.size(); ++i) {
        CHECK(igrad.values[i] == doctest::Approx(fd[i]).epsilon(1e-4));
    }
}

TEST_CASE("zero loss gives zero gradient") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Affine;
    arch.in_height = 2;
    arch.in_width = 2;
    arch.in_channels = 1;
    arch.out_channels = 1;
    ParamModel m = ParamModel::create(arch, InitMode::Random, SeededRng(60));
    SeededRng rng(61);
    ImageGrid x = gaussian_sample(rng, 2, 2, 1);
    auto loss = [&](const ImageGrid& out, ImageGrid* cot) {
        *cot = ImageGrid::zeros(out.height, out.width, out.channels, RangeTag::Unbounded);
        return 0.0;
    };
    std::vector<double> grad;
    param_grad(m, x, 0, nullptr, loss, &grad);
    for (double v : grad) CHECK(v == 0.0);
}

TEST_CASE("affine gradient of ||out||^2/2 is the input-correlation closed form") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Affine;
    arch.in_height = 1;
    arch.in_width = 2;
    arch.in_channels = 1;
    arch.out_channels = 1;
    ParamModel m = ParamModel::create(arch, InitMode::Random, SeededRng(70));
    ImageGrid x(1, 2, 1, RangeTag::Unbounded);
    x.values = {0.3, -0.4};
    ParamModel::Tape tape;
    ImageGrid out = m.forward_tape(x, &tape);
    std::vector<double> grad(m.params().size(), 0.0);
    m.backward(tape, out, grad);
    int din = 2, dout = 2;
    for (int j = 0; j < dout; ++j) {
        for (int i = 0; i < din; ++i) {
            CHECK(grad[size_t(j * din + i)] ==
                  doctest::Approx(out.values[size_t(j)] * x.values[size_t(i)]).epsilon(1e-14));
        }
        CHECK(grad[size_t(dout * din + j)] ==
              doctest::Approx(out.values[size_t(j)]).epsilon(1e-14));
    }
}

TEST_CASE("student fitted by least squares recovers the analytic marginal score") {
    // DSM identity oracle: the minimizer of the denoising objective over an
    // affine family is the score of the diffused marginal; a regression fit on
    // many samples must land on the analytic form.
    ScheduleTable sched = ScheduleTable::linear(8, 5e-3, 0.08);
    const int d = 1;
    double m0 = 0.3, v0 = 0.04;
    ArchDescriptor arch;
    arch.kind = ArchKind::DiagTime;
    arch.in_height = 1;
    arch.in_width = 1;
    arch.in_channels = 1;
    arch.out_channels = 1;
    arch.timesteps = 8;
    ParamModel student = ParamModel::create(arch, InitMode::Zero, SeededRng(0));

    SeededRng rng(80);
    for (int t : {1, 4, 8}) {
        double ab = sched.alpha_bar(t);
        double sxx = 0.0, sx = 0.0, sxz = 0.0, sz = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            double x0 = m0 + std::sqrt(v0) * rng.next_normal();
            double z = rng.next_normal();
            double xt = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * z;
            sxx += xt * xt;
            sx += xt;
            sxz += xt * z;
            sz += z;
        }
        double mx = sx / n, mz = sz / n;
        double cov_xz = sxz / n - mx * mz;
        double var_x = sxx / n - mx * mx;
        double gain = cov_xz / var_x;
        double bias = mz - gain * mx;
        student.params()[size_t((t - 1) * d)] = gain;
        student.params()[size_t(8 * d + (t - 1) * d)] = bias;

        double var_t = ab * v0 + (1.0 - ab);
        GaussianPrior q0 = GaussianPrior::single(std::vector<double>{m0},
                                                 DenseMatrix::identity(1).scaled(v0));
        for (double xval : {-0.5, 0.0, 0.4, 1.0}) {
            ImageGrid x(1, 1, 1, RangeTag::Unbounded);
            x.values = {xval};
            ImageGrid s = student_score(student, x, t, sched);
            ImageGrid s_true = q0.score(x, t, sched);
            double expect = -(xval - std::sqrt(ab) * m0) / var_t;
            CHECK(s_true.values[0] == doctest::Approx(expect).epsilon(1e-10));
            CHECK(s.values[0] == doctest::Approx(expect).epsilon(0.02));
        }
    }
}

TEST_CASE("NFE accounting counts forward evaluations") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Affine;
    arch.in_height = 2;
    arch.in_width = 2;
    arch.in_channels = 1;
    arch.out_channels = 1;
    ParamModel m = ParamModel::create(arch, InitMode::Random, SeededRng(90));
    SeededRng rng(91);
    ImageGrid x = gaussian_sample(rng, 2, 2, 1);
    m.reset_eval_count();
    CHECK(m.eval_count() == 0);
    (void)m.forward(x);
    CHECK(m.eval_count() == 1);
    for (int k = 0; k < 5; ++k) (void)m.forward(x);
    CHECK(m.eval_count() == 6);
}

TEST_CASE("forward rejects mismatched input dims") {
    ArchDescriptor arch;
    arch.kind = ArchKind::Affine;
    arch.in_height = 2;
    arch.in_width = 2;
    arch.in_channels = 1;
    arch.out_channels = 1;
    ParamModel m = ParamModel::create(arch, InitMode::Zero, SeededRng(0));
    ImageGrid bad = ImageGrid::zeros(3, 2, 1, RangeTag::Unbounded);
    CHECK_THROWS_AS(m.forward(bad), Error);
}
