#include "udavi/stats.hpp"

#include <cmath>

#include "udavi/errors.hpp"

namespace udavi {

namespace {

double beta_cf(double a, double b, double x) {
    // Lentz's method for the continued fraction in the incomplete beta.
    const int max_iter = 500;
    const double eps = 3e-16;
    const double fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    require(a > 0.0 && b > 0.0, ErrorKind::Logic, "incomplete_beta: a, b must be positive");
    require(x >= 0.0 && x <= 1.0, ErrorKind::Logic, "incomplete_beta: x must be in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    require(df > 0.0, ErrorKind::Logic, "t-test degrees of freedom must be positive");
    double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

TTestResult paired_t_test(std::span<const double> deltas) {
    int n = int(deltas.size());
    require(n >= 2, ErrorKind::Config, "paired t-test needs at least 2 deltas");
    double mean = 0.0;
    for (double d : deltas) mean += d;
    mean /= double(n);
    double ss = 0.0;
    for (double d : deltas) {
        double r = d - mean;
        ss += r * r;
    }
    if (!(ss > 0.0)) {
        fail_numeric("paired t-test: deltas have zero variance (degenerate comparison)");
    }
    double sd = std::sqrt(ss / double(n - 1));
    TTestResult res;
    res.n = n;
    res.mean = mean;
    res.stddev = sd;
    res.t_stat = mean / (sd / std::sqrt(double(n)));
    res.p_value = student_t_two_sided_p(res.t_stat, double(n - 1));
    return res;
}

}  // namespace udavi
