#pragma once

#include <span>

namespace udavi {

// Regularized incomplete beta function I_x(a, b) via the Lentz continued
// fraction, accurate to ~1e-14 on the arguments used here.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a Student-t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct TTestResult {
    double t_stat = 0.0;
    double p_value = 1.0;
    int n = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

// One-sample two-sided t-test of the per-seed deltas against mean zero
// (equivalent to a paired two-sample test on the underlying metrics).
// Errors on n < 2 or zero variance.
TTestResult paired_t_test(std::span<const double> deltas);

}  // namespace udavi
