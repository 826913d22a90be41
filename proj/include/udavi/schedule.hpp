#pragma once

#include <utility>
#include <vector>

#include "udavi/grid.hpp"

namespace udavi {

// Discrete noise schedule plus the closed-form quantities derived from it:
// cumulative products, the low-noise-emphasis weight, and the bridge
// interpolation/stochasticity coefficients from the continuous-time extension.
//
// The continuous extension beta(tau) on tau in [0,1] is the piecewise-linear
// interpolation through knots (i/T, T*beta_i), i.e. it carries the change of
// variables from discrete steps to unit time, so that
// exp(-int_0^1 beta) ~ alpha_bar_T and sigma_bar(1) ~ 1 for DDPM-like
// schedules. Immutable after construction; all queries are pure.
class ScheduleTable {
public:
    static ScheduleTable linear(int timesteps, double beta_start, double beta_end);
    static ScheduleTable from_betas(std::vector<double> betas);

    int timesteps() const { return int(betas_.size()); }
    const std::vector<double>& betas() const { return betas_; }
    const std::vector<double>& alpha_bars() const { return alpha_bars_; }
    double beta_total() const { return beta_total_; }

    // 1-based timestep accessors; error outside [1, T].
    double beta(int t) const;
    double alpha_bar(int t) const;

    // w(t) = sqrt(alpha_bar_t) / sqrt(1 - alpha_bar_t).
    double ikl_weight(int t) const;

    // Continuous-extension integral int_0^a beta(tau) dtau, closed form per
    // linear segment; a in [0,1].
    double integral_beta_to(double a) const;

    // (sigma_a, sigma_bar_a) from the bridge coefficient formulas.
    std::pair<double, double> bridge_coeffs(double a) const;

private:
    void check_t(int t, const char* where) const;

    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
    std::vector<double> knot_values_;   // continuous beta at tau = i/T, i = 0..T
    std::vector<double> cum_integral_;  // integral of continuous beta up to tau = i/T
    double beta_total_ = 0.0;
};

// Forward noising: sqrt(alpha_bar_t)*x0 + sqrt(1-alpha_bar_t)*z.
ImageGrid diffuse(const ImageGrid& x0, int t, const ImageGrid& z, const ScheduleTable& sched);

}  // namespace udavi
