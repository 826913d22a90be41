#include "udavi/schedule.hpp"

#include <cmath>

namespace udavi {

ScheduleTable ScheduleTable::linear(int timesteps, double beta_start, double beta_end) {
    require(timesteps >= 1, ErrorKind::Config, "schedule needs at least one timestep");
    require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0, ErrorKind::Config,
            "schedule requires 0 < beta_start <= beta_end < 1");
    std::vector<double> betas(static_cast<size_t>(timesteps), 0.0);
    if (timesteps == 1) {
        betas[0] = beta_start;
    } else {
        for (int i = 0; i < timesteps; ++i) {
            betas[size_t(i)] = beta_start + (beta_end - beta_start) * double(i) / double(timesteps - 1);
        }
    }
    return from_betas(std::move(betas));
}

ScheduleTable ScheduleTable::from_betas(std::vector<double> betas) {
    require(!betas.empty(), ErrorKind::Config, "schedule needs at least one beta");
    ScheduleTable s;
    s.betas_ = std::move(betas);
    int T = int(s.betas_.size());
    s.alpha_bars_.resize(size_t(T));
    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        double b = s.betas_[size_t(i)];
        require(b > 0.0 && b < 1.0, ErrorKind::Config, "betas must lie in (0,1)");
        prod *= (1.0 - b);
        s.alpha_bars_[size_t(i)] = prod;
        require(prod > 0.0 && prod < 1.0, ErrorKind::Config, "alpha_bar left (0,1)");
    }
    // Knots of the continuous extension at tau = i/T; value T*beta_i with the
    // left edge pinned to the first beta.
    s.knot_values_.resize(size_t(T) + 1);
    s.knot_values_[0] = double(T) * s.betas_[0];
    for (int i = 1; i <= T; ++i) s.knot_values_[size_t(i)] = double(T) * s.betas_[size_t(i - 1)];
    s.cum_integral_.assign(size_t(T) + 1, 0.0);
    for (int i = 1; i <= T; ++i) {
        double seg = 0.5 * (s.knot_values_[size_t(i - 1)] + s.knot_values_[size_t(i)]) / double(T);
        s.cum_integral_[size_t(i)] = s.cum_integral_[size_t(i - 1)] + seg;
    }
    s.beta_total_ = s.cum_integral_[size_t(T)];
    return s;
}

void ScheduleTable::check_t(int t, const char* where) const {
    if (t < 1 || t > timesteps()) {
        fail_logic(std::string(where) + ": timestep " + std::to_string(t) + " outside [1, " +
                   std::to_string(timesteps()) + "]");
    }
}

double ScheduleTable::beta(int t) const {
    check_t(t, "beta");
    return betas_[size_t(t - 1)];
}

double ScheduleTable::alpha_bar(int t) const {
    check_t(t, "alpha_bar");
    return alpha_bars_[size_t(t - 1)];
}

double ScheduleTable::ikl_weight(int t) const {
    check_t(t, "ikl_weight");
    double ab = alpha_bars_[size_t(t - 1)];
    return std::sqrt(ab) / std::sqrt(1.0 - ab);
}

double ScheduleTable::integral_beta_to(double a) const {
    require(a >= 0.0 && a <= 1.0, ErrorKind::Logic,
            "bridge position a must lie in [0,1], got " + std::to_string(a));
    if (a == 0.0) return 0.0;
    if (a == 1.0) return beta_total_;
    int T = timesteps();
    double x = a * double(T);
    int seg = int(x);  // segment [seg/T, (seg+1)/T]
    if (seg >= T) seg = T - 1;
    double frac = x - double(seg);
    double v0 = knot_values_[size_t(seg)];
    double v1 = knot_values_[size_t(seg + 1)];
    // integral over the partial segment of the linear interpolant
    double vmid = v0 + (v1 - v0) * frac;
    double partial = 0.5 * (v0 + vmid) * (frac / double(T));
    return cum_integral_[size_t(seg)] + partial;
}

std::pair<double, double> ScheduleTable::bridge_coeffs(double a) const {
    double upto = integral_beta_to(a);
    double sigma_a = (beta_total_ - upto) / beta_total_;
    if (a == 0.0) sigma_a = 1.0;
    if (a == 1.0) sigma_a = 0.0;
    double sigma_bar_a = std::sqrt(1.0 - std::exp(-upto));
    return {sigma_a, sigma_bar_a};
}

ImageGrid diffuse(const ImageGrid& x0, int t, const ImageGrid& z, const ScheduleTable& sched) {
    require_same_shape(x0, z, "diffuse");
    double ab = sched.alpha_bar(t);
    double sa = std::sqrt(ab);
    double sb = std::sqrt(1.0 - ab);
    ImageGrid out = x0;
    out.range_tag = RangeTag::Unbounded;
    for (size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = sa * x0.values[i] + sb * z.values[i];
    }
    out.check_finite("diffuse");
    return out;
}

}  // namespace udavi
