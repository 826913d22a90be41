#include "udavi/optimizer.hpp"

#include <cmath>

namespace udavi {

AdamW::AdamW(size_t dim, double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(dim, 0.0), v_(dim, 0.0) {
    require(lr > 0.0, ErrorKind::Config, "learning rate must be positive");
    require(weight_decay >= 0.0, ErrorKind::Config, "weight decay must be >= 0");
}

void AdamW::step(std::span<double> params, std::span<const double> grad) {
    require(params.size() == m_.size() && grad.size() == m_.size(), ErrorKind::Logic,
            "optimizer dimension mismatch");
    ++step_;
    double bc1 = 1.0 - std::pow(beta1_, double(step_));
    double bc2 = 1.0 - std::pow(beta2_, double(step_));
    for (size_t i = 0; i < m_.size(); ++i) {
        double g = grad[i];
        // Lazy moments: coordinates with exactly zero gradient (untouched
        // per-timestep table slots) keep their state, as in sparse Adam.
        if (g == 0.0) continue;
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        double mhat = m_[i] / bc1;
        double vhat = v_[i] / bc2;
        params[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * params[i]);
    }
}

void AdamW::restore(std::vector<double> m, std::vector<double> v, int64_t step) {
    require(m.size() == m_.size() && v.size() == v_.size(), ErrorKind::Logic,
            "optimizer restore dimension mismatch");
    m_ = std::move(m);
    v_ = std::move(v);
    step_ = step;
}

}  // namespace udavi
