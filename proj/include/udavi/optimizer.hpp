#pragma once

#include <span>
#include <vector>

#include "udavi/errors.hpp"

namespace udavi {

// Adaptive moment estimation with decoupled weight decay.
class AdamW {
public:
    AdamW() = default;
    AdamW(size_t dim, double lr, double weight_decay = 0.0, double beta1 = 0.9,
          double beta2 = 0.999, double eps = 1e-8);

    void step(std::span<double> params, std::span<const double> grad);

    double learning_rate() const { return lr_; }
    int64_t step_count() const { return step_; }

    // Checkpoint access.
    std::vector<double>& moment1() { return m_; }
    std::vector<double>& moment2() { return v_; }
    const std::vector<double>& moment1() const { return m_; }
    const std::vector<double>& moment2() const { return v_; }
    void restore(std::vector<double> m, std::vector<double> v, int64_t step);

private:
    double lr_ = 1e-4;
    double wd_ = 0.0;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    int64_t step_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace udavi
