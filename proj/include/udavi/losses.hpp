#pragma once

#include "udavi/grid.hpp"
#include "udavi/model.hpp"
#include "udavi/operators.hpp"
#include "udavi/prior.hpp"
#include "udavi/schedule.hpp"

namespace udavi {

// Data-consistency loss ||y - H xhat0||^2 (sum of squares).
double consistency_loss(const ForwardOperator& op, const ImageGrid& y, const ImageGrid& xhat0);

// Gradient of the consistency loss with respect to xhat0:
// 2 * H^T (H xhat0 - y).
ImageGrid consistency_grad(const ForwardOperator& op, const ImageGrid& y, const ImageGrid& xhat0);

// Denoising score-matching loss value at one (xhat0, t, z) triple:
// || s_psi(xhat_t, t) - target ||^2 with target = -z / sqrt(1 - alpha_bar_t),
// where xhat_t = diffuse(xhat0, t, z). xhat0 is treated as a constant.
double score_matching_loss(const ParamModel& student, const ImageGrid& xhat0, int t,
                           const ImageGrid& z, const ScheduleTable& sched);

// Generator gradient contribution of the prior term: backpropagates the
// constant vector field w(t) * (s_psi - s_theta) through
// xhat_t = sqrt(alpha_bar_t) * xhat0(phi) + sqrt(1-alpha_bar_t) * z into phi.
// Returns the gradient w.r.t. the generator parameters; also reports the
// surrogate scalar w(t) * <delta_s, xhat_t> for tracing.
double ikl_generator_grad(const ParamModel& gen, const ParamModel::Tape& gen_tape,
                          const ParamModel& student, const GaussianPrior& prior,
                          const ImageGrid& xhat_t, int t, const ScheduleTable& sched,
                          std::span<double> param_grad);

}  // namespace udavi
