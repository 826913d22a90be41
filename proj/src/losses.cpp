#include "udavi/losses.hpp"

#include <cmath>

namespace udavi {

double consistency_loss(const ForwardOperator& op, const ImageGrid& y, const ImageGrid& xhat0) {
    ImageGrid hx = op.apply(xhat0);
    require_same_shape(hx, y, "consistency_loss");
    double acc = 0.0;
    for (size_t i = 0; i < hx.values.size(); ++i) {
        double r = y.values[i] - hx.values[i];
        acc += r * r;
    }
    return acc;
}

ImageGrid consistency_grad(const ForwardOperator& op, const ImageGrid& y, const ImageGrid& xhat0) {
    ImageGrid residual = op.apply(xhat0);
    require_same_shape(residual, y, "consistency_grad");
    for (size_t i = 0; i < residual.values.size(); ++i) residual.values[i] -= y.values[i];
    ImageGrid g = op.apply_adjoint(residual);
    for (double& v : g.values) v *= 2.0;
    return g;
}

double score_matching_loss(const ParamModel& student, const ImageGrid& xhat0, int t,
                           const ImageGrid& z, const ScheduleTable& sched) {
    require_same_shape(xhat0, z, "score_matching_loss");
    double ab = sched.alpha_bar(t);
    ImageGrid x_t = diffuse(xhat0, t, z, sched);
    ImageGrid s = student_score(student, x_t, t, sched);
    double inv = 1.0 / std::sqrt(1.0 - ab);
    double acc = 0.0;
    for (size_t i = 0; i < s.values.size(); ++i) {
        double r = s.values[i] + z.values[i] * inv;  // s - (-z/sqrt(1-ab))
        acc += r * r;
    }
    return acc;
}

double ikl_generator_grad(const ParamModel& gen, const ParamModel::Tape& gen_tape,
                          const ParamModel& student, const GaussianPrior& prior,
                          const ImageGrid& xhat_t, int t, const ScheduleTable& sched,
                          std::span<double> param_grad) {
    ImageGrid s_student = student_score(student, xhat_t, t, sched);
    ImageGrid s_teacher = prior.score(xhat_t, t, sched);
    double w = sched.ikl_weight(t);
    double sqrt_ab = std::sqrt(sched.alpha_bar(t));
    ImageGrid delta = sub(s_student, s_teacher);
    delta.check_finite("ikl_generator_grad");
    double surrogate = w * dot(delta, xhat_t);
    // d xhat_t / d xhat0 = sqrt(alpha_bar); delta_s is a constant field.
    ImageGrid cot = scale(delta, w * sqrt_ab);
    gen.backward(gen_tape, cot, param_grad);
    return surrogate;
}

}  // namespace udavi
