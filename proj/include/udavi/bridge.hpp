#pragma once

#include "udavi/grid.hpp"
#include "udavi/rng.hpp"
#include "udavi/schedule.hpp"

namespace udavi {

// One draw from the stochastic bridge between the clean image and the
// (model-space) measurement. Recomputing y_a from (a, z, inputs) is bit-exact.
struct BridgeDraw {
    double a = 0.0;
    double sigma_a = 0.0;
    double sigma_bar_a = 0.0;
    ImageGrid z;
    ImageGrid y_a;
};

// y_a = (1 - sigma_a)*y + sigma_a*x0 + h*sigma_bar_a*z.
BridgeDraw sample_bridge(const ImageGrid& x0, const ImageGrid& y_img, double a, double h,
                         const ImageGrid& z, const ScheduleTable& sched);

// Spatially adaptive variant: the per-pixel noise is scaled by (1 + lambda*u),
// with u a single-channel map in [0,1] broadcast across channels. lambda = 0
// reproduces sample_bridge bit-exactly for the same z.
BridgeDraw sample_bridge_uncertain(const ImageGrid& x0, const ImageGrid& y_img, double a, double h,
                                   const ImageGrid& z, const ImageGrid& u, double lambda,
                                   const ScheduleTable& sched);

// Inference-time generator input y + h*z with a fresh standard normal z.
ImageGrid inference_input(const ImageGrid& y_img, double h, SeededRng& rng);

}  // namespace udavi
