#pragma once

#include <cstdint>
#include <vector>

#include "udavi/grid.hpp"

namespace udavi {

// A training example's stable identity plus its persistent reconstruction
// memory and the uncertainty map used by the guided bridge. Memories are
// keyed by sample_id, never by batch position.
struct SampleRecord {
    int64_t sample_id = 0;
    ImageGrid x0;        // model space
    ImageGrid y;         // raw measurement (operator output resolution)
    ImageGrid y_model;   // measurement lifted to the model grid (equal to y for blur)
    ImageGrid memory;       // memory space [0,1]
    ImageGrid uncertainty;  // per-pixel single channel in [0,1]
};

// (x+1)/2, clamped into [0,1].
ImageGrid rescale_to_memory_space(const ImageGrid& xhat);

// Normalized channel-collapsed l1 distance: d(p) = sum_c |a(p,c) - b(p,c)|,
// u = d / max d when the max exceeds eps, else identically zero.
ImageGrid uncertainty_map(const ImageGrid& xhat_star, const ImageGrid& memory,
                          double eps = 1e-12);

// (1-eta)*memory + eta*xhat_star with eta = 2/(N+1).
ImageGrid ema_update(const ImageGrid& memory, const ImageGrid& xhat_star, int window);

double ema_coefficient(int window);

}  // namespace udavi
