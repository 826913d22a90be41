#include "udavi/memory.hpp"

#include <algorithm>
#include <cmath>

namespace udavi {

ImageGrid rescale_to_memory_space(const ImageGrid& xhat) {
    ImageGrid out = xhat;
    out.range_tag = RangeTag::MemorySpace;
    for (double& v : out.values) {
        v = std::clamp((v + 1.0) * 0.5, 0.0, 1.0);
    }
    return out;
}

ImageGrid uncertainty_map(const ImageGrid& xhat_star, const ImageGrid& memory, double eps) {
    require_same_shape(xhat_star, memory, "uncertainty_map");
    ImageGrid u(xhat_star.height, xhat_star.width, 1, RangeTag::MemorySpace);
    double max_d = 0.0;
    for (int r = 0; r < u.height; ++r) {
        for (int c = 0; c < u.width; ++c) {
            double d = 0.0;
            for (int ch = 0; ch < xhat_star.channels; ++ch) {
                d += std::fabs(xhat_star.at(r, c, ch) - memory.at(r, c, ch));
            }
            u.at(r, c, 0) = d;
            max_d = std::max(max_d, d);
        }
    }
    if (max_d > eps) {
        for (double& v : u.values) v /= max_d;
    } else {
        for (double& v : u.values) v = 0.0;
    }
    u.check_range("uncertainty_map");
    return u;
}

double ema_coefficient(int window) {
    require(window >= 1, ErrorKind::Logic, "EMA window must be >= 1");
    return 2.0 / (double(window) + 1.0);
}

ImageGrid ema_update(const ImageGrid& memory, const ImageGrid& xhat_star, int window) {
    require_same_shape(memory, xhat_star, "ema_update");
    double eta = ema_coefficient(window);
    ImageGrid out = memory;
    out.range_tag = RangeTag::MemorySpace;
    for (size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = (1.0 - eta) * memory.values[i] + eta * xhat_star.values[i];
    }
    out.check_range("ema_update");
    return out;
}

}  // namespace udavi
