#include "udavi/bridge.hpp"

namespace udavi {

namespace {

// Shared combine so the plain and uncertainty-aware paths are the same
// floating-point expression; zmod is the (possibly rescaled) noise field.
BridgeDraw combine(const ImageGrid& x0, const ImageGrid& y_img, double a, double h,
                   const ImageGrid& z, const ImageGrid& zmod, const ScheduleTable& sched) {
    require_same_shape(x0, y_img, "sample_bridge");
    require_same_shape(x0, z, "sample_bridge");
    require(h >= 0.0, ErrorKind::Logic, "bridge perturbation scale h must be >= 0");
    auto [sigma_a, sigma_bar_a] = sched.bridge_coeffs(a);
    BridgeDraw draw;
    draw.a = a;
    draw.sigma_a = sigma_a;
    draw.sigma_bar_a = sigma_bar_a;
    draw.z = z;
    ImageGrid ya(x0.height, x0.width, x0.channels, RangeTag::ModelSpace);
    double noise_scale = h * sigma_bar_a;
    for (size_t i = 0; i < ya.values.size(); ++i) {
        ya.values[i] = (1.0 - sigma_a) * y_img.values[i] + sigma_a * x0.values[i] +
                       noise_scale * zmod.values[i];
    }
    ya.check_finite("sample_bridge");
    draw.y_a = std::move(ya);
    return draw;
}

}  // namespace

BridgeDraw sample_bridge(const ImageGrid& x0, const ImageGrid& y_img, double a, double h,
                         const ImageGrid& z, const ScheduleTable& sched) {
    return combine(x0, y_img, a, h, z, z, sched);
}

BridgeDraw sample_bridge_uncertain(const ImageGrid& x0, const ImageGrid& y_img, double a, double h,
                                   const ImageGrid& z, const ImageGrid& u, double lambda,
                                   const ScheduleTable& sched) {
    require(lambda >= 0.0, ErrorKind::Logic, "lambda must be >= 0");
    require(u.channels == 1 && u.height == x0.height && u.width == x0.width, ErrorKind::Logic,
            "uncertainty map must be per-pixel single-channel at the image resolution");
    for (double v : u.values) {
        require(v >= 0.0 && v <= 1.0, ErrorKind::Numeric,
                "uncertainty values must lie in [0,1]");
    }
    ImageGrid zmod = z;
    for (int r = 0; r < z.height; ++r) {
        for (int c = 0; c < z.width; ++c) {
            double gain = 1.0 + lambda * u.at(r, c, 0);
            for (int ch = 0; ch < z.channels; ++ch) zmod.at(r, c, ch) = z.at(r, c, ch) * gain;
        }
    }
    return combine(x0, y_img, a, h, z, zmod, sched);
}

ImageGrid inference_input(const ImageGrid& y_img, double h, SeededRng& rng) {
    require(h >= 0.0, ErrorKind::Logic, "inference perturbation scale h must be >= 0");
    ImageGrid out = y_img;
    out.range_tag = RangeTag::ModelSpace;
    for (double& v : out.values) v += h * rng.next_normal();
    out.check_finite("inference_input");
    return out;
}

}  // namespace udavi
