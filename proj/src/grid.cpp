#include "udavi/grid.hpp"

#include <cmath>
#include <cstring>

namespace udavi {

const char* range_tag_name(RangeTag tag) {
    switch (tag) {
        case RangeTag::ModelSpace: return "model[-1,1]";
        case RangeTag::MemorySpace: return "memory[0,1]";
        case RangeTag::Unbounded: return "unbounded";
    }
    return "?";
}

ImageGrid::ImageGrid(int h, int w, int c, RangeTag tag)
    : height(h), width(w), channels(c), range_tag(tag) {
    require(h > 0 && w > 0 && c > 0, ErrorKind::Logic, "ImageGrid dims must be positive");
    values.assign(size_t(h) * size_t(w) * size_t(c), 0.0);
}

ImageGrid ImageGrid::zeros(int h, int w, int c, RangeTag tag) { return ImageGrid(h, w, c, tag); }

ImageGrid ImageGrid::constant(int h, int w, int c, double value, RangeTag tag) {
    ImageGrid g(h, w, c, tag);
    for (double& v : g.values) v = value;
    return g;
}

void ImageGrid::check_finite(const char* where) const {
    for (double v : values) {
        if (!std::isfinite(v)) {
            fail_numeric(std::string(where) + ": grid contains a non-finite value");
        }
    }
}

void ImageGrid::check_range(const char* where) const {
    if (range_tag != RangeTag::MemorySpace) return;
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            fail_numeric(std::string(where) + ": memory-space value outside [0,1]");
        }
    }
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* where) {
    if (!a.same_shape(b)) {
        fail_logic(std::string(where) + ": shape mismatch (" + std::to_string(a.height) + "x" +
                   std::to_string(a.width) + "x" + std::to_string(a.channels) + " vs " +
                   std::to_string(b.height) + "x" + std::to_string(b.width) + "x" +
                   std::to_string(b.channels) + ")");
    }
}

ImageGrid add(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "add");
    ImageGrid out = a;
    out.range_tag = RangeTag::Unbounded;
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

ImageGrid sub(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "sub");
    ImageGrid out = a;
    out.range_tag = RangeTag::Unbounded;
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
    return out;
}

ImageGrid scale(const ImageGrid& a, double s) {
    ImageGrid out = a;
    out.range_tag = RangeTag::Unbounded;
    for (double& v : out.values) v *= s;
    return out;
}

ImageGrid axpy(const ImageGrid& a, double s, const ImageGrid& b) {
    require_same_shape(a, b, "axpy");
    ImageGrid out = a;
    out.range_tag = RangeTag::Unbounded;
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += s * b.values[i];
    return out;
}

double dot(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
    return acc;
}

double sum_squares(const ImageGrid& a) {
    double acc = 0.0;
    for (double v : a.values) acc += v * v;
    return acc;
}

double max_abs_diff(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        m = std::max(m, std::fabs(a.values[i] - b.values[i]));
    }
    return m;
}

bool bit_equal(const ImageGrid& a, const ImageGrid& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

ImageGrid upsample_nearest(const ImageGrid& y, int factor) {
    require(factor >= 1, ErrorKind::Logic, "upsample factor must be >= 1");
    if (factor == 1) return y;
    ImageGrid out(y.height * factor, y.width * factor, y.channels, y.range_tag);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            for (int ch = 0; ch < out.channels; ++ch) {
                out.at(r, c, ch) = y.at(r / factor, c / factor, ch);
            }
        }
    }
    return out;
}

}  // namespace udavi
