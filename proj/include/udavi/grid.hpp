#pragma once

#include <cstddef>
#include <vector>

#include "udavi/errors.hpp"

namespace udavi {

// Declared value-range semantics of a raster. ModelSpace values live in
// [-1,1] nominally but may overshoot during optimization; MemorySpace values
// are hard-clamped to [0,1]; Unbounded carries no contract.
enum class RangeTag { ModelSpace, MemorySpace, Unbounded };

const char* range_tag_name(RangeTag tag);

// H x W x C raster stored row-major, channel-minor:
// index(r, c, ch) = (r*width + c)*channels + ch.
struct ImageGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    RangeTag range_tag = RangeTag::Unbounded;
    std::vector<double> values;

    ImageGrid() = default;
    ImageGrid(int h, int w, int c, RangeTag tag);

    static ImageGrid zeros(int h, int w, int c, RangeTag tag = RangeTag::Unbounded);
    static ImageGrid constant(int h, int w, int c, double value, RangeTag tag = RangeTag::Unbounded);

    double& at(int r, int c, int ch) { return values[size_t((r * width + c) * channels + ch)]; }
    double at(int r, int c, int ch) const { return values[size_t((r * width + c) * channels + ch)]; }

    size_t size() const { return values.size(); }
    int pixel_count() const { return height * width; }
    bool same_shape(const ImageGrid& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }

    // Throws a numeric error if any value is NaN/Inf; `where` names the producing operation.
    void check_finite(const char* where) const;
    // Throws if a MemorySpace grid strays outside [0,1].
    void check_range(const char* where) const;
};

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* where);

// Elementwise helpers used across modules. All are pure.
ImageGrid add(const ImageGrid& a, const ImageGrid& b);
ImageGrid sub(const ImageGrid& a, const ImageGrid& b);
ImageGrid scale(const ImageGrid& a, double s);
// a + s*b
ImageGrid axpy(const ImageGrid& a, double s, const ImageGrid& b);

double dot(const ImageGrid& a, const ImageGrid& b);
double sum_squares(const ImageGrid& a);
double max_abs_diff(const ImageGrid& a, const ImageGrid& b);
bool bit_equal(const ImageGrid& a, const ImageGrid& b);

// Nearest-neighbor block replication by an integer factor (used to lift
// low-resolution measurements onto the model grid).
ImageGrid upsample_nearest(const ImageGrid& y, int factor);

}  // namespace udavi
