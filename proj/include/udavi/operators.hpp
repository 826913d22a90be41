#pragma once

#include "udavi/grid.hpp"
#include "udavi/linalg.hpp"
#include "udavi/rng.hpp"

namespace udavi {

enum class OperatorKind { GaussianBlur, AvgPoolSR };

// Discretized isotropic Gaussian kernel, normalized to unit sum. Size must be odd.
ImageGrid make_gaussian_kernel(int size, double sigma);

// Linear measurement operator: per-channel convolution with reflect (symmetric)
// boundary for blur, or non-overlapping block mean for average-pool
// super-resolution. Immutable after construction.
class ForwardOperator {
public:
    // Default is the identity operator (1x1 unit kernel, no noise).
    ForwardOperator();

    static ForwardOperator gaussian_blur(ImageGrid kernel, double noise_sigma);
    static ForwardOperator avg_pool_sr(int factor, double noise_sigma);

    OperatorKind kind() const { return kind_; }
    double noise_sigma() const { return noise_sigma_; }
    int sr_factor() const { return factor_; }
    const ImageGrid& kernel() const { return kernel_; }

    // Output dims for an input of the given shape (errors on incompatibility).
    void output_dims(int h, int w, int c, int* oh, int* ow, int* oc) const;

    ImageGrid apply(const ImageGrid& x) const;
    ImageGrid apply_adjoint(const ImageGrid& y) const;
    // apply + sigma_y * z with z ~ N(0, I); x0 must be ModelSpace.
    ImageGrid measure(const ImageGrid& x0, SeededRng& rng) const;

    // Explicit matrix with M*vec(x) == vec(apply(x)). Errors above the cap.
    DenseMatrix as_dense_matrix(int h, int w, int c, int entry_cap = 4096) const;

private:
    OperatorKind kind_ = OperatorKind::GaussianBlur;
    ImageGrid kernel_;  // K x K x 1, unit sum, 180-degree symmetric
    int factor_ = 1;
    double noise_sigma_ = 0.0;
};

}  // namespace udavi
