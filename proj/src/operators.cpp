#include "udavi/operators.hpp"

#include <cmath>

namespace udavi {

namespace {

// Symmetric (edge-repeat) reflection onto [0, n), folding as many times as
// the kernel overhang requires.
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace

ImageGrid make_gaussian_kernel(int size, double sigma) {
    require(size > 0 && size % 2 == 1, ErrorKind::Config,
            "gaussian kernel size must be odd and positive, got " + std::to_string(size));
    require(sigma > 0.0, ErrorKind::Config, "gaussian kernel sigma must be positive");
    ImageGrid k(size, size, 1, RangeTag::Unbounded);
    int half = size / 2;
    double sum = 0.0;
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            double dr = r - half, dc = c - half;
            double v = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
            k.at(r, c, 0) = v;
            sum += v;
        }
    }
    for (double& v : k.values) v /= sum;
    return k;
}

ForwardOperator::ForwardOperator() {
    kernel_ = ImageGrid::constant(1, 1, 1, 1.0, RangeTag::Unbounded);
}

ForwardOperator ForwardOperator::gaussian_blur(ImageGrid kernel, double noise_sigma) {
    require(kernel.channels == 1 && kernel.height == kernel.width && kernel.height % 2 == 1,
            ErrorKind::Config, "blur kernel must be odd square single-channel");
    require(noise_sigma >= 0.0, ErrorKind::Config, "noise sigma must be >= 0");
    double sum = 0.0;
    for (double v : kernel.values) sum += v;
    require(std::fabs(sum - 1.0) <= 1e-12, ErrorKind::Config, "blur kernel must sum to 1");
    int n = kernel.height;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            require(std::fabs(kernel.at(r, c, 0) - kernel.at(n - 1 - r, n - 1 - c, 0)) <= 1e-12,
                    ErrorKind::Config, "blur kernel must be symmetric under 180-degree rotation");
    ForwardOperator op;
    op.kind_ = OperatorKind::GaussianBlur;
    op.kernel_ = std::move(kernel);
    op.noise_sigma_ = noise_sigma;
    return op;
}

ForwardOperator ForwardOperator::avg_pool_sr(int factor, double noise_sigma) {
    require(factor >= 1, ErrorKind::Config, "SR factor must be a positive integer");
    require(noise_sigma >= 0.0, ErrorKind::Config, "noise sigma must be >= 0");
    ForwardOperator op;
    op.kind_ = OperatorKind::AvgPoolSR;
    op.factor_ = factor;
    op.noise_sigma_ = noise_sigma;
    return op;
}

void ForwardOperator::output_dims(int h, int w, int c, int* oh, int* ow, int* oc) const {
    if (kind_ == OperatorKind::GaussianBlur) {
        *oh = h;
        *ow = w;
        *oc = c;
    } else {
        require(h % factor_ == 0 && w % factor_ == 0, ErrorKind::Config,
                "SR factor must divide input height and width");
        *oh = h / factor_;
        *ow = w / factor_;
        *oc = c;
    }
}

ImageGrid ForwardOperator::apply(const ImageGrid& x) const {
    int oh, ow, oc;
    output_dims(x.height, x.width, x.channels, &oh, &ow, &oc);
    ImageGrid y(oh, ow, oc, RangeTag::Unbounded);
    if (kind_ == OperatorKind::GaussianBlur) {
        int half = kernel_.height / 2;
        for (int r = 0; r < x.height; ++r) {
            for (int c = 0; c < x.width; ++c) {
                for (int ch = 0; ch < x.channels; ++ch) {
                    double acc = 0.0;
                    for (int kr = 0; kr < kernel_.height; ++kr) {
                        int sr = reflect_index(r + kr - half, x.height);
                        for (int kc = 0; kc < kernel_.width; ++kc) {
                            int sc = reflect_index(c + kc - half, x.width);
                            acc += kernel_.at(kr, kc, 0) * x.at(sr, sc, ch);
                        }
                    }
                    y.at(r, c, ch) = acc;
                }
            }
        }
    } else {
        double inv = 1.0 / double(factor_ * factor_);
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                for (int ch = 0; ch < oc; ++ch) {
                    double acc = 0.0;
                    for (int br = 0; br < factor_; ++br)
                        for (int bc = 0; bc < factor_; ++bc)
                            acc += x.at(r * factor_ + br, c * factor_ + bc, ch);
                    y.at(r, c, ch) = acc * inv;
                }
            }
        }
    }
    y.check_finite("forward apply");
    return y;
}

ImageGrid ForwardOperator::apply_adjoint(const ImageGrid& y) const {
    if (kind_ == OperatorKind::GaussianBlur) {
        // Adjoint of convolve-with-reflect: scatter each output weight back to
        // the source pixel it read, i.e. accumulate through the same index map.
        ImageGrid x(y.height, y.width, y.channels, RangeTag::Unbounded);
        int half = kernel_.height / 2;
        for (int r = 0; r < y.height; ++r) {
            for (int c = 0; c < y.width; ++c) {
                for (int ch = 0; ch < y.channels; ++ch) {
                    double g = y.at(r, c, ch);
                    if (g == 0.0) continue;
                    for (int kr = 0; kr < kernel_.height; ++kr) {
                        int sr = reflect_index(r + kr - half, y.height);
                        for (int kc = 0; kc < kernel_.width; ++kc) {
                            int sc = reflect_index(c + kc - half, y.width);
                            x.at(sr, sc, ch) += kernel_.at(kr, kc, 0) * g;
                        }
                    }
                }
            }
        }
        x.check_finite("forward adjoint");
        return x;
    }
    ImageGrid x(y.height * factor_, y.width * factor_, y.channels, RangeTag::Unbounded);
    double inv = 1.0 / double(factor_ * factor_);
    for (int r = 0; r < y.height; ++r)
        for (int c = 0; c < y.width; ++c)
            for (int ch = 0; ch < y.channels; ++ch) {
                double v = y.at(r, c, ch) * inv;
                for (int br = 0; br < factor_; ++br)
                    for (int bc = 0; bc < factor_; ++bc)
                        x.at(r * factor_ + br, c * factor_ + bc, ch) = v;
            }
    x.check_finite("forward adjoint");
    return x;
}

ImageGrid ForwardOperator::measure(const ImageGrid& x0, SeededRng& rng) const {
    require(x0.range_tag == RangeTag::ModelSpace, ErrorKind::Logic,
            "measure expects a model-space image");
    ImageGrid y = apply(x0);
    if (noise_sigma_ > 0.0) {
        for (double& v : y.values) v += noise_sigma_ * rng.next_normal();
    } else {
        // Consume the same number of draws so sigma_y=0 stays stream-compatible.
        for (size_t i = 0; i < y.values.size(); ++i) (void)rng.next_normal();
    }
    y.check_finite("measure");
    return y;
}

DenseMatrix ForwardOperator::as_dense_matrix(int h, int w, int c, int entry_cap) const {
    int dim = h * w * c;
    require(dim <= entry_cap, ErrorKind::Config,
            "as_dense_matrix: input dimension " + std::to_string(dim) + " above cap " +
                std::to_string(entry_cap));
    int oh, ow, oc;
    output_dims(h, w, c, &oh, &ow, &oc);
    int odim = oh * ow * oc;
    DenseMatrix m(odim, dim);
    ImageGrid basis = ImageGrid::zeros(h, w, c, RangeTag::Unbounded);
    for (int k = 0; k < dim; ++k) {
        basis.values[size_t(k)] = 1.0;
        ImageGrid col = apply(basis);
        for (int r = 0; r < odim; ++r) m.at(r, k) = col.values[size_t(r)];
        basis.values[size_t(k)] = 0.0;
    }
    return m;
}

}  // namespace udavi
