#pragma once

#include <vector>

#include "udavi/grid.hpp"

namespace udavi {

// Peak signal-to-noise ratio in dB over the model-space range [-1,1] (R = 2).
// Identical images return the cap sentinel 99.0 dB.
double psnr(const ImageGrid& x, const ImageGrid& ref);

constexpr double kPsnrCapDb = 99.0;

// Handcrafted per-image feature vector: [global mean, 4x4 average-pool
// thumbnail (16 values), mean 3x3 Sobel gradient energy], computed on the
// channel-averaged image. 18 features total.
std::vector<double> desk_features(const ImageGrid& img);

constexpr int kDeskFeatureDim = 18;

// Frechet distance between Gaussians fitted (sample mean, sample covariance)
// to the desk features of the two populations:
// ||mu_a - mu_b||^2 + tr(Ca + Cb - 2 (Ca Cb)^{1/2}).
// The matrix square root uses symmetric eigendecomposition; eigenvalues below
// -1e-10 are an error, small negatives are clipped to zero.
double frechet_desk(const std::vector<ImageGrid>& set_a, const std::vector<ImageGrid>& set_b);

// Same metric on raw feature rows (used by the tests' closed-form oracles).
double frechet_from_features(const std::vector<std::vector<double>>& feats_a,
                             const std::vector<std::vector<double>>& feats_b);

}  // namespace udavi
