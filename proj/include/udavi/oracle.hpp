#pragma once

#include <vector>

#include "udavi/grid.hpp"
#include "udavi/linalg.hpp"
#include "udavi/prior.hpp"

namespace udavi {

// Closed-form Gaussian posterior for y = H x + n, n ~ N(0, sigma_y^2 I),
// x ~ N(mu0, Sigma0). The exact stand-in the amortized sampler is checked
// against.
struct PosteriorOracle {
    std::vector<double> mu_post;
    DenseMatrix sigma_post;

    std::vector<double> posterior_std() const;
};

PosteriorOracle gaussian_posterior(const GaussianPrior& prior, const DenseMatrix& h_matrix,
                                   double sigma_y, std::span<const double> y);

}  // namespace udavi
