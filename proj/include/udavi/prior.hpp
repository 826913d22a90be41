#pragma once

#include <memory>
#include <vector>

#include "udavi/grid.hpp"
#include "udavi/linalg.hpp"
#include "udavi/rng.hpp"
#include "udavi/schedule.hpp"

namespace udavi {

struct GaussianComponent {
    double weight = 1.0;
    std::vector<double> mean;
    DenseMatrix cov;
};

// Analytic prior over vectorized images: a Gaussian or a Gaussian mixture.
// Serves as the fixed teacher: the score of the noising marginal at timestep t
// is closed-form because diffusing a Gaussian keeps it Gaussian with
// covariance C_t = alpha_bar_t * Sigma + (1 - alpha_bar_t) * I.
class GaussianPrior {
public:
    static GaussianPrior single(std::vector<double> mean, DenseMatrix cov);
    static GaussianPrior mixture(std::vector<GaussianComponent> comps);

    int dim() const { return dim_; }
    const std::vector<GaussianComponent>& components() const { return comps_; }
    bool is_single() const { return comps_.size() == 1; }

    // Score of the diffused marginal at x_t; errors if C_t is not SPD.
    ImageGrid score(const ImageGrid& x_t, int t, const ScheduleTable& sched) const;
    // log density of the diffused marginal (finite-difference oracle target).
    double log_marginal_density(const ImageGrid& x_t, int t, const ScheduleTable& sched) const;

    // Draw a vectorized sample from the prior itself (t = 0 distribution).
    std::vector<double> sample(SeededRng& rng) const;

private:
    struct Prepared {
        // Symmetric eigendecomposition of the component covariance.
        DenseMatrix eigvecs;           // columns are eigenvectors
        std::vector<double> eigvals;
        std::shared_ptr<const CholeskyFactor> chol;
    };

    void prepare();
    // C_t^{-1} (x - sqrt(ab)*mu) and the log density pieces for one component.
    void component_whiten(size_t k, const std::vector<double>& x, double alpha_bar,
                          std::vector<double>* solved, double* quad, double* log_det) const;

    int dim_ = 0;
    std::vector<GaussianComponent> comps_;
    std::vector<Prepared> prepared_;
};

}  // namespace udavi
