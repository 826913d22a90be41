#include "udavi/oracle.hpp"

#include <cmath>

namespace udavi {

std::vector<double> PosteriorOracle::posterior_std() const {
    std::vector<double> out(size_t(sigma_post.rows), 0.0);
    for (int i = 0; i < sigma_post.rows; ++i) out[size_t(i)] = std::sqrt(sigma_post.at(i, i));
    return out;
}

PosteriorOracle gaussian_posterior(const GaussianPrior& prior, const DenseMatrix& h_matrix,
                                   double sigma_y, std::span<const double> y) {
    require(prior.is_single(), ErrorKind::Config,
            "posterior oracle requires a single-component Gaussian prior");
    const GaussianComponent& comp = prior.components()[0];
    int n = prior.dim();
    int m = h_matrix.rows;
    require(h_matrix.cols == n, ErrorKind::Logic, "posterior oracle: H column mismatch");
    require(int(y.size()) == m, ErrorKind::Logic, "posterior oracle: y dimension mismatch");
    require(sigma_y >= 0.0, ErrorKind::Config, "posterior oracle: sigma_y must be >= 0");

    // S = H Sigma0 H^T + sigma_y^2 I (innovation covariance)
    DenseMatrix sigma_ht = comp.cov.matmul(h_matrix.transpose());  // n x m
    DenseMatrix innovation = h_matrix.matmul(sigma_ht);            // m x m
    for (int i = 0; i < m; ++i) innovation.at(i, i) += sigma_y * sigma_y;

    CholeskyFactor factor = [&]() {
        try {
            return CholeskyFactor(innovation);
        } catch (const Error&) {
            fail_numeric("posterior oracle: innovation matrix is singular");
        }
    }();

    std::vector<double> h_mu = h_matrix.matvec(comp.mean);
    std::vector<double> resid(size_t(m), 0.0);
    for (int i = 0; i < m; ++i) resid[size_t(i)] = y[size_t(i)] - h_mu[size_t(i)];
    std::vector<double> solved = factor.solve(resid);

    PosteriorOracle oracle;
    oracle.mu_post = comp.mean;
    std::vector<double> gain = sigma_ht.matvec(solved);
    for (int i = 0; i < n; ++i) oracle.mu_post[size_t(i)] += gain[size_t(i)];

    // Sigma_post = Sigma0 - Sigma0 H^T S^{-1} H Sigma0
    DenseMatrix ht_sigma = sigma_ht.transpose();  // m x n, equals H Sigma0
    DenseMatrix s_inv_h_sigma(m, n);
    std::vector<double> col(size_t(m), 0.0);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < m; ++r) col[size_t(r)] = ht_sigma.at(r, c);
        std::vector<double> x = factor.solve(col);
        for (int r = 0; r < m; ++r) s_inv_h_sigma.at(r, c) = x[size_t(r)];
    }
    DenseMatrix correction = sigma_ht.matmul(s_inv_h_sigma);  // n x n
    oracle.sigma_post = comp.cov;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) oracle.sigma_post.at(r, c) -= correction.at(r, c);
    oracle.sigma_post.verify_spd();
    return oracle;
}

}  // namespace udavi
