#include "udavi/prior.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace udavi {

GaussianPrior GaussianPrior::single(std::vector<double> mean, DenseMatrix cov) {
    GaussianComponent comp;
    comp.weight = 1.0;
    comp.mean = std::move(mean);
    comp.cov = std::move(cov);
    return mixture({std::move(comp)});
}

GaussianPrior GaussianPrior::mixture(std::vector<GaussianComponent> comps) {
    require(!comps.empty(), ErrorKind::Config, "prior needs at least one component");
    GaussianPrior p;
    p.comps_ = std::move(comps);
    p.dim_ = int(p.comps_[0].mean.size());
    double wsum = 0.0;
    for (const auto& c : p.comps_) {
        require(int(c.mean.size()) == p.dim_, ErrorKind::Config, "prior component dims differ");
        require(c.cov.rows == p.dim_ && c.cov.cols == p.dim_, ErrorKind::Config,
                "prior covariance dims differ from mean");
        require(c.weight > 0.0, ErrorKind::Config, "prior weights must be positive");
        wsum += c.weight;
    }
    require(std::fabs(wsum - 1.0) <= 1e-9, ErrorKind::Config, "prior weights must sum to 1");
    p.prepare();
    return p;
}

void GaussianPrior::prepare() {
    prepared_.clear();
    prepared_.reserve(comps_.size());
    for (auto& comp : comps_) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            cov(comp.cov.entries.data(), dim_, dim_);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        require(solver.info() == Eigen::Success, ErrorKind::Numeric,
                "prior covariance eigendecomposition failed");
        Prepared prep;
        prep.eigvals.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + dim_);
        for (double ev : prep.eigvals) {
            require(ev > 0.0, ErrorKind::Numeric, "prior covariance must be SPD");
        }
        prep.eigvecs = DenseMatrix(dim_, dim_);
        for (int r = 0; r < dim_; ++r)
            for (int c = 0; c < dim_; ++c) prep.eigvecs.at(r, c) = solver.eigenvectors()(r, c);
        prep.chol = std::make_shared<const CholeskyFactor>(comp.cov);
        comp.cov.spd_verified = true;
        prepared_.push_back(std::move(prep));
    }
}

void GaussianPrior::component_whiten(size_t k, const std::vector<double>& x, double alpha_bar,
                                     std::vector<double>* solved, double* quad,
                                     double* log_det) const {
    const auto& comp = comps_[k];
    const auto& prep = prepared_[k];
    double sqrt_ab = std::sqrt(alpha_bar);
    std::vector<double> resid(size_t(dim_), 0.0);
    for (int i = 0; i < dim_; ++i) resid[size_t(i)] = x[size_t(i)] - sqrt_ab * comp.mean[size_t(i)];
    // C_t^{-1} r = Q diag(1/(ab*l + 1-ab)) Q^T r
    std::vector<double> qtr(size_t(dim_), 0.0);
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int r = 0; r < dim_; ++r) acc += prep.eigvecs.at(r, i) * resid[size_t(r)];
        qtr[size_t(i)] = acc;
    }
    double ld = 0.0;
    for (int i = 0; i < dim_; ++i) {
        double marg = alpha_bar * prep.eigvals[size_t(i)] + (1.0 - alpha_bar);
        if (!(marg > 0.0)) {
            fail_numeric("teacher score: diffused covariance not SPD at eigenvalue " +
                         std::to_string(i));
        }
        qtr[size_t(i)] /= marg;
        ld += std::log(marg);
    }
    solved->assign(size_t(dim_), 0.0);
    double q = 0.0;
    for (int r = 0; r < dim_; ++r) {
        double acc = 0.0;
        for (int i = 0; i < dim_; ++i) acc += prep.eigvecs.at(r, i) * qtr[size_t(i)];
        (*solved)[size_t(r)] = acc;
        q += acc * resid[size_t(r)];
    }
    *quad = q;
    *log_det = ld;
}

ImageGrid GaussianPrior::score(const ImageGrid& x_t, int t, const ScheduleTable& sched) const {
    require(int(x_t.size()) == dim_, ErrorKind::Logic, "teacher score: dimension mismatch");
    double alpha_bar = sched.alpha_bar(t);
    ImageGrid out = x_t;
    out.range_tag = RangeTag::Unbounded;
    if (comps_.size() == 1) {
        std::vector<double> solved;
        double quad, ld;
        component_whiten(0, x_t.values, alpha_bar, &solved, &quad, &ld);
        for (int i = 0; i < dim_; ++i) out.values[size_t(i)] = -solved[size_t(i)];
        out.check_finite("teacher_score");
        return out;
    }
    // responsibility-weighted sum of component scores (exact mixture gradient)
    size_t n = comps_.size();
    std::vector<std::vector<double>> solves(n);
    std::vector<double> logps(n);
    double max_logp = -1e300;
    for (size_t k = 0; k < n; ++k) {
        double quad, ld;
        component_whiten(k, x_t.values, alpha_bar, &solves[k], &quad, &ld);
        logps[k] = std::log(comps_[k].weight) - 0.5 * (quad + ld);
        max_logp = std::max(max_logp, logps[k]);
    }
    double denom = 0.0;
    for (size_t k = 0; k < n; ++k) denom += std::exp(logps[k] - max_logp);
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (size_t k = 0; k < n; ++k) {
            double resp = std::exp(logps[k] - max_logp) / denom;
            acc += resp * (-solves[k][size_t(i)]);
        }
        out.values[size_t(i)] = acc;
    }
    out.check_finite("teacher_score");
    return out;
}

double GaussianPrior::log_marginal_density(const ImageGrid& x_t, int t,
                                           const ScheduleTable& sched) const {
    require(int(x_t.size()) == dim_, ErrorKind::Logic, "log marginal: dimension mismatch");
    double alpha_bar = sched.alpha_bar(t);
    double max_logp = -1e300;
    std::vector<double> logps(comps_.size());
    for (size_t k = 0; k < comps_.size(); ++k) {
        std::vector<double> solved;
        double quad, ld;
        component_whiten(k, x_t.values, alpha_bar, &solved, &quad, &ld);
        logps[k] = std::log(comps_[k].weight) -
                   0.5 * (quad + ld + dim_ * std::log(2.0 * M_PI));
        max_logp = std::max(max_logp, logps[k]);
    }
    double acc = 0.0;
    for (double lp : logps) acc += std::exp(lp - max_logp);
    return max_logp + std::log(acc);
}

std::vector<double> GaussianPrior::sample(SeededRng& rng) const {
    size_t k = 0;
    if (comps_.size() > 1) {
        double u = rng.next_double();
        double acc = 0.0;
        for (size_t i = 0; i < comps_.size(); ++i) {
            acc += comps_[i].weight;
            if (u < acc || i + 1 == comps_.size()) {
                k = i;
                break;
            }
        }
    }
    std::vector<double> z(size_t(dim_), 0.0);
    for (double& v : z) v = rng.next_normal();
    std::vector<double> lz = prepared_[k].chol->apply_factor(z);
    for (int i = 0; i < dim_; ++i) lz[size_t(i)] += comps_[k].mean[size_t(i)];
    return lz;
}

}  // namespace udavi
