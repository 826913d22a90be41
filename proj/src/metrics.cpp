#include "udavi/metrics.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "udavi/errors.hpp"

namespace udavi {

double psnr(const ImageGrid& x, const ImageGrid& ref) {
    require_same_shape(x, ref, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < x.values.size(); ++i) {
        double r = x.values[i] - ref.values[i];
        mse += r * r;
    }
    mse /= double(x.values.size());
    if (mse == 0.0) return kPsnrCapDb;
    double value = 10.0 * std::log10(4.0 / mse);
    return std::min(value, kPsnrCapDb);
}

namespace {

ImageGrid to_gray(const ImageGrid& img) {
    if (img.channels == 1) return img;
    ImageGrid g(img.height, img.width, 1, RangeTag::Unbounded);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int ch = 0; ch < img.channels; ++ch) acc += img.at(r, c, ch);
            g.at(r, c, 0) = acc / double(img.channels);
        }
    return g;
}

}  // namespace

std::vector<double> desk_features(const ImageGrid& img) {
    ImageGrid g = to_gray(img);
    require(g.height % 4 == 0 && g.width % 4 == 0, ErrorKind::Config,
            "desk features need dims divisible by 4 for the 4x4 thumbnail");
    std::vector<double> f;
    f.reserve(kDeskFeatureDim);
    double mean = 0.0;
    for (double v : g.values) mean += v;
    mean /= double(g.values.size());
    f.push_back(mean);
    int bh = g.height / 4, bw = g.width / 4;
    for (int tr = 0; tr < 4; ++tr) {
        for (int tc = 0; tc < 4; ++tc) {
            double acc = 0.0;
            for (int r = 0; r < bh; ++r)
                for (int c = 0; c < bw; ++c) acc += g.at(tr * bh + r, tc * bw + c, 0);
            f.push_back(acc / double(bh * bw));
        }
    }
    // Mean squared 3x3 Sobel gradient magnitude over interior pixels.
    double energy = 0.0;
    int count = 0;
    for (int r = 1; r + 1 < g.height; ++r) {
        for (int c = 1; c + 1 < g.width; ++c) {
            double gx = (g.at(r - 1, c + 1, 0) + 2.0 * g.at(r, c + 1, 0) + g.at(r + 1, c + 1, 0)) -
                        (g.at(r - 1, c - 1, 0) + 2.0 * g.at(r, c - 1, 0) + g.at(r + 1, c - 1, 0));
            double gy = (g.at(r + 1, c - 1, 0) + 2.0 * g.at(r + 1, c, 0) + g.at(r + 1, c + 1, 0)) -
                        (g.at(r - 1, c - 1, 0) + 2.0 * g.at(r - 1, c, 0) + g.at(r - 1, c + 1, 0));
            energy += gx * gx + gy * gy;
            ++count;
        }
    }
    f.push_back(count > 0 ? energy / double(count) : 0.0);
    return f;
}

double frechet_from_features(const std::vector<std::vector<double>>& feats_a,
                             const std::vector<std::vector<double>>& feats_b) {
    require(!feats_a.empty() && !feats_b.empty(), ErrorKind::Config,
            "frechet distance needs non-empty sets");
    int dim = int(feats_a[0].size());
    require(int(feats_a.size()) > dim && int(feats_b.size()) > dim, ErrorKind::Config,
            "frechet distance: fewer samples than feature dimension " + std::to_string(dim) +
                "; reduce the feature set or add samples");

    auto fit = [dim](const std::vector<std::vector<double>>& feats, Eigen::VectorXd* mu,
                     Eigen::MatrixXd* cov) {
        int n = int(feats.size());
        *mu = Eigen::VectorXd::Zero(dim);
        for (const auto& f : feats) {
            require(int(f.size()) == dim, ErrorKind::Logic, "feature dimension mismatch");
            for (int i = 0; i < dim; ++i) (*mu)(i) += f[size_t(i)];
        }
        *mu /= double(n);
        *cov = Eigen::MatrixXd::Zero(dim, dim);
        for (const auto& f : feats) {
            Eigen::VectorXd d(dim);
            for (int i = 0; i < dim; ++i) d(i) = f[size_t(i)] - (*mu)(i);
            *cov += d * d.transpose();
        }
        *cov /= double(n - 1);
    };

    Eigen::VectorXd mu_a, mu_b;
    Eigen::MatrixXd cov_a, cov_b;
    fit(feats_a, &mu_a, &cov_a);
    fit(feats_b, &mu_b, &cov_b);

    auto clipped_sqrt = [](const Eigen::MatrixXd& sym) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        require(es.info() == Eigen::Success, ErrorKind::Numeric,
                "frechet distance: eigendecomposition failed");
        Eigen::VectorXd ev = es.eigenvalues();
        for (int i = 0; i < ev.size(); ++i) {
            require(ev(i) > -1e-10, ErrorKind::Numeric,
                    "frechet distance: matrix has a significantly negative eigenvalue");
            ev(i) = std::sqrt(std::max(ev(i), 0.0));
        }
        return Eigen::MatrixXd(es.eigenvectors() * ev.asDiagonal() *
                               es.eigenvectors().transpose());
    };

    // tr((Ca Cb)^{1/2}) via the symmetric similarity (Cb^{1/2} Ca Cb^{1/2})^{1/2}.
    Eigen::MatrixXd sqrt_b = clipped_sqrt(cov_b);
    Eigen::MatrixXd inner = sqrt_b * cov_a * sqrt_b;
    inner = 0.5 * (inner + inner.transpose());  // symmetrize round-off
    Eigen::MatrixXd sqrt_inner = clipped_sqrt(inner);

    double dist = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() -
                  2.0 * sqrt_inner.trace();
    return dist;
}

double frechet_desk(const std::vector<ImageGrid>& set_a, const std::vector<ImageGrid>& set_b) {
    require(!set_a.empty() && !set_b.empty(), ErrorKind::Config,
            "frechet distance needs non-empty image sets");
    std::vector<std::vector<double>> fa, fb;
    fa.reserve(set_a.size());
    fb.reserve(set_b.size());
    for (const auto& img : set_a) fa.push_back(desk_features(img));
    for (const auto& img : set_b) fb.push_back(desk_features(img));
    return frechet_from_features(fa, fb);
}

}  // namespace udavi
