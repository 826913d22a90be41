#include "udavi/linalg.hpp"

#include <cmath>

namespace udavi {

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols, rows);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) t.at(c, r) = at(r, c);
    return t;
}

std::vector<double> DenseMatrix::matvec(std::span<const double> x) const {
    require(int(x.size()) == cols, ErrorKind::Logic, "matvec: dimension mismatch");
    std::vector<double> y(size_t(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = entries.data() + size_t(r) * cols;
        for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

DenseMatrix DenseMatrix::matmul(const DenseMatrix& other) const {
    require(cols == other.rows, ErrorKind::Logic, "matmul: dimension mismatch");
    DenseMatrix out(rows, other.cols);
    for (int r = 0; r < rows; ++r) {
        for (int k = 0; k < cols; ++k) {
            double a = at(r, k);
            if (a == 0.0) continue;
            const double* brow = other.entries.data() + size_t(k) * other.cols;
            double* orow = out.entries.data() + size_t(r) * out.cols;
            for (int c = 0; c < other.cols; ++c) orow[c] += a * brow[c];
        }
    }
    return out;
}

DenseMatrix DenseMatrix::scaled(double s) const {
    DenseMatrix out = *this;
    for (double& v : out.entries) v *= s;
    return out;
}

DenseMatrix DenseMatrix::plus(const DenseMatrix& other) const {
    require(rows == other.rows && cols == other.cols, ErrorKind::Logic, "plus: shape mismatch");
    DenseMatrix out = *this;
    for (size_t i = 0; i < out.entries.size(); ++i) out.entries[i] += other.entries[i];
    return out;
}

bool DenseMatrix::verify_spd() {
    try {
        CholeskyFactor f(*this);
        spd_verified = true;
    } catch (const Error&) {
        spd_verified = false;
    }
    return spd_verified;
}

CholeskyFactor::CholeskyFactor(const DenseMatrix& a) : n_(a.rows) {
    require(a.rows == a.cols, ErrorKind::Numeric, "cholesky: matrix must be square");
    lower_.assign(size_t(n_) * n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j <= i; ++j) {
            double acc = a.at(i, j);
            for (int k = 0; k < j; ++k) acc -= lower_[size_t(i) * n_ + k] * lower_[size_t(j) * n_ + k];
            if (i == j) {
                if (!(acc > 0.0) || !std::isfinite(acc)) {
                    fail_numeric("cholesky: matrix not SPD, pivot " + std::to_string(i) +
                                 " = " + std::to_string(acc));
                }
                lower_[size_t(i) * n_ + j] = std::sqrt(acc);
            } else {
                lower_[size_t(i) * n_ + j] = acc / lower_[size_t(j) * n_ + j];
            }
        }
    }
}

std::vector<double> CholeskyFactor::solve(std::span<const double> b) const {
    require(int(b.size()) == n_, ErrorKind::Logic, "cholesky solve: dimension mismatch");
    std::vector<double> y(b.begin(), b.end());
    // forward: L y = b
    for (int i = 0; i < n_; ++i) {
        double acc = y[i];
        for (int k = 0; k < i; ++k) acc -= lower_[size_t(i) * n_ + k] * y[k];
        y[i] = acc / lower_[size_t(i) * n_ + i];
    }
    // backward: L^T x = y
    for (int i = n_ - 1; i >= 0; --i) {
        double acc = y[i];
        for (int k = i + 1; k < n_; ++k) acc -= lower_[size_t(k) * n_ + i] * y[k];
        y[i] = acc / lower_[size_t(i) * n_ + i];
    }
    return y;
}

std::vector<double> CholeskyFactor::apply_factor(std::span<const double> x) const {
    require(int(x.size()) == n_, ErrorKind::Logic, "cholesky apply: dimension mismatch");
    std::vector<double> y(size_t(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (int k = 0; k <= i; ++k) acc += lower_[size_t(i) * n_ + k] * x[k];
        y[i] = acc;
    }
    return y;
}

double CholeskyFactor::log_det() const {
    double acc = 0.0;
    for (int i = 0; i < n_; ++i) acc += std::log(lower_[size_t(i) * n_ + i]);
    return 2.0 * acc;
}

std::vector<double> cholesky_solve(const DenseMatrix& a, std::span<const double> b) {
    CholeskyFactor f(a);
    return f.solve(b);
}

std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> x, double step) {
    require(step > 0.0, ErrorKind::Logic, "finite_diff_gradient: step must be positive");
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> grad(x.size(), 0.0);
    for (size_t k = 0; k < x.size(); ++k) {
        double saved = probe[k];
        probe[k] = saved + step;
        double fp = f(probe);
        probe[k] = saved - step;
        double fm = f(probe);
        probe[k] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            fail_numeric("finite_diff_gradient: non-finite evaluation at coordinate " +
                         std::to_string(k));
        }
        grad[k] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace udavi
