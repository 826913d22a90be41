#pragma once

#include <functional>
#include <span>
#include <vector>

#include "udavi/errors.hpp"

namespace udavi {

// Row-major dense matrix for the desk-scale oracle paths.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> entries;
    // Set by verify_spd() after a successful Cholesky factorization.
    bool spd_verified = false;

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), entries(size_t(r) * size_t(c), 0.0) {
        require(r > 0 && c > 0, ErrorKind::Logic, "DenseMatrix dims must be positive");
    }

    static DenseMatrix identity(int n);

    double& at(int r, int c) { return entries[size_t(r) * cols + c]; }
    double at(int r, int c) const { return entries[size_t(r) * cols + c]; }

    DenseMatrix transpose() const;
    std::vector<double> matvec(std::span<const double> x) const;
    DenseMatrix matmul(const DenseMatrix& other) const;
    DenseMatrix scaled(double s) const;
    DenseMatrix plus(const DenseMatrix& other) const;

    // Attempts a Cholesky factorization; sets spd_verified on success.
    bool verify_spd();
};

// Lower-triangular Cholesky factor of an SPD matrix. Throws a numeric error
// naming the failing pivot when the matrix is not SPD.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const DenseMatrix& a);

    std::vector<double> solve(std::span<const double> b) const;
    // L*x (useful for sampling from N(0, A) via L*z).
    std::vector<double> apply_factor(std::span<const double> x) const;
    double log_det() const;
    int dim() const { return n_; }

private:
    int n_;
    std::vector<double> lower_;  // row-major lower triangle, full storage
};

// Solves A x = b for SPD A. Errors name the failing pivot for non-SPD input.
std::vector<double> cholesky_solve(const DenseMatrix& a, std::span<const double> b);

// Central-difference gradient of a scalar function. Errors if f evaluates to
// a non-finite value at any probe point.
std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> x, double step);

double norm2(std::span<const double> v);

}  // namespace udavi
