#pragma once

#include <vector>

#include "heavychain/distributions.hpp"
#include "heavychain/matrix.hpp"

namespace heavychain {

struct SingularPair {
    double s_min = 0.0;
    double s_max = 0.0;
};

// A^T A for a tall N x n matrix. The OpenMP kernel parallelizes over output
// entries, so each entry's summation order is fixed and the result is
// bit-identical to the serial reference.
Matrix gram(const Matrix& A);
Matrix gram_serial(const Matrix& A);

struct JacobiOptions {
    double tol_factor = 1e-12; // off-diagonal Frobenius threshold, relative to ||S||_F
    int max_sweeps = 50;
};

// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
std::vector<double> jacobi_eigenvalues(Matrix S, JacobiOptions opts = {});

// Extreme singular values of a tall matrix via the symmetric eigenproblem on
// A^T A; eigenvalues clamped at 0 before the square root.
SingularPair extreme_singulars(const Matrix& A, JacobiOptions opts = {});

// Sigma_N = (1/N) sum X_i (x) X_i
Matrix sample_covariance(const SampleMatrix& X);
Matrix sample_covariance(const Matrix& rows);

// Spectral norm of Sigma_N - Sigma (largest |eigenvalue| of the difference).
double op_norm_deviation(const Matrix& sigma_n, const Matrix& sigma);

// Checks the CovMatrix contract: symmetric to 1e-12 relative, eigenvalues
// >= -1e-10 * trace / n.
bool validate_covariance(const Matrix& sigma);

// max over t in T of | N^{-1} sum <X_i,t>^2 - target(t) |. Targets default to
// ||t||_2^2 (the isotropic case).
double quadratic_sup_finite(const Matrix& rows, const std::vector<std::vector<double>>& T,
                            const std::vector<double>* targets = nullptr);

} // namespace heavychain
