#include "heavychain/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heavychain/parallel.hpp"

namespace heavychain {

namespace {

double dot_cols(const Matrix& A, std::size_t j, std::size_t k) {
    const std::size_t N = A.rows(), n = A.cols();
    const double* base = A.data();
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += base[i * n + j] * base[i * n + k];
    return s;
}

void check_finite(const Matrix& A) {
    const double* p = A.data();
    const std::size_t total = A.rows() * A.cols();
    for (std::size_t i = 0; i < total; ++i)
        if (!std::isfinite(p[i])) throw std::invalid_argument("matrix has non-finite entries");
}

double off_diag_frobenius_sq(const Matrix& S) {
    const std::size_t n = S.rows();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * S.at(i, j) * S.at(i, j);
    return s;
}

double frobenius_sq(const Matrix& S) {
    double s = 0.0;
    const double* p = S.data();
    const std::size_t total = S.rows() * S.cols();
    for (std::size_t i = 0; i < total; ++i) s += p[i] * p[i];
    return s;
}

} // namespace

Matrix gram_serial(const Matrix& A) {
    const std::size_t n = A.cols();
    Matrix G(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j; k < n; ++k) {
            const double v = dot_cols(A, j, k);
            G.at(j, k) = v;
            G.at(k, j) = v;
        }
    }
    return G;
}

Matrix gram(const Matrix& A) {
    const std::size_t n = A.cols();
    Matrix G(n, n);
    par::parallel_for(n, [&](std::size_t j) {
        for (std::size_t k = j; k < n; ++k) {
            const double v = dot_cols(A, j, k);
            G.at(j, k) = v;
            G.at(k, j) = v;
        }
    });
    return G;
}

std::vector<double> jacobi_eigenvalues(Matrix S, JacobiOptions opts) {
    require(S.rows() == S.cols(), "jacobi_eigenvalues: matrix not square");
    check_finite(S);
    const std::size_t n = S.rows();
    if (n == 1) return {S.at(0, 0)};

    const double tol_sq =
        opts.tol_factor * opts.tol_factor * frobenius_sq(S); // threshold on off^2

    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        if (off_diag_frobenius_sq(S) <= tol_sq) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = S.at(p, q);
                if (apq == 0.0) continue;
                const double app = S.at(p, p), aqq = S.at(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                // smaller-magnitude root for numerical stability
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = S.at(k, p), skq = S.at(k, q);
                    S.at(k, p) = c * skp - s * skq;
                    S.at(k, q) = s * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = S.at(p, k), sqk = S.at(q, k);
                    S.at(p, k) = c * spk - s * sqk;
                    S.at(q, k) = s * spk + c * sqk;
                }
            }
        }
    }

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = S.at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

SingularPair extreme_singulars(const Matrix& A, JacobiOptions opts) {
    require(A.rows() >= A.cols() && A.cols() >= 1,
            "extreme_singulars requires a tall or square matrix (N >= n >= 1)");
    check_finite(A);
    const auto eig = jacobi_eigenvalues(gram(A), opts);
    SingularPair out;
    out.s_min = std::sqrt(std::max(0.0, eig.front()));
    out.s_max = std::sqrt(std::max(0.0, eig.back()));
    return out;
}

Matrix sample_covariance(const Matrix& rows) {
    require(rows.rows() >= 1, "sample_covariance requires N >= 1");
    Matrix G = gram(rows);
    const double inv = 1.0 / static_cast<double>(rows.rows());
    for (std::size_t i = 0; i < G.rows() * G.cols(); ++i) G.data()[i] *= inv;
    return G;
}

Matrix sample_covariance(const SampleMatrix& X) { return sample_covariance(X.data); }

double op_norm_deviation(const Matrix& sigma_n, const Matrix& sigma) {
    require(sigma_n.same_shape(sigma), "op_norm_deviation: dimension mismatch");
    const std::size_t n = sigma_n.rows();
    Matrix D(n, n);
    for (std::size_t i = 0; i < n * n; ++i)
        D.data()[i] = sigma_n.data()[i] - sigma.data()[i];
    const auto eig = jacobi_eigenvalues(std::move(D));
    return std::max(std::abs(eig.front()), std::abs(eig.back()));
}

bool validate_covariance(const Matrix& sigma) {
    const std::size_t n = sigma.rows();
    if (n != sigma.cols()) return false;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(sigma.at(i, j)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(sigma.at(i, j) - sigma.at(j, i)) > 1e-12 * std::max(scale, 1.0))
                return false;
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += sigma.at(i, i);
    const auto eig = jacobi_eigenvalues(sigma);
    return eig.front() >= -1e-10 * trace / static_cast<double>(n);
}

double quadratic_sup_finite(const Matrix& rows, const std::vector<std::vector<double>>& T,
                            const std::vector<double>* targets) {
    require(!T.empty(), "quadratic_sup_finite: empty T");
    const std::size_t N = rows.rows(), n = rows.cols();
    if (targets) require(targets->size() == T.size(), "targets size mismatch");

    std::vector<double> devs(T.size(), 0.0);
    par::for_each_trial(T.size(), [&](std::size_t ti) {
        const auto& t = T[ti];
        if (t.size() != n) {
            devs[ti] = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        double target;
        if (targets) {
            target = (*targets)[ti];
        } else {
            target = 0.0;
            for (double x : t) target += x * x;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const auto row = rows.row(i);
            double ip = 0.0;
            for (std::size_t j = 0; j < n; ++j) ip += row[j] * t[j];
            sum += ip * ip;
        }
        devs[ti] = std::abs(sum / static_cast<double>(N) - target);
    });
    double best = 0.0;
    for (double d : devs) {
        if (std::isnan(d)) throw std::invalid_argument("quadratic_sup_finite: dimension mismatch");
        best = std::max(best, d);
    }
    return best;
}

} // namespace heavychain
