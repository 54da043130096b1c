#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace heavychain {

// Dense row-major matrix of doubles. Rows are the sample index, columns the
// ambient dimension. Nothing fancy: the eigensolver and the Gram kernels in
// linalg.cpp do all the numerical work on the raw buffer.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

} // namespace heavychain
