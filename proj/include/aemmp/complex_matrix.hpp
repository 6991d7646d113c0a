// SPDX-License-Identifier: Apache-2.0
//
// Dense complex/real row-major matrices plus the small set of linear-algebra
// routines the estimation stack relies on.

#ifndef AEMMP_COMPLEX_MATRIX_HPP
#define AEMMP_COMPLEX_MATRIX_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace aemmp {

using cplx = std::complex<double>;

class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols, cplx fill = cplx(0.0, 0.0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static ComplexMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

    bool same_shape(const ComplexMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool is_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

class RealMatrix {
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const double& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool is_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Standard product; throws std::invalid_argument on inner-dimension mismatch.
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);

// Conjugate transpose.
ComplexMatrix hermitian(const ComplexMatrix& a);

ComplexMatrix add(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix subtract(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix scale(const ComplexMatrix& a, cplx factor);

double frobenius_norm(const ComplexMatrix& a);

// Relative Frobenius distance ||a - b||_F / ||b||_F (0/0 treated as 0).
double rel_frobenius_error(const ComplexMatrix& a, const ComplexMatrix& b);

// The k right-singular vectors of y for the k largest singular values,
// returned as the columns of a cols(y) x k semi-unitary matrix. Computed by
// a one-sided Jacobi eigen-decomposition of the Gram matrix y^H y.
// Throws std::invalid_argument when k is out of range.
ComplexMatrix right_singular_block(const ComplexMatrix& y, std::size_t k);

}  // namespace aemmp

#endif
