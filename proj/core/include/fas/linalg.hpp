#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fas {

// Dense row-major matrix.
template <class T>
class BasicMatrix {
public:
    BasicMatrix() = default;
    BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    static BasicMatrix identity(std::size_t n)
    {
        BasicMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = T{1};
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using MatrixLD = BasicMatrix<long double>;

template <class To, class From>
BasicMatrix<To> matrix_cast(const BasicMatrix<From>& m)
{
    BasicMatrix<To> out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.data().size(); ++i)
        out.data()[i] = static_cast<To>(m.data()[i]);
    return out;
}

struct EigenDecomposition {
    std::vector<double> values;  // non-increasing
    Matrix vectors;              // column l pairs with values[l]
    int sweeps = 0;
    double off_diagonal = 0.0;   // Frobenius norm of the remaining off-diagonal part
};

// Cyclic Jacobi rotations, carried out in long double. Throws NumericError if
// the off-diagonal mass has not vanished after max_sweeps.
EigenDecomposition jacobi_eigen(const MatrixLD& a, int max_sweeps = 60);
EigenDecomposition jacobi_eigen(const Matrix& a, int max_sweeps = 60);

// Eigenvalues only: Householder tridiagonalisation followed by implicit QL.
// Returned non-increasing.
template <class T>
std::vector<T> symmetric_eigenvalues(BasicMatrix<T> a);

// Implicit QL on a symmetric tridiagonal matrix with diagonal d and
// sub-diagonal e (e[0] unused, e[i] couples i-1 and i). d is overwritten with
// the eigenvalues (unsorted). If first_components is non-null it receives the
// first component of each eigenvector, aligned with d (Golub-Welsch weights).
template <class T>
void tridiagonal_ql(std::vector<T>& d, std::vector<T>& e, std::vector<T>* first_components = nullptr);

// Eigenvalues of the symmetric Toeplitz matrix with the given first column.
// Uses the centrosymmetric split into two half-size problems. Non-increasing.
template <class T>
std::vector<T> symmetric_toeplitz_eigenvalues(std::span<const T> first_column);

}  // namespace fas
