#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace symsplit {

/// Row-major dense matrix; just enough for the small systems in the solver.
template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("matrix shape mismatch");
        Matrix out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T& aik = a(i, k);
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }

    std::vector<T> apply(const std::vector<T>& x) const {
        if (x.size() != cols_) throw std::invalid_argument("matrix-vector shape mismatch");
        std::vector<T> y(rows_, T(0));
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
template <class T>
auto magnitude(const T& x) {
    using std::abs;
    return abs(x);
}
}  // namespace detail

/// Solves A x = b by Gaussian elimination with partial pivoting.
template <class T>
std::vector<T> lu_solve(Matrix<T> a, std::vector<T> b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw std::invalid_argument("lu_solve needs a square system");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        auto best = detail::magnitude(a(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            auto m = detail::magnitude(a(r, col));
            if (m > best) {
                best = m;
                piv = r;
            }
        }
        if (best == 0) throw SingularMatrixError("singular matrix in lu_solve");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
            std::swap(b[piv], b[col]);
        }
        const T inv = T(1) / a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            T factor = a(r, col) * inv;
            if (factor == T(0)) continue;
            for (std::size_t c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
            b[r] -= factor * b[col];
        }
    }
    std::vector<T> x(n);
    for (std::size_t i = n; i-- > 0;) {
        T acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a(i, c) * x[c];
        x[i] = acc / a(i, i);
    }
    return x;
}

template <class T>
auto norm2(const std::vector<T>& v) {
    using std::abs;
    using std::sqrt;
    decltype(abs(v.front())) acc = 0;
    for (const auto& x : v) {
        auto m = abs(x);
        acc += m * m;
    }
    return sqrt(acc);
}

template <class T>
auto norm_inf(const std::vector<T>& v) {
    using std::abs;
    decltype(abs(v.front())) acc = 0;
    for (const auto& x : v) {
        auto m = abs(x);
        if (m > acc) acc = m;
    }
    return acc;
}

}  // namespace symsplit
