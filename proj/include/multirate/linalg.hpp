#pragma once

// Small dense linear-algebra kit: vectors, row-major matrices, infinity
// norms and LU factorization with partial pivoting. Problems in this
// library are desk-scale (a handful of unknowns), so no external linear
// algebra dependency is pulled in.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace multirate {

using Vec = std::vector<double>;

struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;  // row-major

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

class singular_matrix_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] inline double inf_norm(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Induced infinity norm (maximum absolute row sum).
[[nodiscard]] inline double inf_norm(const Mat& m) {
    double best = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

[[nodiscard]] inline Vec axpy(double alpha, const Vec& x, const Vec& y) {
    Vec r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = alpha * x[i] + y[i];
    return r;
}

namespace detail {

// In-place LU with partial pivoting; perm holds the row permutation.
inline void lu_factor(Mat& m, std::vector<std::size_t>& perm) {
    const std::size_t n = m.rows;
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(m(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(m(i, k)) > best) {
                best = std::abs(m(i, k));
                piv = i;
            }
        }
        if (best == 0.0 || !std::isfinite(best))
            throw singular_matrix_error("LU factorization failed: singular or non-finite pivot");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(perm[k], perm[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            m(i, k) /= m(k, k);
            const double lik = m(i, k);
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= lik * m(k, j);
        }
    }
}

inline Vec lu_apply(const Mat& lu, const std::vector<std::size_t>& perm, const Vec& b) {
    const std::size_t n = lu.rows;
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu(ii, j) * x[j];
        x[ii] /= lu(ii, ii);
    }
    return x;
}

}  // namespace detail

/// Solve A x = b by dense LU with partial pivoting.
[[nodiscard]] inline Vec lu_solve(Mat A, const Vec& b) {
    if (A.rows != A.cols || A.rows != b.size())
        throw std::invalid_argument("lu_solve: dimension mismatch");
    std::vector<std::size_t> perm;
    detail::lu_factor(A, perm);
    return detail::lu_apply(A, perm, b);
}

/// Solve A X = B column by column (B and X are rows x cols matrices).
[[nodiscard]] inline Mat lu_solve(Mat A, const Mat& B) {
    if (A.rows != A.cols || A.rows != B.rows)
        throw std::invalid_argument("lu_solve: dimension mismatch");
    std::vector<std::size_t> perm;
    detail::lu_factor(A, perm);
    Mat X(B.rows, B.cols);
    Vec col(B.rows);
    for (std::size_t j = 0; j < B.cols; ++j) {
        for (std::size_t i = 0; i < B.rows; ++i) col[i] = B(i, j);
        Vec x = detail::lu_apply(A, perm, col);
        for (std::size_t i = 0; i < B.rows; ++i) X(i, j) = x[i];
    }
    return X;
}

/// Forward-difference Jacobian of fn at x with per-component increment
/// eps * (1 + |x_j|).
[[nodiscard]] inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x,
                                     double eps) {
    const Vec f0 = fn(x);
    Mat jac(f0.size(), x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double dj = eps * (1.0 + std::abs(x[j]));
        Vec xp = x;
        xp[j] += dj;
        const Vec fp = fn(xp);
        for (std::size_t i = 0; i < f0.size(); ++i) jac(i, j) = (fp[i] - f0[i]) / dj;
    }
    return jac;
}

/// Infinity-norm condition estimate via explicit inverse (fine at desk scale).
[[nodiscard]] inline double cond_inf(const Mat& A) {
    Mat eye(A.rows, A.cols);
    for (std::size_t i = 0; i < A.rows; ++i) eye(i, i) = 1.0;
    Mat inv = lu_solve(A, eye);
    return inf_norm(A) * inf_norm(inv);
}

}  // namespace multirate
