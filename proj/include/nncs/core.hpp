#pragma once

// Dense column-major matrix, vector helpers, norms, and a Householder-QR
// least-squares solver. Everything is desk scale (hundreds of rows/columns),
// so plain dense algorithms are used throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nncs {

using Vec = std::vector<double>;

struct rank_deficient_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require_finite(std::span<const double> xs, const char* what) {
  if (!all_finite(xs)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

// Column-major dense matrix. Entry (i,j) lives at data[i + j*rows].
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  DenseMatrix(std::size_t rows, std::size_t cols, Vec data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw std::invalid_argument("DenseMatrix: data size does not match dimensions");
    require_finite(data_, "DenseMatrix");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  DenseMatrix transposed() const {
    DenseMatrix T(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < rows_; ++i) T(j, i) = (*this)(i, j);
    return T;
  }

  // Copies the listed columns, in the order given.
  DenseMatrix columns(const std::vector<std::size_t>& idx) const {
    DenseMatrix S(rows_, idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] >= cols_) throw std::out_of_range("DenseMatrix::columns: index out of range");
      std::copy_n(data_.data() + idx[k] * rows_, rows_, S.data_.data() + k * rows_);
    }
    return S;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

inline Vec mat_vec(const DenseMatrix& A, const Vec& x) {
  if (x.size() != A.cols()) throw std::invalid_argument("mat_vec: dimension mismatch");
  Vec y(A.rows(), 0.0);
  for (std::size_t j = 0; j < A.cols(); ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    auto c = A.col(j);
    for (std::size_t i = 0; i < A.rows(); ++i) y[i] += c[i] * xj;
  }
  return y;
}

// A^T y without forming the transpose.
inline Vec mat_tvec(const DenseMatrix& A, const Vec& y) {
  if (y.size() != A.rows()) throw std::invalid_argument("mat_tvec: dimension mismatch");
  Vec z(A.cols(), 0.0);
  for (std::size_t j = 0; j < A.cols(); ++j) {
    auto c = A.col(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < A.rows(); ++i) acc += c[i] * y[i];
    z[j] = acc;
  }
  return z;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm1(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += std::abs(v);
  return acc;
}

inline double norm_inf(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc = std::max(acc, std::abs(v));
  return acc;
}

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double l4_pow4 = 0.0;  // fourth power of the l4 norm
};

inline Norms norms(std::span<const double> x) {
  Norms n;
  double sq = 0.0;
  for (double v : x) {
    const double a = std::abs(v);
    n.l1 += a;
    sq += v * v;
    n.linf = std::max(n.linf, a);
    n.l4_pow4 += v * v * v * v;
  }
  n.l2 = std::sqrt(sq);
  return n;
}

inline Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sub: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

// Least squares min ||Ax - y||_2 by Householder QR, rows >= cols required.
// Throws rank_deficient_error when a pivot collapses, i.e. A lacks full
// column rank at working precision.
inline Vec ls_solve(const DenseMatrix& A, const Vec& y) {
  const std::size_t m = A.rows(), n = A.cols();
  if (y.size() != m) throw std::invalid_argument("ls_solve: dimension mismatch");
  if (n == 0) return {};
  if (m < n) throw std::invalid_argument("ls_solve: underdetermined system");

  DenseMatrix R = A;
  Vec q = y;

  double colmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) colmax = std::max(colmax, norm2(A.col(j)));
  const double tol = 1e-12 * std::max(colmax, 1e-300);

  for (std::size_t j = 0; j < n; ++j) {
    double sigma = 0.0;
    for (std::size_t i = j; i < m; ++i) sigma += R(i, j) * R(i, j);
    sigma = std::sqrt(sigma);
    if (sigma <= tol) throw rank_deficient_error("ls_solve: rank-deficient column " + std::to_string(j));

    const double alpha = (R(j, j) > 0.0) ? -sigma : sigma;
    // Householder vector v stored in place of the eliminated column tail.
    Vec v(m - j);
    v[0] = R(j, j) - alpha;
    for (std::size_t i = j + 1; i < m; ++i) v[i - j] = R(i, j);
    const double vnorm2 = sigma * sigma - 2.0 * alpha * R(j, j) + alpha * alpha;
    // vnorm2 = ||x||^2 - 2 alpha x0 + alpha^2 with alpha = -sign(x0)||x||, always > 0 here

    R(j, j) = alpha;
    for (std::size_t i = j + 1; i < m; ++i) R(i, j) = 0.0;

    for (std::size_t k = j + 1; k < n; ++k) {
      double proj = 0.0;
      for (std::size_t i = j; i < m; ++i) proj += v[i - j] * R(i, k);
      const double scale = 2.0 * proj / vnorm2;
      for (std::size_t i = j; i < m; ++i) R(i, k) -= scale * v[i - j];
    }
    double proj = 0.0;
    for (std::size_t i = j; i < m; ++i) proj += v[i - j] * q[i];
    const double scale = 2.0 * proj / vnorm2;
    for (std::size_t i = j; i < m; ++i) q[i] -= scale * v[i - j];
  }

  Vec x(n, 0.0);
  for (std::size_t jj = n; jj-- > 0;) {
    double acc = q[jj];
    for (std::size_t k = jj + 1; k < n; ++k) acc -= R(jj, k) * x[k];
    x[jj] = acc / R(jj, jj);
  }
  return x;
}

// Least squares restricted to a column subset; returns coefficients in the
// order of idx.
inline Vec ls_solve_cols(const DenseMatrix& A, const Vec& y, const std::vector<std::size_t>& idx) {
  return ls_solve(A.columns(idx), y);
}

}  // namespace nncs
