#include "mlml/linalg.hpp"

#include <cmath>

namespace mlml {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("DenseMatrix: value count does not match shape");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw std::invalid_argument("DenseMatrix: shape mismatch in product");
  DenseMatrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      auto dst = out.row(i);
      auto src = rhs.row(k);
      for (std::size_t j = 0; j < rhs.cols_; ++j) dst[j] += a * src[j];
    }
  }
  return out;
}

NotPositiveDefiniteError::NotPositiveDefiniteError(std::size_t pivot)
    : std::runtime_error("matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
      pivot_(pivot) {}

DenseMatrix cholesky(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: matrix must be square");
  const std::size_t n = a.rows();
  DenseMatrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* li = l.row(i).data();
    for (std::size_t j = 0; j <= i; ++j) {
      const double* lj = l.row(j).data();
      double dot = 0.0;
#pragma omp simd reduction(+ : dot)
      for (std::size_t k = 0; k < j; ++k) dot += li[k] * lj[k];
      const double s = a(i, j) - dot;
      if (i == j) {
        if (!(s > 0.0)) throw NotPositiveDefiniteError(i);
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

std::vector<double> forward_substitute(const DenseMatrix& lower, std::span<const double> b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) throw std::invalid_argument("forward_substitute: dimension mismatch");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* li = lower.row(i).data();
    double dot = 0.0;
#pragma omp simd reduction(+ : dot)
    for (std::size_t k = 0; k < i; ++k) dot += li[k] * x[k];
    x[i] = (b[i] - dot) / li[i];
  }
  return x;
}

std::vector<double> back_substitute_transposed(const DenseMatrix& lower, std::span<const double> b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) throw std::invalid_argument("back_substitute_transposed: dimension mismatch");
  std::vector<double> x(b.begin(), b.end());
  // Column-oriented sweep so the inner loop walks rows of L contiguously.
  for (std::size_t ii = n; ii-- > 0;) {
    x[ii] /= lower(ii, ii);
    const double xi = x[ii];
    const double* li = lower.row(ii).data();
#pragma omp simd
    for (std::size_t k = 0; k < ii; ++k) x[k] -= li[k] * xi;
  }
  return x;
}

std::vector<double> solve_spd(const DenseMatrix& factor, std::span<const double> b) {
  return back_substitute_transposed(factor, forward_substitute(factor, b));
}

double log_det_from_factor(const DenseMatrix& factor) {
  double s = 0.0;
  for (std::size_t i = 0; i < factor.rows(); ++i) s += std::log(factor(i, i));
  return 2.0 * s;
}

LeastSquares2 lstsq_2(std::span<const double> a1, std::span<const double> a2,
                      std::span<const double> z) {
  if (a1.size() != a2.size() || a1.size() != z.size()) {
    throw std::invalid_argument("lstsq_2: column lengths differ");
  }
  double g11 = 0.0, g12 = 0.0, g22 = 0.0, r1 = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    g11 += a1[i] * a1[i];
    g12 += a1[i] * a2[i];
    g22 += a2[i] * a2[i];
    r1 += a1[i] * z[i];
    r2 += a2[i] * z[i];
  }
  const double det = g11 * g22 - g12 * g12;
  LeastSquares2 out;
  if (!(g11 > 0.0) || !(g22 > 0.0) || det <= 1e-12 * g11 * g22) {
    out.singular = true;
    return out;
  }
  out.alpha1 = (g22 * r1 - g12 * r2) / det;
  out.alpha2 = (g11 * r2 - g12 * r1) / det;
  return out;
}

}  // namespace mlml
