#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlml {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

  std::span<const double> values() const noexcept { return values_; }

  DenseMatrix transposed() const;
  DenseMatrix operator*(const DenseMatrix& rhs) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

class NotPositiveDefiniteError : public std::runtime_error {
 public:
  explicit NotPositiveDefiniteError(std::size_t pivot);
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Lower-triangular L with L * L^T = a. Only the lower triangle of `a` is read.
/// Throws NotPositiveDefiniteError naming the first pivot that is not
/// strictly positive.
DenseMatrix cholesky(const DenseMatrix& a);

/// Solves L x = b for lower-triangular L.
std::vector<double> forward_substitute(const DenseMatrix& lower, std::span<const double> b);

/// Solves L^T x = b for lower-triangular L.
std::vector<double> back_substitute_transposed(const DenseMatrix& lower, std::span<const double> b);

/// Solves (L L^T) x = b given the Cholesky factor L.
std::vector<double> solve_spd(const DenseMatrix& factor, std::span<const double> b);

/// log det(L L^T) = 2 * sum(log L_ii).
double log_det_from_factor(const DenseMatrix& factor);

struct LeastSquares2 {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  bool singular = false;
};

/// Two-column least squares min ||z - a1*alpha1 - a2*alpha2|| via the 2x2
/// normal equations. `singular` is set (and the alphas left at zero) when the
/// Gram determinant vanishes relative to the column norms.
LeastSquares2 lstsq_2(std::span<const double> a1, std::span<const double> a2,
                      std::span<const double> z);

}  // namespace mlml
