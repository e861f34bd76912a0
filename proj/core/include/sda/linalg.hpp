#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sda {

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> matvec(const Matrix& m, std::span<const double> v);

// Symmetric matrix stored dense; writes go through set() which mirrors the
// entry, so entries[i][j] == entries[j][i] holds exactly by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim, double fill = 0.0) : dense_(dim, dim, fill) {}

  static SymMatrix identity(std::size_t dim);

  // Symmetrizes (a + a^T)/2; rejects input whose asymmetry exceeds
  // rel_tol * max|a|.
  static SymMatrix from_dense(const Matrix& a, double rel_tol = 1e-8);

  std::size_t dim() const { return dense_.rows(); }

  double operator()(std::size_t i, std::size_t j) const { return dense_(i, j); }

  void set(std::size_t i, std::size_t j, double value) {
    dense_(i, j) = value;
    dense_(j, i) = value;
  }

  const Matrix& dense() const { return dense_; }

  double max_abs() const;

 private:
  Matrix dense_;
};

// Eigenvalues descending; vectors holds the matching orthonormal eigenvectors
// as columns.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;
};

// Cyclic Jacobi eigendecomposition. Throws InvalidInput on non-finite
// entries, NumericalFailure if the sweep budget is exhausted.
EigenDecomposition sym_eigen(const SymMatrix& a);

// Symmetric PSD square root B with B*B == a up to 1e-8 * max|a|. Eigenvalues
// in [-eig_floor, 0) are clamped to zero; anything below throws NotPSD.
SymMatrix sqrt_psd(const SymMatrix& a, double eig_floor);
SymMatrix sqrt_psd(const SymMatrix& a);  // eig_floor = 1e-10 * max|a|

double default_eig_floor(const SymMatrix& a);

// Solves a*x = b for positive definite a (Cholesky). Near-singular pivots
// throw SingularSystem.
std::vector<double> solve_psd(const SymMatrix& a, std::span<const double> b);

// Principal submatrix a[idx, idx]; idx must be strictly increasing and within
// range.
SymMatrix submatrix(const SymMatrix& a, std::span<const std::size_t> idx);

// Lower-triangular Cholesky factor of a positive definite matrix. `ridge` is
// added to the diagonal before factoring. Throws SingularSystem when a pivot
// falls below pivot_rel_tol * max diagonal.
Matrix cholesky(const SymMatrix& a, double ridge = 0.0, double pivot_rel_tol = 1e-12);

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b);

// Inverse from a Cholesky factor; result is exactly symmetric.
SymMatrix cholesky_inverse(const Matrix& l);

SymMatrix inverse_psd(const SymMatrix& a);

}  // namespace sda
