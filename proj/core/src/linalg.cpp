#include "sda/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sda/errors.hpp"

namespace sda {

std::vector<double> matvec(const Matrix& m, std::span<const double> v) {
  if (v.size() != m.cols()) throw InvalidInput("matvec: dimension mismatch");
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.data() + i * m.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::from_dense(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw InvalidInput("SymMatrix::from_dense: matrix must be square and non-empty");
  const std::size_t p = a.rows();
  double max_abs = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) max_abs = std::max(max_abs, std::abs(a(i, j)));
  SymMatrix out(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * std::max(max_abs, 1.0))
        throw InvalidInput("SymMatrix::from_dense: input is not symmetric");
      out.set(i, j, 0.5 * (a(i, j) + a(j, i)));
    }
  }
  return out;
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  const std::size_t p = dim();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) m = std::max(m, std::abs(dense_(i, j)));
  return m;
}

namespace {

// One Jacobi rotation zeroing a(p,q); updates a (full symmetric storage) and
// the accumulated eigenvector columns in v.
void jacobi_rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const std::size_t n = a.rows();
  const double apq = a(p, q);
  const double app = a(p, p);
  const double aqq = a(q, q);

  const double tau = (aqq - app) / (2.0 * apq);
  double t;
  if (tau >= 0.0)
    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
  else
    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  a(p, p) = app - t * apq;
  a(q, q) = aqq + t * apq;
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = a(k, p);
    const double akq = a(k, q);
    const double nkp = c * akp - s * akq;
    const double nkq = s * akp + c * akq;
    a(k, p) = nkp;
    a(p, k) = nkp;
    a(k, q) = nkq;
    a(q, k) = nkq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenDecomposition sym_eigen(const SymMatrix& input) {
  const std::size_t n = input.dim();
  Matrix a = input.dense();
  for (std::size_t i = 0; i < n * n; ++i) {
    if (!std::isfinite(a.data()[i])) throw InvalidInput("sym_eigen: non-finite entry");
  }

  Matrix v(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const double scale = std::max(input.max_abs(), 1e-300);
  const double stop = 1e-12 * scale;
  const int max_sweeps = 64;

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= stop) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) > stop * 1e-2) jacobi_rotate(a, v, p, q);
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off > stop) throw NumericalFailure("sym_eigen: Jacobi sweeps exhausted");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double default_eig_floor(const SymMatrix& a) { return 1e-10 * std::max(a.max_abs(), 1e-300); }

SymMatrix sqrt_psd(const SymMatrix& a, double eig_floor) {
  const std::size_t n = a.dim();
  EigenDecomposition eig = sym_eigen(a);
  std::vector<double> roots(n);
  for (std::size_t k = 0; k < n; ++k) {
    double lambda = eig.values[k];
    if (lambda < -eig_floor) throw NotPSD("sqrt_psd: eigenvalue below -eig_floor");
    if (lambda < 0.0) lambda = 0.0;
    roots[k] = std::sqrt(lambda);
  }
  SymMatrix b(n);
  const Matrix& v = eig.vectors;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += v(i, k) * roots[k] * v(j, k);
      b.set(i, j, acc);
    }
  }
  return b;
}

SymMatrix sqrt_psd(const SymMatrix& a) { return sqrt_psd(a, default_eig_floor(a)); }

Matrix cholesky(const SymMatrix& a, double ridge, double pivot_rel_tol) {
  const std::size_t n = a.dim();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i) + ridge));
  const double pivot_floor = pivot_rel_tol * std::max(max_diag, 1e-300);

  Matrix l(n, n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) + ridge;
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor)) throw SingularSystem("cholesky: non-positive pivot");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = a(i, j) + (i == j ? ridge : 0.0);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw InvalidInput("cholesky_solve: dimension mismatch");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b[i];
    for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * y[k];
    y[i] = acc / l(i, i);
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) acc -= l(k, ii) * x[k];
    x[ii] = acc / l(ii, ii);
  }
  return x;
}

SymMatrix cholesky_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  // Invert L in place (lower triangular), then form L^{-T} L^{-1}.
  Matrix inv(n, n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = j; k < i; ++k) acc += l(i, k) * inv(k, j);
      inv(i, j) = -acc / l(i, i);
    }
  }
  SymMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = std::max(i, j); k < n; ++k) acc += inv(k, i) * inv(k, j);
      out.set(i, j, acc);
    }
  }
  return out;
}

SymMatrix inverse_psd(const SymMatrix& a) { return cholesky_inverse(cholesky(a)); }

std::vector<double> solve_psd(const SymMatrix& a, std::span<const double> b) {
  if (b.size() != a.dim()) throw InvalidInput("solve_psd: dimension mismatch");
  return cholesky_solve(cholesky(a), b);
}

SymMatrix submatrix(const SymMatrix& a, std::span<const std::size_t> idx) {
  if (idx.empty()) throw InvalidInput("submatrix: empty index set");
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= a.dim()) throw InvalidInput("submatrix: index out of range");
    if (k > 0 && idx[k] <= idx[k - 1])
      throw InvalidInput("submatrix: indices must be strictly increasing");
  }
  SymMatrix out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = r; c < idx.size(); ++c) out.set(r, c, a(idx[r], idx[c]));
  return out;
}

}  // namespace sda
