#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "sda/linalg.hpp"
#include "sda/rng.hpp"

namespace test_helpers {

inline sda::Matrix make_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = rows.begin()->size();
  sda::Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline sda::SymMatrix make_sym(std::initializer_list<std::initializer_list<double>> rows) {
  return sda::SymMatrix::from_dense(make_matrix(rows));
}

inline sda::SymMatrix ar_covariance(double rho, std::size_t p) {
  sda::SymMatrix s(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) s.set(i, j, std::pow(rho, double(j - i)));
  return s;
}

// Well-conditioned random PSD matrix M M' / p + shift I.
inline sda::SymMatrix random_psd(std::size_t p, sda::Rng& rng, double shift = 0.0) {
  sda::Matrix m(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = rng.normal();
  sda::SymMatrix out(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += m(i, k) * m(j, k);
      out.set(i, j, acc / double(p) + (i == j ? shift : 0.0));
    }
  }
  return out;
}

// Random positive definite matrix rescaled to a unit diagonal.
inline sda::SymMatrix random_correlation(std::size_t p, sda::Rng& rng) {
  sda::SymMatrix a = random_psd(p, rng, 0.5);
  std::vector<double> d(p);
  for (std::size_t i = 0; i < p; ++i) d[i] = 1.0 / std::sqrt(a(i, i));
  sda::SymMatrix out(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) out.set(i, j, a(i, j) * d[i] * d[j]);
  return out;
}

inline double max_abs_diff(const sda::SymMatrix& a, const sda::SymMatrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

}  // namespace test_helpers
