#include "sda/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "sda/errors.hpp"

namespace sda {

SymMatrix sample_covariance(const Matrix& rows) {
  const std::size_t n = rows.rows();
  const std::size_t p = rows.cols();
  if (n < 2) throw InvalidInput("sample_covariance: need at least two rows");
  std::vector<double> mean(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) mean[j] += rows(i, j);
  for (double& m : mean) m /= static_cast<double>(n);

  SymMatrix cov(p);
  std::vector<double> centered(p);
  Matrix acc(p, p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) centered[j] = rows(i, j) - mean[j];
    for (std::size_t a = 0; a < p; ++a) {
      const double ca = centered[a];
      if (ca == 0.0) continue;
      double* row = acc.data() + a * p;
      for (std::size_t b = a; b < p; ++b) row[b] += ca * centered[b];
    }
  }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a; b < p; ++b) cov.set(a, b, acc(a, b) / static_cast<double>(n));
  return cov;
}

double default_glasso_penalty(std::size_t p, std::size_t n1) {
  return std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n1));
}

GlassoResult graphical_lasso(const SymMatrix& sample_cov, double penalty, double tol,
                             int max_sweeps) {
  if (!(penalty >= 0.0)) throw InvalidInput("graphical_lasso: penalty must be >= 0");
  const std::size_t p = sample_cov.dim();
  if (p == 1) {
    GlassoResult r;
    r.covariance = sample_cov;
    r.precision = SymMatrix(1);
    r.precision.set(0, 0, 1.0 / sample_cov(0, 0));
    return r;
  }

  // W starts at S; the diagonal is unpenalized so W_jj = S_jj stays fixed.
  SymMatrix w = sample_cov;
  Matrix beta(p, p, 0.0);  // column j holds the lasso coefficients for block j

  double off_scale = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) off_scale += std::abs(sample_cov(i, j));
  off_scale /= static_cast<double>(p * (p - 1) / 2);
  const double stop = tol * std::max(off_scale, 1e-12);

  std::vector<std::size_t> rest(p - 1);
  std::vector<double> b(p - 1), s12(p - 1), grad(p - 1);

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      std::size_t k = 0;
      for (std::size_t i = 0; i < p; ++i)
        if (i != j) rest[k++] = i;
      for (std::size_t r = 0; r + 1 < p; ++r) {
        b[r] = beta(rest[r], j);
        s12[r] = sample_cov(rest[r], j);
      }
      // grad_r = sum_l W11[r,l] b_l, maintained incrementally.
      for (std::size_t r = 0; r + 1 < p; ++r) {
        double acc = 0.0;
        for (std::size_t l = 0; l + 1 < p; ++l) acc += w(rest[r], rest[l]) * b[l];
        grad[r] = acc;
      }
      for (int inner = 0; inner < 100; ++inner) {
        double inner_change = 0.0;
        for (std::size_t r = 0; r + 1 < p; ++r) {
          const double wrr = w(rest[r], rest[r]);
          if (wrr <= 0.0) continue;
          const double z = s12[r] - (grad[r] - wrr * b[r]);
          double updated;
          if (z > penalty)
            updated = (z - penalty) / wrr;
          else if (z < -penalty)
            updated = (z + penalty) / wrr;
          else
            updated = 0.0;
          const double delta = updated - b[r];
          if (delta != 0.0) {
            b[r] = updated;
            for (std::size_t l = 0; l + 1 < p; ++l) grad[l] += w(rest[l], rest[r]) * delta;
            inner_change = std::max(inner_change, std::abs(delta));
          }
        }
        if (inner_change <= 1e-2 * stop) break;
      }
      for (std::size_t r = 0; r + 1 < p; ++r) {
        const double w12 = grad[r];  // W11 * b
        max_change = std::max(max_change, std::abs(w(rest[r], j) - w12));
        w.set(rest[r], j, w12);
        beta(rest[r], j) = b[r];
      }
    }
    if (max_change <= stop) break;
  }
  if (sweep >= max_sweeps) throw DidNotConverge("graphical_lasso: sweep budget exhausted");

  // Recover the precision matrix column by column from the final blocks.
  SymMatrix theta(p);
  Matrix raw(p, p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      if (i != j) dot += w(i, j) * beta(i, j);
    const double theta_jj = 1.0 / (w(j, j) - dot);
    raw(j, j) = theta_jj;
    for (std::size_t i = 0; i < p; ++i)
      if (i != j) raw(i, j) = -beta(i, j) * theta_jj;
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) theta.set(i, j, 0.5 * (raw(i, j) + raw(j, i)));

  GlassoResult out;
  out.precision = std::move(theta);
  out.covariance = std::move(w);
  out.sweeps = sweep + 1;
  return out;
}

SymMatrix estimate_precision(const Matrix& d1, const PrecisionSpec& spec) {
  switch (spec.mode) {
    case PrecisionSpec::Mode::Known: {
      try {
        cholesky(spec.known);
      } catch (const SingularSystem&) {
        throw NotPSD("estimate_precision: known matrix is not positive definite");
      }
      return spec.known;
    }
    case PrecisionSpec::Mode::IdentityWorking:
      return SymMatrix::identity(d1.cols());
    case PrecisionSpec::Mode::GraphicalLasso: {
      const std::size_t n1 = d1.rows();
      const std::size_t p = d1.cols();
      if (n1 < 2) throw InvalidInput("estimate_precision: graphical lasso needs n1 >= 2");
      SymMatrix s = sample_covariance(d1);
      if (n1 <= p) {  // rank-deficient sample covariance
        double trace = 0.0;
        for (std::size_t i = 0; i < p; ++i) trace += s(i, i);
        const double ridge = 1e-4 * trace / static_cast<double>(p);
        for (std::size_t i = 0; i < p; ++i) s.set(i, i, s(i, i) + ridge);
      }
      const double penalty = spec.glasso_penalty.value_or(default_glasso_penalty(p, n1));
      return graphical_lasso(s, penalty).precision;
    }
  }
  throw InvalidInput("estimate_precision: unknown mode");
}

WhitenedProblem whiten_with_sqrt(const SymMatrix& omega_sqrt, std::span<const double> xi_bar_1,
                                 std::span<const double> xi_bar_2, int n1, int n2) {
  const std::size_t p = omega_sqrt.dim();
  if (xi_bar_1.size() != p || xi_bar_2.size() != p)
    throw InvalidInput("whiten: mean vectors must have length p");
  if (n1 < 1 || n2 < 1) throw InvalidInput("whiten: split sizes must be >= 1");
  WhitenedProblem out;
  out.x = omega_sqrt.dense();
  out.y1 = matvec(out.x, xi_bar_1);
  out.y2 = matvec(out.x, xi_bar_2);
  out.n1 = n1;
  out.n2 = n2;
  return out;
}

WhitenedProblem whiten(const SymMatrix& omega, std::span<const double> xi_bar_1,
                       std::span<const double> xi_bar_2, int n1, int n2) {
  return whiten_with_sqrt(sqrt_psd(omega), xi_bar_1, xi_bar_2, n1, n2);
}

RefitResult refit_lse(const WhitenedProblem& problem, std::span<const std::size_t> subset,
                      double ridge) {
  if (subset.empty()) throw InvalidInput("refit_lse: empty subset");
  const std::size_t p = problem.x.rows();
  const std::size_t m = subset.size();
  for (std::size_t k = 0; k < m; ++k) {
    if (subset[k] >= p) throw InvalidInput("refit_lse: subset index out of range");
    if (k > 0 && subset[k] <= subset[k - 1])
      throw InvalidInput("refit_lse: subset must be strictly increasing");
  }

  // Gram block and right-hand side straight from the columns of x.
  SymMatrix gram(m);
  std::vector<double> rhs(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t ja = subset[a];
    for (std::size_t b = a; b < m; ++b) {
      const std::size_t jb = subset[b];
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += problem.x(k, ja) * problem.x(k, jb);
      gram.set(a, b, acc);
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < p; ++k) acc += problem.x(k, ja) * problem.y2[k];
    rhs[a] = acc;
  }

  Matrix l = cholesky(gram, ridge);  // SingularSystem propagates to the caller
  const std::vector<double> mu_s = cholesky_solve(l, rhs);
  const SymMatrix inv = cholesky_inverse(l);

  RefitResult out;
  out.mu2.assign(p, 0.0);
  out.sigma.resize(m);
  out.subset.assign(subset.begin(), subset.end());
  out.ridge_used = ridge > 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    out.mu2[subset[a]] = mu_s[a];
    out.sigma[a] = std::sqrt(inv(a, a));
  }
  return out;
}

SymMatrix conditional_covariance(const SymMatrix& sigma, std::span<const std::size_t> subset) {
  const std::size_t p = sigma.dim();
  const std::size_t m = subset.size();
  if (m == 0) throw InvalidInput("conditional_covariance: empty subset");

  std::vector<char> in_subset(p, 0);
  for (std::size_t k = 0; k < m; ++k) {
    if (subset[k] >= p) throw InvalidInput("conditional_covariance: index out of range");
    if (k > 0 && subset[k] <= subset[k - 1])
      throw InvalidInput("conditional_covariance: subset must be strictly increasing");
    in_subset[subset[k]] = 1;
  }
  std::vector<std::size_t> complement;
  for (std::size_t j = 0; j < p; ++j)
    if (!in_subset[j]) complement.push_back(j);

  SymMatrix q = submatrix(sigma, subset);
  if (complement.empty()) return q;

  const SymMatrix s_cc = submatrix(sigma, complement);
  const Matrix l = cholesky(s_cc);

  // Column a of B = Sigma_{Sc,S}; subtract B' (Sigma_ScSc)^{-1} B.
  const std::size_t c = complement.size();
  Matrix solved(c, m, 0.0);
  std::vector<double> col(c);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t r = 0; r < c; ++r) col[r] = sigma(complement[r], subset[a]);
    const std::vector<double> x = cholesky_solve(l, col);
    for (std::size_t r = 0; r < c; ++r) solved(r, a) = x[r];
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      double acc = 0.0;
      for (std::size_t r = 0; r < c; ++r) acc += sigma(complement[r], subset[a]) * solved(r, b);
      q.set(a, b, q(a, b) - acc);
    }
  }
  return q;
}

}  // namespace sda
