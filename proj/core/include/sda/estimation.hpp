#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sda/linalg.hpp"

namespace sda {

// How the precision matrix is obtained.
struct PrecisionSpec {
  enum class Mode { Known, IdentityWorking, GraphicalLasso };

  Mode mode = Mode::IdentityWorking;
  SymMatrix known;                       // Known mode only
  std::optional<double> glasso_penalty;  // default sqrt(log p / n1)

  static PrecisionSpec known_matrix(SymMatrix omega) {
    PrecisionSpec s;
    s.mode = Mode::Known;
    s.known = std::move(omega);
    return s;
  }
  static PrecisionSpec identity_working() { return {}; }
  static PrecisionSpec graphical_lasso(std::optional<double> penalty = {}) {
    PrecisionSpec s;
    s.mode = Mode::GraphicalLasso;
    s.glasso_penalty = penalty;
    return s;
  }
};

// Whitened regression data: x = Omega^{1/2}, y_k = x * split-mean_k.
struct WhitenedProblem {
  Matrix x;
  std::vector<double> y1;
  std::vector<double> y2;
  int n1 = 0;
  int n2 = 0;
};

// Restricted least squares on the screened subset.
struct RefitResult {
  std::vector<double> mu2;            // length p, zero off the subset
  std::vector<double> sigma;          // per subset position, sqrt diag (X_S'X_S)^{-1}
  std::vector<std::size_t> subset;    // ascending feature indices
  bool ridge_used = false;
};

struct GlassoResult {
  SymMatrix precision;
  SymMatrix covariance;  // the fitted W matrix
  int sweeps = 0;
};

// Blockwise coordinate-descent graphical lasso with the off-diagonal-only
// penalty. Throws DidNotConverge when the sweep budget runs out.
GlassoResult graphical_lasso(const SymMatrix& sample_cov, double penalty, double tol = 1e-4,
                             int max_sweeps = 200);

// Maximum-likelihood (1/n) sample covariance of the rows, centered at the
// column means.
SymMatrix sample_covariance(const Matrix& rows);

// Resolves a PrecisionSpec against the first split. Known mode validates
// positive definiteness; GraphicalLasso adds a 1e-4*trace/p ridge to the
// sample covariance when it is rank deficient.
SymMatrix estimate_precision(const Matrix& d1, const PrecisionSpec& spec);

double default_glasso_penalty(std::size_t p, std::size_t n1);

WhitenedProblem whiten(const SymMatrix& omega, std::span<const double> xi_bar_1,
                       std::span<const double> xi_bar_2, int n1, int n2);

// Same as whiten() with a precomputed square root (cached across replications
// when the precision matrix is fixed).
WhitenedProblem whiten_with_sqrt(const SymMatrix& omega_sqrt, std::span<const double> xi_bar_1,
                                 std::span<const double> xi_bar_2, int n1, int n2);

// mu2 restricted to `subset` = (X_S'X_S + ridge I)^{-1} X_S'y2, zero
// elsewhere; sigma_j = sqrt of the j-th diagonal of the inverse. Throws
// SingularSystem when the Gram block is not invertible.
RefitResult refit_lse(const WhitenedProblem& problem, std::span<const std::size_t> subset,
                      double ridge = 0.0);

// Schur complement Sigma_SS - Sigma_SSc Sigma_ScSc^{-1} Sigma_ScS; returns
// Sigma_SS when the complement is empty.
SymMatrix conditional_covariance(const SymMatrix& sigma, std::span<const std::size_t> subset);

}  // namespace sda
