#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sda/linalg.hpp"

namespace sda {

// Penalized least squares (y - X mu)'(y - X mu) + lambda * ||mu||_1 with a
// square design, as produced by whitening.
struct LassoProblem {
  Matrix design;                 // p x p
  std::vector<double> response;  // length p
  double penalty = 0.0;
};

struct LassoFit {
  std::vector<double> coefficients;
  bool converged = true;
  int sweeps = 0;
  std::vector<double> objective_trace;  // objective after each sweep
};

struct ScreeningResult {
  std::vector<double> coefficients;   // length p, zero outside `selected`
  std::vector<std::size_t> selected;  // support, ascending
  double penalty_used = 0.0;
  double aic_value = 0.0;
  int skipped_grid_points = 0;  // grid points dropped for non-convergence
};

// Coordinate descent on the stated objective. KKT tolerance `tol`; when the
// sweep budget runs out the best iterate is returned with converged=false.
LassoFit lasso_cd(const LassoProblem& problem, double tol, int max_sweeps);

// Precomputed-Gram form: gram = X'X, xty = X'y, y_sq = y'y. The pipeline uses
// this route so the precision matrix doubles as the Gram matrix.
LassoFit lasso_cd_gram(const SymMatrix& gram, std::span<const double> xty, double y_sq,
                       double penalty, double tol, int max_sweeps,
                       std::span<const double> warm_start = {});

// Pathwise solve over a descending grid, warm-started, returning the grid
// point minimizing AIC(lambda) = n1 * RSS(lambda) + 2 * |support|.
// Non-converged grid points are skipped and counted, never silently used.
ScreeningResult lasso_path_aic(const Matrix& design, std::span<const double> response,
                               std::span<const double> grid, int n1, double tol = -1.0,
                               int max_sweeps = 10000);
ScreeningResult lasso_path_aic_gram(const SymMatrix& gram, std::span<const double> xty,
                                    double y_sq, std::span<const double> grid, int n1,
                                    double tol = -1.0, int max_sweeps = 10000);

// Keeps the `cap` largest |coefficients| (ties to the smaller index), zeroing
// the rest; no-op when the support is already within the cap.
ScreeningResult cap_selection(ScreeningResult result, std::size_t cap);

// 50 log-spaced points from lambda_max = 2||X'y||_inf down to
// min_ratio * lambda_max. Empty when lambda_max == 0.
std::vector<double> default_lambda_grid(std::span<const double> xty, int points = 50,
                                        double min_ratio = 1e-3);

double lambda_max(std::span<const double> xty);

}  // namespace sda
