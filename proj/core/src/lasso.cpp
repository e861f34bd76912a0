#include "sda/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sda/errors.hpp"

namespace sda {

namespace {

double soft_threshold(double z, double a) {
  if (z > a) return z - a;
  if (z < -a) return z + a;
  return 0.0;
}

struct GramWorkspace {
  const SymMatrix& gram;
  std::span<const double> xty;
  double y_sq;
  std::vector<double> mu;
  std::vector<double> q;  // gram * mu, maintained incrementally

  GramWorkspace(const SymMatrix& g, std::span<const double> c, double ysq,
                std::span<const double> warm)
      : gram(g), xty(c), y_sq(ysq), mu(g.dim(), 0.0), q(g.dim(), 0.0) {
    if (!warm.empty()) {
      mu.assign(warm.begin(), warm.end());
      const std::size_t p = g.dim();
      for (std::size_t j = 0; j < p; ++j) {
        if (mu[j] == 0.0) continue;
        const double* row = g.dense().data() + j * p;
        for (std::size_t i = 0; i < p; ++i) q[i] += row[i] * mu[j];
      }
    }
  }

  double objective(double penalty) const {
    double fit = y_sq;
    double l1 = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      fit += mu[j] * (q[j] - 2.0 * xty[j]);
      l1 += std::abs(mu[j]);
    }
    return fit + penalty * l1;
  }

  double rss() const {
    double fit = y_sq;
    for (std::size_t j = 0; j < mu.size(); ++j) fit += mu[j] * (q[j] - 2.0 * xty[j]);
    return fit;
  }

  // One full sweep; returns max KKT residual observed after the sweep.
  void sweep(double penalty) {
    const std::size_t p = gram.dim();
    for (std::size_t j = 0; j < p; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) {
        mu[j] = 0.0;
        continue;
      }
      const double z = xty[j] - q[j] + gjj * mu[j];
      const double updated = soft_threshold(z, 0.5 * penalty) / gjj;
      const double delta = updated - mu[j];
      if (delta != 0.0) {
        mu[j] = updated;
        const double* row = gram.dense().data() + j * p;
        for (std::size_t i = 0; i < p; ++i) q[i] += row[i] * delta;
      }
    }
  }

  // KKT residual of the stated objective: gradient of the smooth part is
  // 2(Gmu - c).
  double kkt_residual(double penalty) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const double grad = 2.0 * (q[j] - xty[j]);
      if (mu[j] != 0.0) {
        worst = std::max(worst, std::abs(grad + penalty * (mu[j] > 0.0 ? 1.0 : -1.0)));
      } else {
        const double excess = std::abs(grad) - penalty;
        if (excess > 0.0) worst = std::max(worst, excess);
      }
    }
    return worst;
  }
};

LassoFit run_cd(GramWorkspace& ws, double penalty, double tol, int max_sweeps) {
  LassoFit fit;
  fit.converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    ws.sweep(penalty);
    fit.sweeps = sweep + 1;
    fit.objective_trace.push_back(ws.objective(penalty));
    if (ws.kkt_residual(penalty) <= tol) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = ws.mu;
  return fit;
}

double resolve_tol(double tol, std::size_t p) { return tol > 0.0 ? tol : 1e-7 * static_cast<double>(p); }

std::vector<std::size_t> support_of(std::span<const double> coefficients) {
  std::vector<std::size_t> s;
  for (std::size_t j = 0; j < coefficients.size(); ++j)
    if (coefficients[j] != 0.0) s.push_back(j);
  return s;
}

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) throw InvalidInput("lasso_path_aic: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw InvalidInput("lasso_path_aic: grid values must be positive");
    if (i > 0 && !(grid[i] < grid[i - 1]))
      throw InvalidInput("lasso_path_aic: grid must be strictly descending");
  }
}

}  // namespace

double lambda_max(std::span<const double> xty) {
  double m = 0.0;
  for (double c : xty) m = std::max(m, std::abs(c));
  return 2.0 * m;
}

std::vector<double> default_lambda_grid(std::span<const double> xty, int points,
                                        double min_ratio) {
  const double lmax = lambda_max(xty);
  if (!(lmax > 0.0) || points < 1) return {};
  if (points == 1) return {lmax};
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = lmax * std::pow(min_ratio, static_cast<double>(i) / (points - 1));
  return grid;
}

LassoFit lasso_cd_gram(const SymMatrix& gram, std::span<const double> xty, double y_sq,
                       double penalty, double tol, int max_sweeps,
                       std::span<const double> warm_start) {
  if (xty.size() != gram.dim()) throw InvalidInput("lasso_cd_gram: dimension mismatch");
  if (!(penalty >= 0.0)) throw InvalidInput("lasso_cd_gram: penalty must be >= 0");
  GramWorkspace ws(gram, xty, y_sq, warm_start);
  return run_cd(ws, penalty, resolve_tol(tol, gram.dim()), max_sweeps);
}

LassoFit lasso_cd(const LassoProblem& problem, double tol, int max_sweeps) {
  const std::size_t p = problem.design.rows();
  if (problem.design.cols() != p || problem.response.size() != p)
    throw InvalidInput("lasso_cd: design must be square with matching response");
  // Gram and correlation vector; the design is small enough that forming the
  // Gram once is the fastest route for repeated sweeps.
  SymMatrix gram(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += problem.design(k, i) * problem.design(k, j);
      gram.set(i, j, acc);
    }
  }
  std::vector<double> xty(p, 0.0);
  double y_sq = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    y_sq += problem.response[k] * problem.response[k];
    for (std::size_t j = 0; j < p; ++j) xty[j] += problem.design(k, j) * problem.response[k];
  }
  return lasso_cd_gram(gram, xty, y_sq, problem.penalty, tol, max_sweeps);
}

ScreeningResult lasso_path_aic_gram(const SymMatrix& gram, std::span<const double> xty,
                                    double y_sq, std::span<const double> grid, int n1,
                                    double tol, int max_sweeps) {
  validate_grid(grid);
  if (n1 < 1) throw InvalidInput("lasso_path_aic: n1 must be >= 1");
  const std::size_t p = gram.dim();
  const double eff_tol = resolve_tol(tol, p);

  ScreeningResult best;
  bool have_best = false;
  int skipped = 0;

  GramWorkspace ws(gram, xty, y_sq, {});
  for (double penalty : grid) {
    LassoFit fit = run_cd(ws, penalty, eff_tol, max_sweeps);  // warm start carries over
    if (!fit.converged) {
      ++skipped;
      continue;
    }
    const auto support = support_of(fit.coefficients);
    const double aic = n1 * ws.rss() + 2.0 * static_cast<double>(support.size());
    if (!have_best || aic < best.aic_value) {
      best.coefficients = fit.coefficients;
      best.selected = support;
      best.penalty_used = penalty;
      best.aic_value = aic;
      have_best = true;
    }
  }
  if (!have_best)
    throw DidNotConverge("lasso_path_aic: no grid point converged");
  best.skipped_grid_points = skipped;
  return best;
}

ScreeningResult lasso_path_aic(const Matrix& design, std::span<const double> response,
                               std::span<const double> grid, int n1, double tol,
                               int max_sweeps) {
  const std::size_t p = design.rows();
  if (design.cols() != p || response.size() != p)
    throw InvalidInput("lasso_path_aic: design must be square with matching response");
  SymMatrix gram(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += design(k, i) * design(k, j);
      gram.set(i, j, acc);
    }
  }
  std::vector<double> xty(p, 0.0);
  double y_sq = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    y_sq += response[k] * response[k];
    for (std::size_t j = 0; j < p; ++j) xty[j] += design(k, j) * response[k];
  }
  return lasso_path_aic_gram(gram, xty, y_sq, grid, n1, tol, max_sweeps);
}

ScreeningResult cap_selection(ScreeningResult result, std::size_t cap) {
  if (cap < 1) throw InvalidInput("cap_selection: cap must be >= 1");
  if (result.selected.size() <= cap) return result;

  std::vector<std::size_t> order = result.selected;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(result.coefficients[a]);
    const double mb = std::abs(result.coefficients[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  order.resize(cap);
  std::sort(order.begin(), order.end());

  std::vector<double> kept(result.coefficients.size(), 0.0);
  for (std::size_t j : order) kept[j] = result.coefficients[j];
  result.coefficients = std::move(kept);
  result.selected = std::move(order);
  return result;
}

}  // namespace sda
